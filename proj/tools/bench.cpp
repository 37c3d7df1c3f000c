// Benchmark comparing the serial reference kernels against their OpenMP
// counterparts: tree convolution (forward/backward), k-means assignment,
// pairwise cosine, query similarity, and batched example gradients.

#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <functional>

#include "s2v/corpus.hpp"
#include "s2v/kernels.hpp"
#include "s2v/parallel.hpp"
#include "s2v/trainer.hpp"

using namespace s2v;
using Clock = std::chrono::steady_clock;

namespace {

double ms_of(const std::function<void()>& fn, int repeat) {
    double best = 1e18;
    for (int r = 0; r < repeat; ++r) {
        auto t0 = Clock::now();
        fn();
        auto t1 = Clock::now();
        best = std::min(
            best, std::chrono::duration<double, std::milli>(t1 - t0).count());
    }
    return best;
}

double max_abs_diff(const std::vector<double>& a,
                    const std::vector<double>& b) {
    double worst = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        worst = std::max(worst, std::abs(a[i] - b[i]));
    return worst;
}

void row(const char* name, double serial_ms, double omp_ms, double diff) {
    std::printf("%-28s %10.2f ms %10.2f ms %8.2fx   max|d|=%.3g\n", name,
                serial_ms, omp_ms, serial_ms / omp_ms, diff);
}

ConvWindows random_tree_windows(std::size_t n, Rng& rng) {
    ConvWindows win;
    win.children.resize(n);
    win.parent.assign(n, {});
    for (std::size_t i = 1; i < n; ++i) {
        std::size_t parent = i == 1 ? 0 : rng.index(i);
        win.children[parent].push_back({int(i), 0.0, 0.0});
    }
    for (std::size_t p = 0; p < n; ++p) {
        std::size_t m = win.children[p].size();
        for (std::size_t c = 0; c < m; ++c) {
            double eta_r = m == 1 ? 0.5 : double(c) / double(m - 1);
            win.children[p][c].eta_l = m == 1 ? 0.5 : 1.0 - eta_r;
            win.children[p][c].eta_r = eta_r;
            win.parent[win.children[p][c].pos] = {
                int(p), win.children[p][c].eta_l, win.children[p][c].eta_r};
        }
    }
    return win;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"serial vs OpenMP kernel benchmark"};
    std::size_t nodes = 20000, dim = 64, points = 20000, clusters = 16;
    std::size_t pairs_n = 1500;
    int repeat = 3, jobs = 0, batch_programs = 48;
    app.add_option("--nodes", nodes, "tree nodes for the convolution kernels");
    app.add_option("--dim", dim, "embedding dimension");
    app.add_option("--points", points, "points for k-means assignment");
    app.add_option("--clusters", clusters, "centroid count");
    app.add_option("--pairs", pairs_n, "vectors for the pairwise kernel");
    app.add_option("--repeat", repeat, "repetitions (best-of)");
    app.add_option("--jobs", jobs, "worker cap (0 = all cores)");
    app.add_option("--programs", batch_programs,
                   "programs for the batch-gradient comparison");
    CLI11_PARSE(app, argc, argv);
    par::set_max_jobs(jobs);

    Rng rng(1);
    std::printf("%-28s %13s %13s %9s\n", "kernel", "serial", "openmp",
                "speedup");

    {  // tree convolution
        ConvWindows win = random_tree_windows(nodes, rng);
        std::vector<double> states(nodes * dim), wt(dim * dim), wl(dim * dim),
            wr(dim * dim), bias(dim), dy(nodes * dim);
        for (auto* v : {&states, &wt, &wl, &wr, &bias, &dy})
            for (double& x : *v) x = rng.uniform(-1, 1);
        std::vector<double> y1(nodes * dim), y2(nodes * dim);
        double fs = ms_of(
            [&] {
                kern::tree_conv_forward_serial(states.data(), nodes, dim,
                                               wt.data(), wl.data(), wr.data(),
                                               bias.data(), win, y1.data());
            },
            repeat);
        double fo = ms_of(
            [&] {
                kern::tree_conv_forward_omp(states.data(), nodes, dim,
                                            wt.data(), wl.data(), wr.data(),
                                            bias.data(), win, y2.data());
            },
            repeat);
        row("tree_conv forward", fs, fo, max_abs_diff(y1, y2));

        std::vector<double> ds1(nodes * dim), dwt1(dim * dim),
            dwl1(dim * dim), dwr1(dim * dim), db1(dim);
        std::vector<double> ds2(nodes * dim), dwt2(dim * dim),
            dwl2(dim * dim), dwr2(dim * dim), db2(dim);
        double bs = ms_of(
            [&] {
                for (auto* v : {&ds1, &dwt1, &dwl1, &dwr1, &db1})
                    std::fill(v->begin(), v->end(), 0.0);
                kern::tree_conv_backward_serial(
                    states.data(), y1.data(), dy.data(), nodes, dim, wt.data(),
                    wl.data(), wr.data(), win, ds1.data(), dwt1.data(),
                    dwl1.data(), dwr1.data(), db1.data());
            },
            repeat);
        double bo = ms_of(
            [&] {
                for (auto* v : {&ds2, &dwt2, &dwl2, &dwr2, &db2})
                    std::fill(v->begin(), v->end(), 0.0);
                kern::tree_conv_backward_omp(
                    states.data(), y1.data(), dy.data(), nodes, dim, wt.data(),
                    wl.data(), wr.data(), win, ds2.data(), dwt2.data(),
                    dwl2.data(), dwr2.data(), db2.data());
            },
            repeat);
        row("tree_conv backward", bs, bo, max_abs_diff(dwt1, dwt2));
    }

    {  // k-means assignment
        std::vector<double> pts(points * dim), cents(clusters * dim);
        for (auto* v : {&pts, &cents})
            for (double& x : *v) x = rng.uniform(-2, 2);
        std::vector<int> a1(points), a2(points);
        double as = ms_of(
            [&] {
                kern::assign_nearest_serial(pts.data(), points, dim,
                                            cents.data(), clusters, a1.data());
            },
            repeat);
        double ao = ms_of(
            [&] {
                kern::assign_nearest_omp(pts.data(), points, dim, cents.data(),
                                         clusters, a2.data());
            },
            repeat);
        double diff = 0.0;
        for (std::size_t i = 0; i < points; ++i)
            diff = std::max(diff, double(std::abs(a1[i] - a2[i])));
        row("kmeans assign", as, ao, diff);
    }

    {  // similarity kernels
        std::vector<double> rows_data(pairs_n * dim), query(dim);
        for (auto* v : {&rows_data, &query})
            for (double& x : *v) x = rng.uniform(-2, 2);
        std::vector<double> s1(pairs_n), s2(pairs_n);
        double qs = ms_of(
            [&] {
                kern::similarity_row_serial(query.data(), rows_data.data(),
                                            pairs_n, dim, s1.data());
            },
            repeat);
        double qo = ms_of(
            [&] {
                kern::similarity_row_omp(query.data(), rows_data.data(),
                                         pairs_n, dim, s2.data());
            },
            repeat);
        row("query similarity", qs, qo, max_abs_diff(s1, s2));

        std::vector<double> m1(pairs_n * pairs_n), m2(pairs_n * pairs_n);
        double ps = ms_of(
            [&] {
                kern::pairwise_cosine_serial(rows_data.data(), pairs_n, dim,
                                             m1.data());
            },
            repeat);
        double po = ms_of(
            [&] {
                kern::pairwise_cosine_omp(rows_data.data(), pairs_n, dim,
                                          m2.data());
            },
            repeat);
        row("pairwise cosine", ps, po, max_abs_diff(m1, m2));
    }

    {  // batched example gradients (one worker vs the cap)
        auto programs = synthetic_corpus(7, std::max(1, batch_programs / 3));
        std::vector<Ast> corpus = parse_synthetic(programs);
        Vocab types = build_type_vocab(corpus);
        Vocab tokens = build_token_vocab(corpus, 2);
        Vocab labels = build_subtree_vocab(corpus, 2);
        TrainConfig cfg;
        cfg.dim = dim;
        cfg.epochs = 1;
        cfg.batch_size = int(corpus.size());
        cfg.seed = 2;
        cfg.jobs = 1;
        double ts = ms_of(
            [&] { train(corpus, types, tokens, labels, cfg); }, 1);
        cfg.jobs = jobs;
        double to = ms_of(
            [&] { train(corpus, types, tokens, labels, cfg); }, 1);
        par::set_max_jobs(jobs);
        row("batch gradients (1 epoch)", ts, to, 0.0);
    }

    return 0;
}
