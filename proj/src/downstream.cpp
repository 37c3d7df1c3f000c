#include "s2v/downstream.hpp"

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>

#include "s2v/kernels.hpp"
#include "s2v/parallel.hpp"

namespace s2v {

void EmbeddingIndex::add(IndexEntry e) {
    if (dim == 0) dim = e.vec.size();
    if (e.vec.size() != dim)
        throw DataError("embedding index: dimension mismatch for " +
                        e.source_id);
    for (const auto& existing : entries)
        if (existing.source_id == e.source_id)
            throw DataError("embedding index: duplicate source_id " +
                            e.source_id);
    entries.push_back(std::move(e));
}

const IndexEntry* EmbeddingIndex::find(const std::string& source_id) const {
    for (const auto& e : entries)
        if (e.source_id == source_id) return &e;
    return nullptr;
}

std::string index_to_tsv(const EmbeddingIndex& index) {
    std::ostringstream out;
    for (const auto& e : index.entries) {
        out << e.source_id << "\t" << e.language << "\t" << e.task_id << "\t";
        for (std::size_t i = 0; i < e.vec.size(); ++i) {
            if (i) out << " ";
            out << format_double(e.vec[i]);
        }
        out << "\n";
    }
    return out.str();
}

EmbeddingIndex index_from_tsv(const std::string& tsv) {
    EmbeddingIndex index;
    std::istringstream in(tsv);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#') continue;
        std::size_t t1 = line.find('\t');
        std::size_t t2 = t1 == std::string::npos ? t1 : line.find('\t', t1 + 1);
        std::size_t t3 = t2 == std::string::npos ? t2 : line.find('\t', t2 + 1);
        if (t3 == std::string::npos)
            throw DataError("embedding TSV: bad line " +
                            std::to_string(lineno));
        IndexEntry e;
        e.source_id = line.substr(0, t1);
        e.language = line.substr(t1 + 1, t2 - t1 - 1);
        e.task_id = line.substr(t2 + 1, t3 - t2 - 1);
        std::istringstream nums(line.substr(t3 + 1));
        double v;
        while (nums >> v) e.vec.push_back(v);
        if (e.vec.empty())
            throw DataError("embedding TSV: empty vector at line " +
                            std::to_string(lineno));
        index.add(std::move(e));
    }
    return index;
}

std::vector<int> kmeans_points(const std::vector<double>& points,
                               std::size_t n, std::size_t d, int k,
                               std::uint64_t seed, int max_iters) {
    if (k < 1) throw UsageError("kmeans: k must be >= 1");
    if (std::size_t(k) > n)
        throw DataError("kmeans: k exceeds the number of points");
    if (max_iters < 1) throw UsageError("kmeans: max_iters must be >= 1");
    Rng rng(seed);
    std::vector<double> centroids(std::size_t(k) * d);

    // k-means++ seeding
    std::size_t first = rng.index(n);
    std::copy_n(points.begin() + first * d, d, centroids.begin());
    std::vector<double> dist2(n);
    for (int c = 1; c < k; ++c) {
        double total = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double best = std::numeric_limits<double>::max();
            for (int cc = 0; cc < c; ++cc) {
                double acc = 0.0;
                for (std::size_t j = 0; j < d; ++j) {
                    double diff = points[i * d + j] - centroids[cc * d + j];
                    acc += diff * diff;
                }
                best = std::min(best, acc);
            }
            dist2[i] = best;
            total += best;
        }
        std::size_t pick;
        if (total <= 0.0) {
            pick = rng.index(n);
        } else {
            double r = rng.uniform() * total;
            pick = n - 1;
            double acc = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                acc += dist2[i];
                if (acc >= r) {
                    pick = i;
                    break;
                }
            }
        }
        std::copy_n(points.begin() + pick * d, d,
                    centroids.begin() + std::size_t(c) * d);
    }

    std::vector<int> assignment(n, -1);
    std::vector<int> previous(n, -2);
    for (int iter = 0; iter < max_iters; ++iter) {
        kern::assign_nearest_omp(points.data(), n, d, centroids.data(),
                                 std::size_t(k), assignment.data());
        if (assignment == previous) break;
        previous = assignment;
        // recompute means
        std::vector<double> sums(std::size_t(k) * d, 0.0);
        std::vector<std::size_t> counts(k, 0);
        for (std::size_t i = 0; i < n; ++i) {
            counts[assignment[i]] += 1;
            for (std::size_t j = 0; j < d; ++j)
                sums[std::size_t(assignment[i]) * d + j] += points[i * d + j];
        }
        for (int c = 0; c < k; ++c) {
            if (counts[c] == 0) {
                // move the empty centroid to the point farthest from its own
                // centroid (first maximum)
                std::size_t far = 0;
                double far_dist = -1.0;
                for (std::size_t i = 0; i < n; ++i) {
                    double acc = 0.0;
                    const double* mu =
                        centroids.data() + std::size_t(assignment[i]) * d;
                    for (std::size_t j = 0; j < d; ++j) {
                        double diff = points[i * d + j] - mu[j];
                        acc += diff * diff;
                    }
                    if (acc > far_dist) {
                        far_dist = acc;
                        far = i;
                    }
                }
                std::copy_n(points.begin() + far * d, d,
                            centroids.begin() + std::size_t(c) * d);
                continue;
            }
            for (std::size_t j = 0; j < d; ++j)
                centroids[std::size_t(c) * d + j] =
                    sums[std::size_t(c) * d + j] / double(counts[c]);
        }
    }
    return assignment;
}

std::vector<int> kmeans(const EmbeddingIndex& index, int k, std::uint64_t seed,
                        int max_iters) {
    std::size_t n = index.entries.size();
    std::vector<double> flat;
    flat.reserve(n * index.dim);
    for (const auto& e : index.entries)
        flat.insert(flat.end(), e.vec.begin(), e.vec.end());
    return kmeans_points(flat, n, index.dim, k, seed, max_iters);
}

double adjusted_rand_index(std::span<const int> assignment,
                           std::span<const int> ground_truth) {
    if (assignment.size() != ground_truth.size())
        throw DataError("adjusted_rand_index: length mismatch");
    std::size_t n = assignment.size();
    if (n < 2) throw DataError("adjusted_rand_index: need at least 2 items");
    std::map<std::pair<int, int>, std::uint64_t> cont;
    std::map<int, std::uint64_t> row, col;
    for (std::size_t i = 0; i < n; ++i) {
        cont[{assignment[i], ground_truth[i]}] += 1;
        row[assignment[i]] += 1;
        col[ground_truth[i]] += 1;
    }
    auto comb2 = [](std::uint64_t m) {
        return double(m) * double(m - 1) / 2.0;
    };
    double sum_cells = 0.0;
    for (const auto& [key, c] : cont) sum_cells += comb2(c);
    double sum_rows = 0.0, sum_cols = 0.0;
    for (const auto& [key, c] : row) sum_rows += comb2(c);
    for (const auto& [key, c] : col) sum_cols += comb2(c);
    double pairs = comb2(n);
    double expected = sum_rows * sum_cols / pairs;
    double maximum = 0.5 * (sum_rows + sum_cols);
    if (maximum == expected) return 1.0;  // both partitions trivial
    return (sum_cells - expected) / (maximum - expected);
}

double cosine_similarity(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size())
        throw DataError("cosine_similarity: dimension mismatch");
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    if (na == 0.0 || nb == 0.0)
        throw DataError("cosine_similarity: zero vector");
    if (dot == na && na == nb) return 1.0;
    double c = dot / std::sqrt(na * nb);
    return std::clamp(c, -1.0, 1.0);
}

bool detect_clone(std::span<const double> a, std::span<const double> b,
                  double threshold) {
    return cosine_similarity(a, b) >= threshold;
}

Prf clone_metrics(std::span<const std::pair<bool, bool>> pairs) {
    if (pairs.empty()) throw DataError("clone_metrics: no pairs");
    std::uint64_t tp = 0, fp = 0, fn = 0;
    for (const auto& [predicted, actual] : pairs) {
        if (predicted && actual) ++tp;
        else if (predicted && !actual) ++fp;
        else if (!predicted && actual) ++fn;
    }
    Prf out;
    out.precision = (tp + fp) == 0 ? 0.0 : double(tp) / double(tp + fp);
    out.recall = (tp + fn) == 0 ? 0.0 : double(tp) / double(tp + fn);
    out.f1 = (out.precision + out.recall) == 0.0
                 ? 0.0
                 : 2.0 * out.precision * out.recall /
                       (out.precision + out.recall);
    return out;
}

std::vector<SearchHit> search(std::span<const double> query,
                              const EmbeddingIndex& index, int k,
                              const std::string& exclude_language) {
    if (k < 1) throw UsageError("search: K must be >= 1");
    std::vector<const IndexEntry*> candidates;
    for (const auto& e : index.entries)
        if (exclude_language.empty() || e.language != exclude_language)
            candidates.push_back(&e);
    if (candidates.empty()) throw DataError("search: empty index");
    std::size_t n = candidates.size(), d = index.dim;
    if (query.size() != d) throw DataError("search: query dimension mismatch");
    std::vector<double> rows(n * d);
    for (std::size_t i = 0; i < n; ++i)
        std::copy(candidates[i]->vec.begin(), candidates[i]->vec.end(),
                  rows.begin() + i * d);
    std::vector<double> scores(n);
    kern::similarity_row_omp(query.data(), rows.data(), n, d, scores.data());
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (scores[a] != scores[b]) return scores[a] > scores[b];
        return candidates[a]->source_id < candidates[b]->source_id;
    });
    std::vector<SearchHit> hits;
    for (std::size_t i = 0; i < std::min<std::size_t>(n, std::size_t(k)); ++i)
        hits.push_back({candidates[order[i]]->source_id, scores[order[i]]});
    return hits;
}

double mean_reciprocal_rank(
    std::span<const std::pair<std::vector<std::string>, std::string>> queries) {
    if (queries.empty()) throw DataError("mean_reciprocal_rank: no queries");
    double acc = 0.0;
    for (const auto& [ranked, relevant] : queries) {
        for (std::size_t r = 0; r < ranked.size(); ++r) {
            if (ranked[r] == relevant) {
                acc += 1.0 / double(r + 1);
                break;
            }
        }
    }
    return acc / double(queries.size());
}

Prf subword_f1(const std::string& predicted, const std::string& truth) {
    auto pred = subtokens(predicted);
    auto gold = subtokens(truth);
    if (pred.empty() || gold.empty())
        throw DataError("subword_f1: empty name");
    std::map<std::string, int> want;
    for (const auto& t : gold) want[t] += 1;
    int hit = 0;
    for (const auto& t : pred) {
        auto it = want.find(t);
        if (it != want.end() && it->second > 0) {
            --it->second;
            ++hit;
        }
    }
    Prf out;
    out.precision = double(hit) / double(pred.size());
    out.recall = double(hit) / double(gold.size());
    out.f1 = (out.precision + out.recall) == 0.0
                 ? 0.0
                 : 2.0 * out.precision * out.recall /
                       (out.precision + out.recall);
    return out;
}

std::vector<std::pair<std::string, double>> predict_method_name(
    std::span<const double> code_vector,
    const std::vector<std::pair<std::string, std::vector<double>>>& table) {
    if (table.empty()) throw DataError("predict_method_name: empty name table");
    std::vector<double> logits(table.size());
    for (std::size_t i = 0; i < table.size(); ++i) {
        const auto& emb = table[i].second;
        if (emb.size() != code_vector.size())
            throw DataError("predict_method_name: dimension mismatch");
        double acc = 0.0;
        for (std::size_t j = 0; j < emb.size(); ++j)
            acc += code_vector[j] * emb[j];
        logits[i] = acc;
    }
    double mx = *std::max_element(logits.begin(), logits.end());
    double z = 0.0;
    for (double& v : logits) {
        v = std::exp(v - mx);
        z += v;
    }
    std::vector<std::size_t> order(table.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) {
                         return logits[a] > logits[b];
                     });
    std::vector<std::pair<std::string, double>> out;
    out.reserve(table.size());
    for (std::size_t i : order) out.emplace_back(table[i].first, logits[i] / z);
    return out;
}

// --- fine-tuning ---

namespace {

struct SplitResult {
    std::vector<std::size_t> train;  // sampled train indices
    std::vector<std::size_t> test;
};

SplitResult stratified_split(const std::vector<std::string>& labels,
                             double fraction, double test_fraction,
                             std::uint64_t seed) {
    std::map<std::string, std::vector<std::size_t>> by_class;
    for (std::size_t i = 0; i < labels.size(); ++i)
        by_class[labels[i]].push_back(i);
    Rng rng(seed);
    SplitResult out;
    std::vector<std::vector<std::size_t>> pools;
    for (auto& [cls, idxs] : by_class) {
        rng.shuffle(idxs);
        std::size_t test_n = std::size_t(
            std::llround(test_fraction * double(idxs.size())));
        if (test_n >= idxs.size()) test_n = idxs.size() - 1;
        out.test.insert(out.test.end(), idxs.begin(), idxs.begin() + test_n);
        pools.emplace_back(idxs.begin() + test_n, idxs.end());
    }
    std::size_t pool_total = 0;
    for (const auto& p : pools) pool_total += p.size();
    std::size_t target = std::max<std::size_t>(
        1, std::size_t(std::llround(fraction * double(pool_total))));
    if (target > pool_total) target = pool_total;

    // proportional allocation, largest remainder
    std::vector<std::size_t> take(pools.size(), 0);
    std::vector<std::pair<double, std::size_t>> remainders;
    std::size_t assigned = 0;
    for (std::size_t c = 0; c < pools.size(); ++c) {
        double exact = double(target) * double(pools[c].size()) /
                       double(pool_total);
        take[c] = std::min(pools[c].size(), std::size_t(exact));
        assigned += take[c];
        remainders.emplace_back(exact - double(take[c]), c);
    }
    std::sort(remainders.begin(), remainders.end(), [](auto& a, auto& b) {
        if (a.first != b.first) return a.first > b.first;
        return a.second < b.second;
    });
    for (const auto& [rem, c] : remainders) {
        if (assigned >= target) break;
        if (take[c] < pools[c].size()) {
            ++take[c];
            ++assigned;
        }
    }
    std::size_t cls_idx = 0;
    for (const auto& [cls, idxs] : by_class) {
        if (take[cls_idx] == 0)
            throw DataError("finetune: class '" + cls +
                            "' absent from the sampled fraction; raise the "
                            "fraction or re-seed");
        out.train.insert(out.train.end(), pools[cls_idx].begin(),
                         pools[cls_idx].begin() + take[cls_idx]);
        ++cls_idx;
    }
    std::sort(out.train.begin(), out.train.end());
    std::sort(out.test.begin(), out.test.end());
    return out;
}

struct ClsExample {
    AstLayout layout;
    int cls = 0;
};

double classifier_example_backward(const Model& model, const Tensor& cls_w,
                                   const Tensor& cls_b, bool use_bias,
                                   const ClsExample& ex,
                                   std::vector<double>& flat_grad) {
    Tape tape;
    EncoderLeaves leaves = push_encoder_leaves(tape, model.enc, true);
    Tensor w = cls_w;
    w.requires_grad = true;
    Tape::Id wid = tape.leaf(w);
    Tape::Id bid = -1;
    EncodedGraph g = encode_on_tape(tape, ex.layout, leaves, model.config.dim,
                                    model.config.num_conv_layers,
                                    model.config.init_mode,
                                    model.config.aggregate_mode);
    Tape::Id logits = tape.matmul(g.code_vector, wid, true);  // 1 x C
    if (use_bias) {
        Tensor b = cls_b;
        b.requires_grad = true;
        bid = tape.leaf(b);
        logits = tape.add(logits, bid);
    }
    Tape::Id loss = tape.cross_entropy(logits, ex.cls);
    tape.backward(loss);
    std::vector<Tape::Id> leaf_ids = {
        leaves.type_embed, leaves.token_embed, leaves.fuse_weight,
        leaves.fuse_bias,  leaves.conv_top,    leaves.conv_left,
        leaves.conv_right, leaves.conv_bias,   leaves.attention,
        wid};
    if (use_bias) leaf_ids.push_back(bid);
    flat_grad.clear();
    for (Tape::Id id : leaf_ids) {
        const auto& gr = tape.grad(id);
        flat_grad.insert(flat_grad.end(), gr.begin(), gr.end());
    }
    return tape.scalar_value(loss);
}

}  // namespace

Classifier finetune(const Model& base, const LabeledCorpus& corpus,
                    const FinetuneConfig& config, TaskKind task,
                    FinetuneReport* report) {
    if (corpus.asts.empty()) throw DataError("finetune: empty corpus");
    if (corpus.asts.size() != corpus.labels.size())
        throw DataError("finetune: label count mismatch");
    if (config.fraction <= 0.0 || config.fraction > 1.0)
        throw UsageError("finetune: fraction must be in (0, 1]");
    par::set_max_jobs(config.jobs);

    SplitResult split = stratified_split(corpus.labels, config.fraction,
                                         config.test_fraction, config.seed);

    std::set<std::string> class_set(corpus.labels.begin(),
                                    corpus.labels.end());
    std::vector<std::string> classes(class_set.begin(), class_set.end());
    if (classes.size() < 2)
        throw DataError("finetune: need at least 2 classes");
    auto class_index = [&](const std::string& name) {
        return int(std::lower_bound(classes.begin(), classes.end(), name) -
                   classes.begin());
    };

    Classifier cls;
    cls.task = task;
    cls.classes = classes;
    cls.model = base;
    Rng rng(config.seed + 0x9e3779b97f4a7c15ull);
    if (!config.pretrained_init) {
        cls.model.enc = EncoderParams::init(
            base.config.dim, base.config.num_conv_layers,
            base.type_vocab.size(), base.token_vocab.size(), rng,
            base.config.init_scale);
    }
    cls.cls_weight =
        Tensor::uniform({classes.size(), base.config.dim},
                        -base.config.init_scale, base.config.init_scale, rng);
    cls.cls_weight.requires_grad = true;
    cls.cls_bias = Tensor({std::size_t(1), classes.size()}, 0.0);
    bool use_bias = task == TaskKind::classification;
    cls.cls_bias.requires_grad = use_bias;

    std::vector<ClsExample> train_examples;
    for (std::size_t i : split.train) {
        ClsExample ex;
        ex.layout = build_layout(corpus.asts[i], base.type_vocab,
                                 base.token_vocab);
        ex.cls = class_index(corpus.labels[i]);
        train_examples.push_back(std::move(ex));
    }

    std::vector<Tensor*> params;
    for (auto& [name, t] : cls.model.enc.named_tensors())
        params.push_back(t);
    params.push_back(&cls.cls_weight);
    if (use_bias) params.push_back(&cls.cls_bias);
    std::size_t total = 0;
    for (Tensor* p : params) total += p->numel();

    AdamOptimizer opt(config.learning_rate, base.config.adam_beta1,
                      base.config.adam_beta2, base.config.adam_eps);
    std::vector<std::size_t> order(train_examples.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

    FinetuneReport rep;
    rep.train_count = split.train.size();
    rep.test_count = split.test.size();
    int nthreads = par::threads();
    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        rng.shuffle(order);
        double loss_sum = 0.0;
        for (std::size_t start = 0; start < order.size();
             start += std::size_t(config.batch_size)) {
            std::size_t stop = std::min(order.size(),
                                        start + std::size_t(config.batch_size));
            std::size_t bsz = stop - start;
            std::vector<std::vector<double>> grads(bsz);
            std::vector<double> losses(bsz, 0.0);
            std::exception_ptr failure;
#pragma omp parallel for schedule(dynamic) num_threads(nthreads)
            for (std::size_t b = 0; b < bsz; ++b) {
                try {
                    losses[b] = classifier_example_backward(
                        cls.model, cls.cls_weight, cls.cls_bias, use_bias,
                        train_examples[order[start + b]], grads[b]);
                } catch (...) {
#pragma omp critical
                    if (!failure) failure = std::current_exception();
                }
            }
            if (failure) std::rethrow_exception(failure);
            std::vector<double> batch_grad(total, 0.0);
            for (std::size_t b = 0; b < bsz; ++b)
                for (std::size_t i = 0; i < total; ++i)
                    batch_grad[i] += grads[b][i];
            double inv = 1.0 / double(bsz);
            for (double& g : batch_grad) g *= inv;
            double batch_loss = 0.0;
            for (double l : losses) batch_loss += l;
            if (!std::isfinite(batch_loss))
                throw NumericError("finetune: non-finite loss");
            loss_sum += batch_loss;
            opt.step(params, batch_grad);
        }
        rep.epoch_mean_loss.push_back(loss_sum / double(order.size()));
    }

    // evaluation on the held-out split
    std::size_t correct = 0;
    double psum = 0.0, rsum = 0.0, fsum = 0.0;
    for (std::size_t i : split.test) {
        int predicted = classify(cls, corpus.asts[i]);
        const std::string& truth = corpus.labels[i];
        if (task == TaskKind::classification) {
            if (classes[predicted] == truth) ++correct;
        } else {
            Prf scores = subword_f1(classes[predicted], truth);
            psum += scores.precision;
            rsum += scores.recall;
            fsum += scores.f1;
            if (scores.f1 == 1.0) ++correct;  // exact sub-token match
        }
    }
    if (!split.test.empty()) {
        rep.test_accuracy = double(correct) / double(split.test.size());
        if (task == TaskKind::name_prediction) {
            rep.name_scores.precision = psum / double(split.test.size());
            rep.name_scores.recall = rsum / double(split.test.size());
            rep.name_scores.f1 = fsum / double(split.test.size());
        }
    }
    if (report) *report = rep;
    return cls;
}

std::vector<double> classifier_probs(const Classifier& cls, const Ast& ast) {
    EncodeResult enc = cls.model.encode_ast(ast);
    std::size_t c = cls.classes.size(), d = cls.model.config.dim;
    std::vector<double> logits(c);
    for (std::size_t i = 0; i < c; ++i) {
        double acc = cls.task == TaskKind::classification
                         ? cls.cls_bias.values[i]
                         : 0.0;
        for (std::size_t j = 0; j < d; ++j)
            acc += enc.code_vector.values[j] * cls.cls_weight.values[i * d + j];
        logits[i] = acc;
    }
    double mx = *std::max_element(logits.begin(), logits.end());
    double z = 0.0;
    for (double& v : logits) {
        v = std::exp(v - mx);
        z += v;
    }
    for (double& v : logits) v /= z;
    return logits;
}

int classify(const Classifier& cls, const Ast& ast) {
    std::vector<double> probs = classifier_probs(cls, ast);
    return int(std::max_element(probs.begin(), probs.end()) - probs.begin());
}

void save_classifier(const Classifier& cls, const std::string& path,
                     const std::map<std::string, std::string>& vocab_hashes) {
    Checkpoint ckpt = checkpoint_from_model(cls.model, 0, 0.0, vocab_hashes);
    ckpt.tensors.emplace("cls_weight", cls.cls_weight);
    ckpt.tensors.emplace("cls_bias", cls.cls_bias);
    nlohmann::json j = nlohmann::json::parse(checkpoint_to_json(ckpt));
    j["task"] = cls.task == TaskKind::classification ? "classification"
                                                     : "name_prediction";
    j["classes"] = cls.classes;
    write_file(path, j.dump() + "\n");
}

Classifier load_classifier(const std::string& path, Vocab type_vocab,
                           Vocab token_vocab, Vocab label_vocab) {
    std::string bytes = read_file(path);
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(bytes);
    } catch (const std::exception& e) {
        throw CheckpointError(std::string("corrupt classifier checkpoint: ") +
                              e.what());
    }
    if (!j.contains("classes") || !j.contains("task"))
        throw CheckpointError(
            "not a classifier checkpoint (missing classes/task)");
    Checkpoint ckpt = checkpoint_from_json(bytes);
    Classifier cls;
    cls.model = model_from_checkpoint(ckpt, std::move(type_vocab),
                                      std::move(token_vocab),
                                      std::move(label_vocab));
    cls.task = j["task"].get<std::string>() == "classification"
                   ? TaskKind::classification
                   : TaskKind::name_prediction;
    cls.classes = j["classes"].get<std::vector<std::string>>();
    if (!ckpt.tensors.count("cls_weight") || !ckpt.tensors.count("cls_bias"))
        throw CheckpointError("classifier checkpoint missing head tensors");
    cls.cls_weight = ckpt.tensors.at("cls_weight");
    cls.cls_bias = ckpt.tensors.at("cls_bias");
    if (cls.cls_weight.rows() != cls.classes.size())
        throw CheckpointError("classifier head shape mismatch");
    return cls;
}

}  // namespace s2v
