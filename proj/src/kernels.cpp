#include "s2v/kernels.hpp"

#include <cmath>
#include <cstring>

#include "s2v/parallel.hpp"

namespace s2v::kern {

namespace {

// row (1 x d) times square matrix (d x d): out += r W
inline void row_times_matrix(const double* r, const double* w, std::size_t d,
                             double coeff, double* out) {
    for (std::size_t u = 0; u < d; ++u) {
        double ru = coeff * r[u];
        if (ru == 0.0) continue;
        const double* wrow = w + u * d;
        for (std::size_t v = 0; v < d; ++v) out[v] += ru * wrow[v];
    }
}

// out += coeff * (r W^T), i.e. out[u] += coeff * sum_v r[v] W[u][v]
inline void row_times_matrix_t(const double* r, const double* w, std::size_t d,
                               double coeff, double* out) {
    for (std::size_t u = 0; u < d; ++u) {
        const double* wrow = w + u * d;
        double acc = 0.0;
        for (std::size_t v = 0; v < d; ++v) acc += r[v] * wrow[v];
        out[u] += coeff * acc;
    }
}

// dw[u][v] += coeff * h[u] * g[v]
inline void outer_accum(const double* h, const double* g, std::size_t d,
                        double coeff, double* dw) {
    for (std::size_t u = 0; u < d; ++u) {
        double hu = coeff * h[u];
        if (hu == 0.0) continue;
        double* dwrow = dw + u * d;
        for (std::size_t v = 0; v < d; ++v) dwrow[v] += hu * g[v];
    }
}

inline void conv_node(const double* states, std::size_t d, const double* wt,
                      const double* wl, const double* wr, const double* bias,
                      const ConvWindows& win, std::size_t p, double* out) {
    double* row = out + p * d;
    std::memcpy(row, bias, d * sizeof(double));
    row_times_matrix(states + p * d, wt, d, 1.0, row);
    for (const auto& c : win.children[p]) {
        const double* h = states + std::size_t(c.pos) * d;
        if (c.eta_l != 0.0) row_times_matrix(h, wl, d, c.eta_l, row);
        if (c.eta_r != 0.0) row_times_matrix(h, wr, d, c.eta_r, row);
    }
    for (std::size_t v = 0; v < d; ++v) row[v] = std::tanh(row[v]);
}

// dpre for one node: (1 - y^2) o dy
inline void dpre_node(const double* y, const double* dy, std::size_t d,
                      double* dpre) {
    for (std::size_t v = 0; v < d; ++v) dpre[v] = (1.0 - y[v] * y[v]) * dy[v];
}

// dstates row for one node, gather form: contribution from its own window
// (as the top node) plus its parent's window (as a child).
inline void dstates_node(const double* dpre, std::size_t d, const double* wt,
                         const double* wl, const double* wr,
                         const ConvWindows& win, std::size_t i,
                         double* dstates) {
    double* drow = dstates + i * d;
    row_times_matrix_t(dpre + i * d, wt, d, 1.0, drow);
    const auto& pr = win.parent[i];
    if (pr.parent >= 0) {
        const double* dp = dpre + std::size_t(pr.parent) * d;
        if (pr.eta_l != 0.0) row_times_matrix_t(dp, wl, d, pr.eta_l, drow);
        if (pr.eta_r != 0.0) row_times_matrix_t(dp, wr, d, pr.eta_r, drow);
    }
}

// weight/bias gradient contributions of one node's window
inline void weight_grads_node(const double* states, const double* dpre,
                              std::size_t d, const ConvWindows& win,
                              std::size_t p, double* dwt, double* dwl,
                              double* dwr, double* dbias) {
    const double* g = dpre + p * d;
    for (std::size_t v = 0; v < d; ++v) dbias[v] += g[v];
    outer_accum(states + p * d, g, d, 1.0, dwt);
    for (const auto& c : win.children[p]) {
        const double* h = states + std::size_t(c.pos) * d;
        if (c.eta_l != 0.0) outer_accum(h, g, d, c.eta_l, dwl);
        if (c.eta_r != 0.0) outer_accum(h, g, d, c.eta_r, dwr);
    }
}

constexpr std::size_t kBlock = 256;  // nodes per reduction block

}  // namespace

void tree_conv_forward_serial(const double* states, std::size_t n,
                              std::size_t d, const double* wt,
                              const double* wl, const double* wr,
                              const double* bias, const ConvWindows& win,
                              double* out) {
    for (std::size_t p = 0; p < n; ++p)
        conv_node(states, d, wt, wl, wr, bias, win, p, out);
}

void tree_conv_forward_omp(const double* states, std::size_t n, std::size_t d,
                           const double* wt, const double* wl,
                           const double* wr, const double* bias,
                           const ConvWindows& win, double* out) {
#pragma omp parallel for schedule(static) num_threads(par::threads())
    for (std::size_t p = 0; p < n; ++p)
        conv_node(states, d, wt, wl, wr, bias, win, p, out);
}

void tree_conv_backward_serial(const double* states, const double* y,
                               const double* dy, std::size_t n, std::size_t d,
                               const double* wt, const double* wl,
                               const double* wr, const ConvWindows& win,
                               double* dstates, double* dwt, double* dwl,
                               double* dwr, double* dbias) {
    std::vector<double> dpre(n * d);
    for (std::size_t p = 0; p < n; ++p)
        dpre_node(y + p * d, dy + p * d, d, dpre.data() + p * d);
    for (std::size_t i = 0; i < n; ++i)
        dstates_node(dpre.data(), d, wt, wl, wr, win, i, dstates);
    for (std::size_t p = 0; p < n; ++p)
        weight_grads_node(states, dpre.data(), d, win, p, dwt, dwl, dwr,
                          dbias);
}

void tree_conv_backward_omp(const double* states, const double* y,
                            const double* dy, std::size_t n, std::size_t d,
                            const double* wt, const double* wl,
                            const double* wr, const ConvWindows& win,
                            double* dstates, double* dwt, double* dwl,
                            double* dwr, double* dbias) {
    std::vector<double> dpre(n * d);
    int nt = par::threads();
#pragma omp parallel for schedule(static) num_threads(nt)
    for (std::size_t p = 0; p < n; ++p)
        dpre_node(y + p * d, dy + p * d, d, dpre.data() + p * d);
#pragma omp parallel for schedule(static) num_threads(nt)
    for (std::size_t i = 0; i < n; ++i)
        dstates_node(dpre.data(), d, wt, wl, wr, win, i, dstates);

    // blocked reduction for the shared weight gradients: per-block partials
    // computed in parallel, then summed in block order
    std::size_t nblocks = (n + kBlock - 1) / kBlock;
    std::vector<std::vector<double>> partials(nblocks);
#pragma omp parallel for schedule(dynamic) num_threads(nt)
    for (std::size_t b = 0; b < nblocks; ++b) {
        auto& part = partials[b];
        part.assign(3 * d * d + d, 0.0);
        double* pwt = part.data();
        double* pwl = part.data() + d * d;
        double* pwr = part.data() + 2 * d * d;
        double* pb = part.data() + 3 * d * d;
        std::size_t hi = std::min(n, (b + 1) * kBlock);
        for (std::size_t p = b * kBlock; p < hi; ++p)
            weight_grads_node(states, dpre.data(), d, win, p, pwt, pwl, pwr,
                              pb);
    }
    for (std::size_t b = 0; b < nblocks; ++b) {
        const auto& part = partials[b];
        for (std::size_t i = 0; i < d * d; ++i) {
            dwt[i] += part[i];
            dwl[i] += part[d * d + i];
            dwr[i] += part[2 * d * d + i];
        }
        for (std::size_t v = 0; v < d; ++v) dbias[v] += part[3 * d * d + v];
    }
}

namespace {

inline int nearest_centroid(const double* x, std::size_t d,
                            const double* centroids, std::size_t k) {
    int best = 0;
    double best_dist = 0.0;
    for (std::size_t c = 0; c < k; ++c) {
        const double* mu = centroids + c * d;
        double dist = 0.0;
        for (std::size_t j = 0; j < d; ++j) {
            double diff = x[j] - mu[j];
            dist += diff * diff;
        }
        if (c == 0 || dist < best_dist) {
            best = int(c);
            best_dist = dist;
        }
    }
    return best;
}

inline double cosine_rows(const double* a, const double* b, std::size_t d) {
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
        dot += a[j] * b[j];
        na += a[j] * a[j];
        nb += b[j] * b[j];
    }
    if (na == 0.0 || nb == 0.0) return 0.0;
    if (dot == na && na == nb) return 1.0;
    double c = dot / std::sqrt(na * nb);
    return c < -1.0 ? -1.0 : (c > 1.0 ? 1.0 : c);
}

}  // namespace

void assign_nearest_serial(const double* points, std::size_t n, std::size_t d,
                           const double* centroids, std::size_t k,
                           int* assignment) {
    for (std::size_t i = 0; i < n; ++i)
        assignment[i] = nearest_centroid(points + i * d, d, centroids, k);
}

void assign_nearest_omp(const double* points, std::size_t n, std::size_t d,
                        const double* centroids, std::size_t k,
                        int* assignment) {
#pragma omp parallel for schedule(static) num_threads(par::threads())
    for (std::size_t i = 0; i < n; ++i)
        assignment[i] = nearest_centroid(points + i * d, d, centroids, k);
}

void similarity_row_serial(const double* query, const double* rows,
                           std::size_t n, std::size_t d, double* out) {
    for (std::size_t i = 0; i < n; ++i)
        out[i] = cosine_rows(query, rows + i * d, d);
}

void similarity_row_omp(const double* query, const double* rows, std::size_t n,
                        std::size_t d, double* out) {
#pragma omp parallel for schedule(static) num_threads(par::threads())
    for (std::size_t i = 0; i < n; ++i)
        out[i] = cosine_rows(query, rows + i * d, d);
}

void pairwise_cosine_serial(const double* rows, std::size_t n, std::size_t d,
                            double* out) {
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            out[i * n + j] = cosine_rows(rows + i * d, rows + j * d, d);
}

void pairwise_cosine_omp(const double* rows, std::size_t n, std::size_t d,
                         double* out) {
#pragma omp parallel for schedule(dynamic, 16) num_threads(par::threads())
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            out[i * n + j] = cosine_rows(rows + i * d, rows + j * d, d);
}

}  // namespace s2v::kern
