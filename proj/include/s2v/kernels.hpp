#pragma once

#include <cstddef>
#include <vector>

namespace s2v {

// Convolution window structure for one tree, rows aligned to a fixed node
// ordering. Every window holds the node itself (coefficient eta_t = 1) plus
// its direct children with position coefficients:
//   eta_r = (pos - 1) / (m - 1), eta_l = 1 - eta_r  for m > 1 (1-based pos),
//   eta_l = eta_r = 1/2                              for a single child.
struct ConvWindows {
    struct Child {
        int pos;
        double eta_l;
        double eta_r;
    };
    struct ParentRef {
        int parent = -1;  // -1 for the root
        double eta_l = 0.0;
        double eta_r = 0.0;
    };
    std::vector<std::vector<Child>> children;  // per node position
    std::vector<ParentRef> parent;             // per node position
    std::size_t size() const { return children.size(); }
};

// Serial reference kernels and their OpenMP counterparts. The omp variants
// are bitwise-identical for the gather-style outputs (forward states, input
// gradients, assignments, similarity rows); weight-gradient reductions are
// reassociated, so they match the serial reference to FP tolerance only.
namespace kern {

// out[p] = tanh(bias + states[p] Wt + sum_c (eta_l states[c] Wl
//                                            + eta_r states[c] Wr))
// states, out: n x d row-major; wt/wl/wr: d x d; bias: d.
void tree_conv_forward_serial(const double* states, std::size_t n,
                              std::size_t d, const double* wt,
                              const double* wl, const double* wr,
                              const double* bias, const ConvWindows& win,
                              double* out);
void tree_conv_forward_omp(const double* states, std::size_t n, std::size_t d,
                           const double* wt, const double* wl,
                           const double* wr, const double* bias,
                           const ConvWindows& win, double* out);

// Accumulates (+=) gradients given upstream dy and the forward output y.
void tree_conv_backward_serial(const double* states, const double* y,
                               const double* dy, std::size_t n, std::size_t d,
                               const double* wt, const double* wl,
                               const double* wr, const ConvWindows& win,
                               double* dstates, double* dwt, double* dwl,
                               double* dwr, double* dbias);
void tree_conv_backward_omp(const double* states, const double* y,
                            const double* dy, std::size_t n, std::size_t d,
                            const double* wt, const double* wl,
                            const double* wr, const ConvWindows& win,
                            double* dstates, double* dwt, double* dwl,
                            double* dwr, double* dbias);

// Nearest centroid per point under squared Euclidean distance, ties broken
// by the lowest centroid index.
void assign_nearest_serial(const double* points, std::size_t n, std::size_t d,
                           const double* centroids, std::size_t k,
                           int* assignment);
void assign_nearest_omp(const double* points, std::size_t n, std::size_t d,
                        const double* centroids, std::size_t k,
                        int* assignment);

// Cosine similarity of `query` against every row of `rows`.
void similarity_row_serial(const double* query, const double* rows,
                           std::size_t n, std::size_t d, double* out);
void similarity_row_omp(const double* query, const double* rows, std::size_t n,
                        std::size_t d, double* out);

// Full n x n cosine similarity matrix over row vectors.
void pairwise_cosine_serial(const double* rows, std::size_t n, std::size_t d,
                            double* out);
void pairwise_cosine_omp(const double* rows, std::size_t n, std::size_t d,
                         double* out);

}  // namespace kern

}  // namespace s2v
