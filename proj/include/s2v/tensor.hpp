#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "s2v/kernels.hpp"
#include "s2v/util.hpp"

namespace s2v {

struct TensorError : DataError {
    using DataError::DataError;
};

// Dense rank-1 or rank-2 tensor of 64-bit reals.
struct Tensor {
    std::vector<std::size_t> shape;
    std::vector<double> values;
    bool requires_grad = false;
    std::optional<std::vector<double>> grad;

    Tensor() = default;
    Tensor(std::vector<std::size_t> s, double fill = 0.0);

    static Tensor scalar(double v);
    static Tensor row(std::vector<double> v);  // 1 x n
    static Tensor matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
    static Tensor uniform(std::vector<std::size_t> s, double lo, double hi,
                          Rng& rng);

    std::size_t numel() const { return values.size(); }
    std::size_t rank() const { return shape.size(); }
    std::size_t rows() const {
        return rank() == 2 ? shape[0] : (shape.empty() ? 0 : 1);
    }
    std::size_t cols() const { return shape.empty() ? 0 : shape.back(); }
    double& at(std::size_t r, std::size_t c) { return values[r * cols() + c]; }
    double at(std::size_t r, std::size_t c) const {
        return values[r * cols() + c];
    }
    bool finite() const;
};

// Eager tape: primitives compute forward values immediately and record a
// backward closure when any input requires grad. backward() visits the
// recorded applications once, in reverse order; repeated subexpressions
// accumulate additively.
class Tape {
  public:
    using Id = int;

    Tape() = default;
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    Id leaf(const Tensor& t);

    Id matmul(Id a, Id b, bool transpose_b = false);
    Id add(Id a, Id b);
    Id add_rowvec(Id m, Id v);
    Id scale(Id a, double c);
    Id tanh(Id a);
    Id sigmoid(Id a);
    Id softmax(Id a, int axis);
    Id embedding_lookup(Id matrix, std::vector<int> rows);
    Id sum(Id a, int axis);  // axis 0 | 1 | -1 (all)
    Id max(Id a, int axis);  // ties: lowest index takes the full gradient
    Id weighted_sum(Id weights, Id rows);
    Id cross_entropy(Id logits, int label);
    Id concat_cols(Id a, Id b);
    Id tree_conv(Id states, Id wt, Id wl, Id wr, Id bias,
                 std::shared_ptr<const ConvWindows> windows);

    // Reverse pass from a scalar loss. Errors: loss not scalar.
    void backward(Id loss);

    const Tensor& value(Id id) const { return node(id).val; }
    double scalar_value(Id id) const;
    const std::vector<double>& grad(Id id) const { return node(id).grad; }
    bool requires_grad(Id id) const { return node(id).rg; }
    std::size_t size() const { return nodes_.size(); }

    // Route tree_conv and friends through the OpenMP kernels.
    void set_parallel_kernels(bool on) { parallel_ = on; }

  private:
    struct Node {
        Tensor val;
        std::vector<double> grad;
        bool rg = false;
        std::function<void()> back;
    };

    Node& node(Id id) {
        if (id < 0 || id >= Id(nodes_.size()))
            throw TensorError("tape: bad node id");
        return nodes_[id];
    }
    const Node& node(Id id) const {
        if (id < 0 || id >= Id(nodes_.size()))
            throw TensorError("tape: bad node id");
        return nodes_[id];
    }

    Id push(Tensor val, bool rg, std::function<void()> back);

    std::vector<Node> nodes_;
    bool parallel_ = false;
};

// Central-difference gradient verification.
struct GradCheckReport {
    double max_rel_err = 0.0;
    std::size_t worst_index = 0;
    bool pass = false;
};

// Builds the scalar loss from a leaf holding x; analytic gradients come from
// the tape's reverse pass.
using TapeFn = std::function<Tape::Id(Tape&, Tape::Id)>;
GradCheckReport gradient_check(const TapeFn& f, const Tensor& x, double h,
                               double tol);

// Variant with an externally supplied gradient rule (used to verify that the
// checker flags wrong backward implementations).
GradCheckReport gradient_check(
    const std::function<double(const std::vector<double>&)>& value_fn,
    const std::function<std::vector<double>(const std::vector<double>&)>&
        grad_fn,
    const std::vector<double>& x, double h, double tol);

}  // namespace s2v
