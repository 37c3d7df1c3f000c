#include "s2v/tensor.hpp"

#include <algorithm>
#include <cmath>

namespace s2v {

Tensor::Tensor(std::vector<std::size_t> s, double fill) : shape(std::move(s)) {
    if (shape.empty() || shape.size() > 2)
        throw TensorError("tensor rank must be 1 or 2");
    std::size_t n = 1;
    for (std::size_t d : shape) {
        if (d == 0) throw TensorError("tensor dimensions must be positive");
        n *= d;
    }
    values.assign(n, fill);
}

Tensor Tensor::scalar(double v) {
    Tensor t({1});
    t.values[0] = v;
    return t;
}

Tensor Tensor::row(std::vector<double> v) {
    Tensor t({1, v.size()});
    t.values = std::move(v);
    return t;
}

Tensor Tensor::matrix(std::size_t rows, std::size_t cols, double fill) {
    return Tensor({rows, cols}, fill);
}

Tensor Tensor::uniform(std::vector<std::size_t> s, double lo, double hi,
                       Rng& rng) {
    Tensor t(std::move(s));
    for (double& v : t.values) v = rng.uniform(lo, hi);
    return t;
}

bool Tensor::finite() const {
    for (double v : values)
        if (!std::isfinite(v)) return false;
    return true;
}

Tape::Id Tape::push(Tensor val, bool rg, std::function<void()> back) {
    Node n;
    n.val = std::move(val);
    n.grad.assign(n.val.numel(), 0.0);
    n.rg = rg;
    n.back = rg ? std::move(back) : std::function<void()>{};
    nodes_.push_back(std::move(n));
    return Id(nodes_.size()) - 1;
}

Tape::Id Tape::leaf(const Tensor& t) {
    return push(t, t.requires_grad, {});
}

double Tape::scalar_value(Id id) const {
    const Tensor& t = value(id);
    if (t.numel() != 1) throw TensorError("expected a scalar");
    return t.values[0];
}

Tape::Id Tape::matmul(Id a, Id b, bool transpose_b) {
    const Tensor& ta = value(a);
    const Tensor& tb = value(b);
    std::size_t m = ta.rows(), k = ta.cols();
    std::size_t bk = transpose_b ? tb.cols() : tb.rows();
    std::size_t n = transpose_b ? tb.rows() : tb.cols();
    if (k != bk)
        throw TensorError("matmul: inner dimensions " + std::to_string(k) +
                          " and " + std::to_string(bk) + " differ");
    Tensor out({m, n});
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            double acc = 0.0;
            for (std::size_t t = 0; t < k; ++t)
                acc += ta.values[i * k + t] *
                       (transpose_b ? tb.values[j * k + t]
                                    : tb.values[t * n + j]);
            out.values[i * n + j] = acc;
        }
    bool rg = node(a).rg || node(b).rg;
    Id id = push(std::move(out), rg, {});
    if (rg) {
        node(id).back = [this, a, b, id, m, n, k, transpose_b] {
            const auto& dy = node(id).grad;
            const auto& va = node(a).val.values;
            const auto& vb = node(b).val.values;
            if (node(a).rg) {
                auto& da = node(a).grad;
                // dA = dY B^T   (or dY B when B was transposed)
                for (std::size_t i = 0; i < m; ++i)
                    for (std::size_t t = 0; t < k; ++t) {
                        double acc = 0.0;
                        for (std::size_t j = 0; j < n; ++j)
                            acc += dy[i * n + j] *
                                   (transpose_b ? vb[j * k + t]
                                                : vb[t * n + j]);
                        da[i * k + t] += acc;
                    }
            }
            if (node(b).rg) {
                auto& db = node(b).grad;
                if (transpose_b) {
                    // Y = A B^T, dB = dY^T A
                    for (std::size_t j = 0; j < n; ++j)
                        for (std::size_t t = 0; t < k; ++t) {
                            double acc = 0.0;
                            for (std::size_t i = 0; i < m; ++i)
                                acc += dy[i * n + j] * va[i * k + t];
                            db[j * k + t] += acc;
                        }
                } else {
                    // dB = A^T dY
                    for (std::size_t t = 0; t < k; ++t)
                        for (std::size_t j = 0; j < n; ++j) {
                            double acc = 0.0;
                            for (std::size_t i = 0; i < m; ++i)
                                acc += va[i * k + t] * dy[i * n + j];
                            db[t * n + j] += acc;
                        }
                }
            }
        };
    }
    return id;
}

Tape::Id Tape::add(Id a, Id b) {
    const Tensor& ta = value(a);
    const Tensor& tb = value(b);
    if (ta.shape != tb.shape) throw TensorError("add: shape mismatch");
    Tensor out = ta;
    out.requires_grad = false;
    for (std::size_t i = 0; i < out.numel(); ++i)
        out.values[i] += tb.values[i];
    bool rg = node(a).rg || node(b).rg;
    Id id = push(std::move(out), rg, {});
    if (rg)
        node(id).back = [this, a, b, id] {
            const auto& dy = node(id).grad;
            if (node(a).rg) {
                auto& da = node(a).grad;
                for (std::size_t i = 0; i < dy.size(); ++i) da[i] += dy[i];
            }
            if (node(b).rg) {
                auto& db = node(b).grad;
                for (std::size_t i = 0; i < dy.size(); ++i) db[i] += dy[i];
            }
        };
    return id;
}

Tape::Id Tape::add_rowvec(Id m, Id v) {
    const Tensor& tm = value(m);
    const Tensor& tv = value(v);
    if (tv.numel() != tm.cols())
        throw TensorError("add_rowvec: width mismatch");
    Tensor out = tm;
    out.requires_grad = false;
    std::size_t rows = tm.rows(), cols = tm.cols();
    for (std::size_t i = 0; i < rows; ++i)
        for (std::size_t j = 0; j < cols; ++j)
            out.values[i * cols + j] += tv.values[j];
    bool rg = node(m).rg || node(v).rg;
    Id id = push(std::move(out), rg, {});
    if (rg)
        node(id).back = [this, m, v, id, rows, cols] {
            const auto& dy = node(id).grad;
            if (node(m).rg) {
                auto& dm = node(m).grad;
                for (std::size_t i = 0; i < dy.size(); ++i) dm[i] += dy[i];
            }
            if (node(v).rg) {
                auto& dv = node(v).grad;
                for (std::size_t i = 0; i < rows; ++i)
                    for (std::size_t j = 0; j < cols; ++j)
                        dv[j] += dy[i * cols + j];
            }
        };
    return id;
}

Tape::Id Tape::scale(Id a, double c) {
    Tensor out = value(a);
    out.requires_grad = false;
    for (double& x : out.values) x *= c;
    bool rg = node(a).rg;
    Id id = push(std::move(out), rg, {});
    if (rg)
        node(id).back = [this, a, id, c] {
            const auto& dy = node(id).grad;
            auto& da = node(a).grad;
            for (std::size_t i = 0; i < dy.size(); ++i) da[i] += c * dy[i];
        };
    return id;
}

Tape::Id Tape::tanh(Id a) {
    Tensor out = value(a);
    out.requires_grad = false;
    for (double& x : out.values) x = std::tanh(x);
    bool rg = node(a).rg;
    Id id = push(std::move(out), rg, {});
    if (rg)
        node(id).back = [this, a, id] {
            const auto& dy = node(id).grad;
            const auto& y = node(id).val.values;
            auto& da = node(a).grad;
            for (std::size_t i = 0; i < dy.size(); ++i)
                da[i] += (1.0 - y[i] * y[i]) * dy[i];
        };
    return id;
}

Tape::Id Tape::sigmoid(Id a) {
    Tensor out = value(a);
    out.requires_grad = false;
    for (double& x : out.values) x = 1.0 / (1.0 + std::exp(-x));
    bool rg = node(a).rg;
    Id id = push(std::move(out), rg, {});
    if (rg)
        node(id).back = [this, a, id] {
            const auto& dy = node(id).grad;
            const auto& y = node(id).val.values;
            auto& da = node(a).grad;
            for (std::size_t i = 0; i < dy.size(); ++i)
                da[i] += y[i] * (1.0 - y[i]) * dy[i];
        };
    return id;
}

// slices: softmax along `axis` of a rank-2 tensor, or along a rank-1 vector
Tape::Id Tape::softmax(Id a, int axis) {
    const Tensor& ta = value(a);
    if (!ta.finite()) throw NumericError("softmax: non-finite input");
    std::size_t rows = ta.rows(), cols = ta.cols();
    bool along_rows = (ta.rank() == 1) || axis == 1;
    if (ta.rank() == 2 && axis != 0 && axis != 1)
        throw TensorError("softmax: axis must be 0 or 1");
    std::size_t nslices = along_rows ? rows : cols;
    std::size_t len = along_rows ? cols : rows;
    auto index = [=](std::size_t s, std::size_t i) {
        return along_rows ? s * cols + i : i * cols + s;
    };
    Tensor out = ta;
    out.requires_grad = false;
    for (std::size_t s = 0; s < nslices; ++s) {
        double mx = out.values[index(s, 0)];
        for (std::size_t i = 1; i < len; ++i)
            mx = std::max(mx, out.values[index(s, i)]);
        double z = 0.0;
        for (std::size_t i = 0; i < len; ++i) {
            double e = std::exp(out.values[index(s, i)] - mx);
            out.values[index(s, i)] = e;
            z += e;
        }
        for (std::size_t i = 0; i < len; ++i) out.values[index(s, i)] /= z;
    }
    bool rg = node(a).rg;
    Id id = push(std::move(out), rg, {});
    if (rg)
        node(id).back = [this, a, id, nslices, len, index] {
            const auto& dy = node(id).grad;
            const auto& y = node(id).val.values;
            auto& da = node(a).grad;
            for (std::size_t s = 0; s < nslices; ++s) {
                double dot = 0.0;
                for (std::size_t i = 0; i < len; ++i)
                    dot += dy[index(s, i)] * y[index(s, i)];
                for (std::size_t i = 0; i < len; ++i)
                    da[index(s, i)] +=
                        y[index(s, i)] * (dy[index(s, i)] - dot);
            }
        };
    return id;
}

Tape::Id Tape::embedding_lookup(Id matrix, std::vector<int> rows) {
    const Tensor& tm = value(matrix);
    if (tm.rank() != 2) throw TensorError("embedding_lookup: need a matrix");
    std::size_t d = tm.cols();
    for (int r : rows)
        if (r < 0 || std::size_t(r) >= tm.rows())
            throw TensorError("embedding_lookup: row index " +
                              std::to_string(r) + " out of range");
    Tensor out({rows.size(), d});
    for (std::size_t i = 0; i < rows.size(); ++i)
        std::copy_n(tm.values.begin() + std::size_t(rows[i]) * d, d,
                    out.values.begin() + i * d);
    bool rg = node(matrix).rg;
    Id id = push(std::move(out), rg, {});
    if (rg)
        node(id).back = [this, matrix, id, rows = std::move(rows), d] {
            const auto& dy = node(id).grad;
            auto& dm = node(matrix).grad;
            for (std::size_t i = 0; i < rows.size(); ++i)
                for (std::size_t j = 0; j < d; ++j)
                    dm[std::size_t(rows[i]) * d + j] += dy[i * d + j];
        };
    return id;
}

Tape::Id Tape::sum(Id a, int axis) {
    const Tensor& ta = value(a);
    std::size_t rows = ta.rows(), cols = ta.cols();
    Tensor out;
    if (ta.rank() == 1 || axis == -1) {
        out = Tensor::scalar(0.0);
        for (double v : ta.values) out.values[0] += v;
    } else if (axis == 0) {
        out = Tensor({1, cols});
        for (std::size_t i = 0; i < rows; ++i)
            for (std::size_t j = 0; j < cols; ++j)
                out.values[j] += ta.values[i * cols + j];
    } else if (axis == 1) {
        out = Tensor({rows, 1});
        for (std::size_t i = 0; i < rows; ++i)
            for (std::size_t j = 0; j < cols; ++j)
                out.values[i] += ta.values[i * cols + j];
    } else {
        throw TensorError("sum: axis must be 0, 1 or -1");
    }
    bool rg = node(a).rg;
    bool all = ta.rank() == 1 || axis == -1;
    Id id = push(std::move(out), rg, {});
    if (rg)
        node(id).back = [this, a, id, axis, rows, cols, all] {
            const auto& dy = node(id).grad;
            auto& da = node(a).grad;
            if (all) {
                for (double& g : da) g += dy[0];
            } else if (axis == 0) {
                for (std::size_t i = 0; i < rows; ++i)
                    for (std::size_t j = 0; j < cols; ++j)
                        da[i * cols + j] += dy[j];
            } else {
                for (std::size_t i = 0; i < rows; ++i)
                    for (std::size_t j = 0; j < cols; ++j)
                        da[i * cols + j] += dy[i];
            }
        };
    return id;
}

Tape::Id Tape::max(Id a, int axis) {
    const Tensor& ta = value(a);
    std::size_t rows = ta.rows(), cols = ta.cols();
    Tensor out;
    std::vector<std::size_t> arg;
    if (ta.rank() == 1 || axis == -1) {
        std::size_t best = 0;
        for (std::size_t i = 1; i < ta.numel(); ++i)
            if (ta.values[i] > ta.values[best]) best = i;
        out = Tensor::scalar(ta.values[best]);
        arg = {best};
    } else if (axis == 0) {
        out = Tensor({1, cols});
        arg.resize(cols);
        for (std::size_t j = 0; j < cols; ++j) {
            std::size_t best = 0;
            for (std::size_t i = 1; i < rows; ++i)
                if (ta.values[i * cols + j] > ta.values[best * cols + j])
                    best = i;
            arg[j] = best;
            out.values[j] = ta.values[best * cols + j];
        }
    } else if (axis == 1) {
        out = Tensor({rows, 1});
        arg.resize(rows);
        for (std::size_t i = 0; i < rows; ++i) {
            std::size_t best = 0;
            for (std::size_t j = 1; j < cols; ++j)
                if (ta.values[i * cols + j] > ta.values[i * cols + best])
                    best = j;
            arg[i] = best;
            out.values[i] = ta.values[i * cols + best];
        }
    } else {
        throw TensorError("max: axis must be 0, 1 or -1");
    }
    bool rg = node(a).rg;
    bool all = ta.rank() == 1 || axis == -1;
    Id id = push(std::move(out), rg, {});
    if (rg)
        node(id).back = [this, a, id, axis, cols, arg = std::move(arg), all] {
            const auto& dy = node(id).grad;
            auto& da = node(a).grad;
            if (all) {
                da[arg[0]] += dy[0];
            } else if (axis == 0) {
                for (std::size_t j = 0; j < dy.size(); ++j)
                    da[arg[j] * cols + j] += dy[j];
            } else {
                for (std::size_t i = 0; i < dy.size(); ++i)
                    da[i * cols + arg[i]] += dy[i];
            }
        };
    return id;
}

Tape::Id Tape::weighted_sum(Id weights, Id rows) {
    const Tensor& tw = value(weights);
    const Tensor& tr = value(rows);
    std::size_t n = tr.rows(), d = tr.cols();
    if (tw.numel() != n) throw TensorError("weighted_sum: weight count");
    Tensor out({1, d});
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < d; ++j)
            out.values[j] += tw.values[i] * tr.values[i * d + j];
    bool rg = node(weights).rg || node(rows).rg;
    Id id = push(std::move(out), rg, {});
    if (rg)
        node(id).back = [this, weights, rows, id, n, d] {
            const auto& dy = node(id).grad;
            const auto& vw = node(weights).val.values;
            const auto& vr = node(rows).val.values;
            if (node(weights).rg) {
                auto& dw = node(weights).grad;
                for (std::size_t i = 0; i < n; ++i) {
                    double acc = 0.0;
                    for (std::size_t j = 0; j < d; ++j)
                        acc += dy[j] * vr[i * d + j];
                    dw[i] += acc;
                }
            }
            if (node(rows).rg) {
                auto& dr = node(rows).grad;
                for (std::size_t i = 0; i < n; ++i)
                    for (std::size_t j = 0; j < d; ++j)
                        dr[i * d + j] += vw[i] * dy[j];
            }
        };
    return id;
}

Tape::Id Tape::cross_entropy(Id logits, int label) {
    const Tensor& tl = value(logits);
    if (!tl.finite()) throw NumericError("cross_entropy: non-finite logits");
    std::size_t n = tl.numel();
    if (tl.rank() == 2 && tl.rows() != 1)
        throw TensorError("cross_entropy: logits must be a vector");
    if (label < 0 || std::size_t(label) >= n)
        throw TensorError("cross_entropy: label out of range");
    double mx = *std::max_element(tl.values.begin(), tl.values.end());
    double z = 0.0;
    for (double v : tl.values) z += std::exp(v - mx);
    double loss = mx + std::log(z) - tl.values[std::size_t(label)];
    bool rg = node(logits).rg;
    Id id = push(Tensor::scalar(loss), rg, {});
    if (rg)
        node(id).back = [this, logits, id, label, mx, z, n] {
            double dl = node(id).grad[0];
            const auto& v = node(logits).val.values;
            auto& dlog = node(logits).grad;
            for (std::size_t i = 0; i < n; ++i) {
                double soft = std::exp(v[i] - mx) / z;
                dlog[i] += dl * (soft - (std::size_t(label) == i ? 1.0 : 0.0));
            }
        };
    return id;
}

Tape::Id Tape::concat_cols(Id a, Id b) {
    const Tensor& ta = value(a);
    const Tensor& tb = value(b);
    if (ta.rows() != tb.rows())
        throw TensorError("concat_cols: row count mismatch");
    std::size_t rows = ta.rows(), ca = ta.cols(), cb = tb.cols();
    Tensor out({rows, ca + cb});
    for (std::size_t i = 0; i < rows; ++i) {
        std::copy_n(ta.values.begin() + i * ca, ca,
                    out.values.begin() + i * (ca + cb));
        std::copy_n(tb.values.begin() + i * cb, cb,
                    out.values.begin() + i * (ca + cb) + ca);
    }
    bool rg = node(a).rg || node(b).rg;
    Id id = push(std::move(out), rg, {});
    if (rg)
        node(id).back = [this, a, b, id, rows, ca, cb] {
            const auto& dy = node(id).grad;
            if (node(a).rg) {
                auto& da = node(a).grad;
                for (std::size_t i = 0; i < rows; ++i)
                    for (std::size_t j = 0; j < ca; ++j)
                        da[i * ca + j] += dy[i * (ca + cb) + j];
            }
            if (node(b).rg) {
                auto& db = node(b).grad;
                for (std::size_t i = 0; i < rows; ++i)
                    for (std::size_t j = 0; j < cb; ++j)
                        db[i * cb + j] += dy[i * (ca + cb) + ca + j];
            }
        };
    return id;
}

Tape::Id Tape::tree_conv(Id states, Id wt, Id wl, Id wr, Id bias,
                         std::shared_ptr<const ConvWindows> windows) {
    const Tensor& ts = value(states);
    std::size_t n = ts.rows(), d = ts.cols();
    if (!windows || windows->size() != n)
        throw TensorError("tree_conv: window/state row mismatch");
    for (Id w : {wt, wl, wr})
        if (value(w).rows() != d || value(w).cols() != d)
            throw TensorError("tree_conv: weight must be d x d");
    if (value(bias).numel() != d)
        throw TensorError("tree_conv: bias must have d entries");
    Tensor out({n, d});
    auto fwd = parallel_ ? kern::tree_conv_forward_omp
                         : kern::tree_conv_forward_serial;
    fwd(ts.values.data(), n, d, value(wt).values.data(),
        value(wl).values.data(), value(wr).values.data(),
        value(bias).values.data(), *windows, out.values.data());
    bool rg = node(states).rg || node(wt).rg || node(wl).rg || node(wr).rg ||
              node(bias).rg;
    Id id = push(std::move(out), rg, {});
    if (rg)
        node(id).back = [this, states, wt, wl, wr, bias, id, n, d,
                         windows = std::move(windows)] {
            auto bwd = parallel_ ? kern::tree_conv_backward_omp
                                 : kern::tree_conv_backward_serial;
            // scratch buffers for inputs that do not need gradients
            std::vector<double> sink_states, sink_w1, sink_w2, sink_w3,
                sink_b;
            auto buf = [&](Id in, std::vector<double>& sink) -> double* {
                if (node(in).rg) return node(in).grad.data();
                sink.assign(node(in).val.numel(), 0.0);
                return sink.data();
            };
            bwd(node(states).val.values.data(), node(id).val.values.data(),
                node(id).grad.data(), n, d, node(wt).val.values.data(),
                node(wl).val.values.data(), node(wr).val.values.data(),
                *windows, buf(states, sink_states), buf(wt, sink_w1),
                buf(wl, sink_w2), buf(wr, sink_w3), buf(bias, sink_b));
        };
    return id;
}

void Tape::backward(Id loss) {
    Node& l = node(loss);
    if (l.val.numel() != 1) throw TensorError("backward: loss is not scalar");
    if (!l.rg)
        throw TensorError("backward: loss does not depend on any gradient");
    l.grad[0] = 1.0;
    for (Id id = loss; id >= 0; --id) {
        Node& n = nodes_[id];
        if (n.rg && n.back) n.back();
    }
}

GradCheckReport gradient_check(const TapeFn& f, const Tensor& x, double h,
                               double tol) {
    Tensor input = x;
    input.requires_grad = true;
    std::vector<double> analytic;
    {
        Tape tape;
        Tape::Id xid = tape.leaf(input);
        Tape::Id loss = f(tape, xid);
        tape.backward(loss);
        analytic = tape.grad(xid);
    }
    auto eval = [&](const std::vector<double>& vals) {
        Tensor probe = x;
        probe.requires_grad = false;
        probe.values = vals;
        Tape tape;
        return tape.scalar_value(f(tape, tape.leaf(probe)));
    };
    GradCheckReport rep;
    std::vector<double> vals = x.values;
    for (std::size_t i = 0; i < vals.size(); ++i) {
        double keep = vals[i];
        vals[i] = keep + h;
        double up = eval(vals);
        vals[i] = keep - h;
        double down = eval(vals);
        vals[i] = keep;
        double numeric = (up - down) / (2.0 * h);
        double denom = std::max({std::abs(analytic[i]), std::abs(numeric), 1.0});
        double rel = std::abs(analytic[i] - numeric) / denom;
        if (rel > rep.max_rel_err) {
            rep.max_rel_err = rel;
            rep.worst_index = i;
        }
    }
    rep.pass = rep.max_rel_err <= tol;
    return rep;
}

GradCheckReport gradient_check(
    const std::function<double(const std::vector<double>&)>& value_fn,
    const std::function<std::vector<double>(const std::vector<double>&)>&
        grad_fn,
    const std::vector<double>& x, double h, double tol) {
    std::vector<double> analytic = grad_fn(x);
    GradCheckReport rep;
    std::vector<double> vals = x;
    for (std::size_t i = 0; i < vals.size(); ++i) {
        double keep = vals[i];
        vals[i] = keep + h;
        double up = value_fn(vals);
        vals[i] = keep - h;
        double down = value_fn(vals);
        vals[i] = keep;
        double numeric = (up - down) / (2.0 * h);
        double denom = std::max({std::abs(analytic[i]), std::abs(numeric), 1.0});
        double rel = std::abs(analytic[i] - numeric) / denom;
        if (rel > rep.max_rel_err) {
            rep.max_rel_err = rel;
            rep.worst_index = i;
        }
    }
    rep.pass = rep.max_rel_err <= tol;
    return rep;
}

}  // namespace s2v
