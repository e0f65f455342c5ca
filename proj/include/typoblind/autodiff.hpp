#pragma once

// Reverse-mode automatic differentiation over small dense row-major tensors.
//
// A Tape records every operation of one training step. Each recorded node
// owns its value, a gradient buffer, the ids of its inputs and a backward
// rule. Nodes are appended in evaluation order, so a reverse sweep over the
// node list is a valid topological order for backpropagation. Node storage is
// a deque: references returned by value() stay valid while the tape grows.
//
// Parameters live outside the tape. Tape::param() inserts a leaf bound to a
// Parameter; backward() adds the leaf gradient into Parameter::grad, so
// calling backward() twice without an optimizer step accumulates.

#include <algorithm>
#include <array>
#include <initializer_list>
#include <cmath>
#include <cstddef>
#include <deque>
#include <deque>
#include <functional>
#include <numeric>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "typoblind/errors.hpp"

namespace typoblind::ad {

using Shape = std::vector<std::size_t>;

inline std::string shape_string(const Shape& shape) {
    std::ostringstream out;
    out << '[';
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) out << 'x';
        out << shape[i];
    }
    out << ']';
    return out.str();
}

inline std::size_t shape_size(const Shape& shape) {
    return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>{});
}

/// Dense tensor of doubles. An empty shape denotes a scalar.
class Tensor {
public:
    Tensor() : values_(1, 0.0) {}

    Tensor(Shape shape, std::vector<double> values, bool requires_grad = false)
        : shape_(std::move(shape)), values_(std::move(values)), requires_grad_(requires_grad) {
        for (auto d : shape_) {
            if (d == 0) throw ShapeError("tensor dimension must be positive, got " + shape_string(shape_));
        }
        if (shape_size(shape_) != values_.size()) {
            throw ShapeError("tensor shape " + shape_string(shape_) + " does not match " +
                             std::to_string(values_.size()) + " values");
        }
    }

    static Tensor zeros(Shape shape) {
        const auto n = shape_size(shape);
        return Tensor(std::move(shape), std::vector<double>(n, 0.0));
    }

    static Tensor filled(Shape shape, double value) {
        const auto n = shape_size(shape);
        return Tensor(std::move(shape), std::vector<double>(n, value));
    }

    static Tensor scalar(double value) { return Tensor({}, {value}); }

    static Tensor matrix(std::size_t rows, std::size_t cols, std::vector<double> values) {
        return Tensor({rows, cols}, std::move(values));
    }

    static Tensor vector(std::vector<double> values) {
        const auto n = values.size();
        return Tensor({n}, std::move(values));
    }

    const Shape& shape() const noexcept { return shape_; }
    std::size_t rank() const noexcept { return shape_.size(); }
    std::size_t size() const noexcept { return values_.size(); }
    bool is_scalar() const noexcept { return values_.size() == 1; }

    /// Extent of the last axis (1 for a scalar).
    std::size_t last_dim() const noexcept { return shape_.empty() ? 1 : shape_.back(); }
    /// Product of all axes but the last.
    std::size_t outer_size() const noexcept { return size() / last_dim(); }

    std::size_t rows() const {
        require_matrix();
        return shape_[0];
    }
    std::size_t cols() const {
        require_matrix();
        return shape_[1];
    }

    std::span<const double> values() const noexcept { return values_; }
    std::span<double> values() noexcept { return values_; }
    const std::vector<double>& data() const noexcept { return values_; }

    double operator[](std::size_t i) const { return values_[i]; }
    double& operator[](std::size_t i) { return values_[i]; }
    double at(std::size_t r, std::size_t c) const { return values_[r * cols() + c]; }
    double& at(std::size_t r, std::size_t c) { return values_[r * cols() + c]; }
    double item() const {
        if (!is_scalar()) throw ShapeError("item() on non-scalar tensor " + shape_string(shape_));
        return values_[0];
    }

    bool requires_grad() const noexcept { return requires_grad_; }
    void set_requires_grad(bool flag) noexcept { requires_grad_ = flag; }

    bool all_finite() const noexcept {
        return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
    }

    friend bool operator==(const Tensor& a, const Tensor& b) {
        return a.shape_ == b.shape_ && a.values_ == b.values_;
    }

private:
    void require_matrix() const {
        if (shape_.size() != 2) throw ShapeError("expected a matrix, got " + shape_string(shape_));
    }

    Shape shape_;
    std::vector<double> values_;
    bool requires_grad_ = false;
};

/// Trainable tensor with its gradient accumulator and adaptive-moment state.
struct Parameter {
    std::string name;
    Tensor value;
    std::vector<double> grad;
    bool has_grad = false;
    std::vector<double> first_moment;
    std::vector<double> second_moment;
    std::size_t steps = 0;

    Parameter() = default;
    Parameter(std::string n, Tensor v)
        : name(std::move(n)), value(std::move(v)), grad(value.size(), 0.0),
          first_moment(value.size(), 0.0), second_moment(value.size(), 0.0) {
        value.set_requires_grad(true);
    }

    void zero_grad() {
        std::fill(grad.begin(), grad.end(), 0.0);
        has_grad = false;
    }
};

class Tape;

/// Handle to a node on a tape. Cheap to copy; valid while the tape lives.
struct Var {
    Tape* tape = nullptr;
    std::size_t id = 0;

    const Tensor& value() const;
    const Shape& shape() const { return value().shape(); }
    std::span<const double> grad() const;
    bool requires_grad() const;
};

class Tape {
public:
    using BackwardFn = std::function<void(Tape&, std::size_t)>;

    Tape() = default;
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    Var constant(Tensor value) { return push(std::move(value), {}, {}, false); }

    Var leaf(Tensor value) {
        const bool rg = value.requires_grad();
        return push(std::move(value), {}, {}, rg);
    }

    Var param(Parameter& p) {
        Var v = push(p.value, {}, {}, true);
        nodes_[v.id].param = &p;
        return v;
    }

    /// Record an operation. The node requires a gradient when any input does.
    Var record(Tensor value, std::vector<std::size_t> inputs, BackwardFn backward) {
        bool rg = false;
        for (auto i : inputs) rg = rg || nodes_.at(i).requires_grad;
        return push(std::move(value), std::move(inputs), rg ? std::move(backward) : BackwardFn{}, rg);
    }

    const Tensor& value(std::size_t id) const { return nodes_.at(id).value; }
    bool requires_grad(std::size_t id) const { return nodes_.at(id).requires_grad; }
    std::span<const double> grad(std::size_t id) const { return nodes_.at(id).grad; }
    std::span<double> grad_buffer(std::size_t id) { return nodes_[id].grad; }
    std::size_t size() const noexcept { return nodes_.size(); }

    /// Reverse sweep from a scalar loss. Gradients reach every node that
    /// requires one; leaves bound to parameters add into Parameter::grad.
    void backward(Var loss) {
        if (loss.tape != this) throw ValidationError("loss was not produced on this tape");
        const Tensor& lv = value(loss.id);
        if (!lv.is_scalar()) throw ShapeError("backward needs a scalar loss, got " + shape_string(lv.shape()));
        for (auto& n : nodes_) std::fill(n.grad.begin(), n.grad.end(), 0.0);
        if (!nodes_[loss.id].requires_grad) return;
        nodes_[loss.id].grad[0] = 1.0;
        for (std::size_t i = loss.id + 1; i-- > 0;) {
            Node& n = nodes_[i];
            if (!n.requires_grad) continue;
            if (n.backward) n.backward(*this, i);
            if (n.param) {
                Parameter& p = *n.param;
                for (std::size_t k = 0; k < n.grad.size(); ++k) p.grad[k] += n.grad[k];
                p.has_grad = true;
            }
        }
    }

    /// Adds `g` into the gradient buffer of input `id` when it wants one.
    void accumulate(std::size_t id, std::span<const double> g) {
        Node& n = nodes_[id];
        if (!n.requires_grad) return;
        for (std::size_t k = 0; k < g.size(); ++k) n.grad[k] += g[k];
    }

private:
    struct Node {
        Tensor value;
        std::vector<double> grad;
        std::vector<std::size_t> inputs;
        BackwardFn backward;
        bool requires_grad = false;
        Parameter* param = nullptr;
    };

    Var push(Tensor value, std::vector<std::size_t> inputs, BackwardFn backward, bool requires_grad) {
        Node n;
        n.grad.assign(requires_grad ? value.size() : 0, 0.0);
        n.value = std::move(value);
        n.inputs = std::move(inputs);
        n.backward = std::move(backward);
        n.requires_grad = requires_grad;
        nodes_.push_back(std::move(n));
        return Var{this, nodes_.size() - 1};
    }

    std::deque<Node> nodes_;
};

inline const Tensor& Var::value() const { return tape->value(id); }
inline std::span<const double> Var::grad() const { return tape->grad(id); }
inline bool Var::requires_grad() const { return tape->requires_grad(id); }

namespace detail {

inline void same_tape(Var a, Var b) {
    if (a.tape != b.tape || a.tape == nullptr) throw ValidationError("operands live on different tapes");
}

inline void same_shape(const char* op, const Tensor& a, const Tensor& b) {
    if (a.shape() != b.shape()) {
        throw ShapeError(std::string(op) + ": shape mismatch " + shape_string(a.shape()) + " vs " +
                         shape_string(b.shape()));
    }
}

// c[m×n] += a[m×k] · b[k×n]
inline void gemm_acc(const double* a, const double* b, double* c, std::size_t m, std::size_t k, std::size_t n) {
    for (std::size_t i = 0; i < m; ++i) {
        double* crow = c + i * n;
        const double* arow = a + i * k;
        for (std::size_t p = 0; p < k; ++p) {
            const double av = arow[p];
            if (av == 0.0) continue;
            const double* brow = b + p * n;
            for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
        }
    }
}

} // namespace detail


// ---------------------------------------------------------------------------
// Linear algebra

inline Var matmul(Var a, Var b) {
    detail::same_tape(a, b);
    const Tensor& av = a.value();
    const Tensor& bv = b.value();
    if (av.rank() != 2 || bv.rank() != 2 || av.cols() != bv.rows()) {
        throw ShapeError("matmul: inner dimensions disagree, " + shape_string(av.shape()) + " by " +
                         shape_string(bv.shape()));
    }
    const std::size_t m = av.rows(), k = av.cols(), n = bv.cols();
    Tensor out = Tensor::zeros({m, n});
    detail::gemm_acc(av.data().data(), bv.data().data(), out.values().data(), m, k, n);
    const std::size_t ia = a.id, ib = b.id;
    return a.tape->record(std::move(out), {ia, ib}, [ia, ib, m, k, n](Tape& t, std::size_t self) {
        auto g = t.grad(self);
        const auto& A = t.value(ia).data();
        const auto& B = t.value(ib).data();
        if (t.requires_grad(ia)) {
            // dA = dC · Bᵀ
            auto ga = t.grad_buffer(ia);
            for (std::size_t i = 0; i < m; ++i) {
                const double* grow = g.data() + i * n;
                for (std::size_t p = 0; p < k; ++p) {
                    const double* brow = B.data() + p * n;
                    double s = 0.0;
                    for (std::size_t j = 0; j < n; ++j) s += grow[j] * brow[j];
                    ga[i * k + p] += s;
                }
            }
        }
        if (t.requires_grad(ib)) {
            // dB = Aᵀ · dC
            auto gb = t.grad_buffer(ib);
            for (std::size_t i = 0; i < m; ++i) {
                const double* grow = g.data() + i * n;
                for (std::size_t p = 0; p < k; ++p) {
                    const double av_ip = A[i * k + p];
                    if (av_ip == 0.0) continue;
                    double* gbrow = gb.data() + p * n;
                    for (std::size_t j = 0; j < n; ++j) gbrow[j] += av_ip * grow[j];
                }
            }
        }
    });
}

// ---------------------------------------------------------------------------
// Elementwise

inline Var add(Var a, Var b) {
    detail::same_tape(a, b);
    detail::same_shape("add", a.value(), b.value());
    Tensor out = a.value();
    auto ov = out.values();
    const auto bv = b.value().values();
    for (std::size_t i = 0; i < ov.size(); ++i) ov[i] += bv[i];
    const std::size_t ia = a.id, ib = b.id;
    return a.tape->record(std::move(out), {ia, ib}, [ia, ib](Tape& t, std::size_t self) {
        t.accumulate(ia, t.grad(self));
        t.accumulate(ib, t.grad(self));
    });
}

inline Var sub(Var a, Var b) {
    detail::same_tape(a, b);
    detail::same_shape("sub", a.value(), b.value());
    Tensor out = a.value();
    auto ov = out.values();
    const auto bv = b.value().values();
    for (std::size_t i = 0; i < ov.size(); ++i) ov[i] -= bv[i];
    const std::size_t ia = a.id, ib = b.id;
    return a.tape->record(std::move(out), {ia, ib}, [ia, ib](Tape& t, std::size_t self) {
        t.accumulate(ia, t.grad(self));
        if (t.requires_grad(ib)) {
            auto g = t.grad(self);
            auto gb = t.grad_buffer(ib);
            for (std::size_t i = 0; i < g.size(); ++i) gb[i] -= g[i];
        }
    });
}

inline Var mul(Var a, Var b) {
    detail::same_tape(a, b);
    detail::same_shape("mul", a.value(), b.value());
    Tensor out = a.value();
    auto ov = out.values();
    const auto bv = b.value().values();
    for (std::size_t i = 0; i < ov.size(); ++i) ov[i] *= bv[i];
    const std::size_t ia = a.id, ib = b.id;
    return a.tape->record(std::move(out), {ia, ib}, [ia, ib](Tape& t, std::size_t self) {
        auto g = t.grad(self);
        const auto av = t.value(ia).values();
        const auto bv = t.value(ib).values();
        if (t.requires_grad(ia)) {
            auto ga = t.grad_buffer(ia);
            for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * bv[i];
        }
        if (t.requires_grad(ib)) {
            auto gb = t.grad_buffer(ib);
            for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * av[i];
        }
    });
}

inline Var scale(Var a, double factor) {
    Tensor out = a.value();
    for (auto& v : out.values()) v *= factor;
    const std::size_t ia = a.id;
    return a.tape->record(std::move(out), {ia}, [ia, factor](Tape& t, std::size_t self) {
        auto g = t.grad(self);
        auto ga = t.grad_buffer(ia);
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += factor * g[i];
    });
}

/// Adds a bias vector of length d to every row of a [N×d] matrix.
inline Var add_bias(Var x, Var bias) {
    detail::same_tape(x, bias);
    const Tensor& xv = x.value();
    const Tensor& bv = bias.value();
    if (xv.rank() != 2 || bv.size() != xv.cols()) {
        throw ShapeError("add_bias: bias " + shape_string(bv.shape()) + " does not fit rows of " +
                         shape_string(xv.shape()));
    }
    const std::size_t n = xv.rows(), d = xv.cols();
    Tensor out = xv;
    auto ov = out.values();
    for (std::size_t r = 0; r < n; ++r)
        for (std::size_t c = 0; c < d; ++c) ov[r * d + c] += bv[c];
    const std::size_t ix = x.id, ib = bias.id;
    return x.tape->record(std::move(out), {ix, ib}, [ix, ib, n, d](Tape& t, std::size_t self) {
        auto g = t.grad(self);
        t.accumulate(ix, g);
        if (t.requires_grad(ib)) {
            auto gb = t.grad_buffer(ib);
            for (std::size_t r = 0; r < n; ++r)
                for (std::size_t c = 0; c < d; ++c) gb[c] += g[r * d + c];
        }
    });
}

inline Var tanh(Var x) {
    Tensor out = x.value();
    for (auto& v : out.values()) v = std::tanh(v);
    const std::size_t ix = x.id;
    return x.tape->record(std::move(out), {ix}, [ix](Tape& t, std::size_t self) {
        auto g = t.grad(self);
        const auto y = t.value(self).values();
        auto gx = t.grad_buffer(ix);
        for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * (1.0 - y[i] * y[i]);
    });
}

// ---------------------------------------------------------------------------
// Reductions

inline Var sum(Var x) {
    double s = 0.0;
    for (double v : x.value().values()) s += v;
    const std::size_t ix = x.id;
    return x.tape->record(Tensor::scalar(s), {ix}, [ix](Tape& t, std::size_t self) {
        const double g = t.grad(self)[0];
        auto gx = t.grad_buffer(ix);
        for (auto& v : gx) v += g;
    });
}

inline Var mean(Var x) { return scale(sum(x), 1.0 / static_cast<double>(x.value().size())); }

// ---------------------------------------------------------------------------
// Probabilities and losses

namespace detail {

inline void softmax_rows(std::span<const double> in, std::span<double> out, std::size_t rows, std::size_t k) {
    for (std::size_t r = 0; r < rows; ++r) {
        const double* x = in.data() + r * k;
        double* y = out.data() + r * k;
        const double mx = *std::max_element(x, x + k);
        double z = 0.0;
        for (std::size_t c = 0; c < k; ++c) {
            y[c] = std::exp(x[c] - mx);
            z += y[c];
        }
        for (std::size_t c = 0; c < k; ++c) y[c] /= z;
    }
}

} // namespace detail

/// Softmax over the last axis, max-subtracted.
inline Var softmax(Var x) {
    const Tensor& xv = x.value();
    const std::size_t k = xv.last_dim(), rows = xv.outer_size();
    Tensor out = Tensor::zeros(xv.shape().empty() ? Shape{} : xv.shape());
    detail::softmax_rows(xv.values(), out.values(), rows, k);
    const std::size_t ix = x.id;
    return x.tape->record(std::move(out), {ix}, [ix, rows, k](Tape& t, std::size_t self) {
        auto g = t.grad(self);
        const auto y = t.value(self).values();
        auto gx = t.grad_buffer(ix);
        for (std::size_t r = 0; r < rows; ++r) {
            double dot = 0.0;
            for (std::size_t c = 0; c < k; ++c) dot += g[r * k + c] * y[r * k + c];
            for (std::size_t c = 0; c < k; ++c) gx[r * k + c] += y[r * k + c] * (g[r * k + c] - dot);
        }
    });
}

/// Mean over the batch of -log softmax(logits)[target].
inline Var cross_entropy(Var logits, std::span<const std::size_t> targets) {
    const Tensor& lv = logits.value();
    if (lv.rank() != 2) throw ShapeError("cross_entropy: logits must be [B×K], got " + shape_string(lv.shape()));
    const std::size_t b = lv.rows(), k = lv.cols();
    if (targets.size() != b) {
        throw ShapeError("cross_entropy: " + std::to_string(targets.size()) + " targets for " + std::to_string(b) +
                         " rows");
    }
    for (std::size_t i = 0; i < b; ++i) {
        if (targets[i] >= k) {
            throw ValidationError("cross_entropy: target " + std::to_string(targets[i]) + " out of range [0, " +
                                  std::to_string(k) + ")");
        }
    }
    std::vector<double> probs(b * k);
    detail::softmax_rows(lv.values(), probs, b, k);
    double loss = 0.0;
    const auto x = lv.values();
    for (std::size_t i = 0; i < b; ++i) {
        const double* row = x.data() + i * k;
        const double mx = *std::max_element(row, row + k);
        double z = 0.0;
        for (std::size_t c = 0; c < k; ++c) z += std::exp(row[c] - mx);
        loss += (mx + std::log(z)) - row[targets[i]];
    }
    loss /= static_cast<double>(b);
    std::vector<std::size_t> tgt(targets.begin(), targets.end());
    const std::size_t il = logits.id;
    return logits.tape->record(
        Tensor::scalar(loss), {il},
        [il, b, k, probs = std::move(probs), tgt = std::move(tgt)](Tape& t, std::size_t self) {
            const double g = t.grad(self)[0] / static_cast<double>(b);
            auto gl = t.grad_buffer(il);
            for (std::size_t i = 0; i < b; ++i) {
                for (std::size_t c = 0; c < k; ++c) {
                    const double onehot = (c == tgt[i]) ? 1.0 : 0.0;
                    gl[i * k + c] += g * (probs[i * k + c] - onehot);
                }
            }
        });
}

// ---------------------------------------------------------------------------
// Gradient control

/// Identity forward; backward multiplies the upstream gradient by -lambda.
inline Var gradient_reversal(Var x, double lambda) {
    if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
        throw ValidationError("gradient_reversal: lambda must be a finite nonnegative magnitude, got " +
                              std::to_string(lambda));
    }
    const std::size_t ix = x.id;
    return x.tape->record(x.value(), {ix}, [ix, lambda](Tape& t, std::size_t self) {
        auto g = t.grad(self);
        auto gx = t.grad_buffer(ix);
        const double factor = -lambda;
        for (std::size_t i = 0; i < g.size(); ++i) gx[i] += factor * g[i];
    });
}

/// Identity forward; no gradient flows back.
inline Var stop_gradient(Var x) { return x.tape->constant(x.value()); }

// ---------------------------------------------------------------------------
// Sequence plumbing. A batch of sentences is stored as the concatenation of
// their token rows; `lengths` gives the number of rows per sentence.

namespace detail {

inline std::size_t check_lengths(const char* op, std::span<const std::size_t> lengths, std::size_t rows) {
    std::size_t total = 0;
    for (auto l : lengths) {
        if (l == 0) throw ShapeError(std::string(op) + ": empty sentence in batch");
        total += l;
    }
    if (total != rows) {
        throw ShapeError(std::string(op) + ": sentence lengths cover " + std::to_string(total) + " rows, tensor has " +
                         std::to_string(rows));
    }
    return total;
}

} // namespace detail

/// Rows of `table` selected by `indices`: [N×e].
inline Var embedding_lookup(Var table, std::span<const std::size_t> indices) {
    const Tensor& tv = table.value();
    if (tv.rank() != 2) throw ShapeError("embedding_lookup: table must be a matrix");
    if (indices.empty()) throw ShapeError("embedding_lookup: no indices");
    const std::size_t v = tv.rows(), e = tv.cols(), n = indices.size();
    Tensor out = Tensor::zeros({n, e});
    for (std::size_t r = 0; r < n; ++r) {
        if (indices[r] >= v) {
            throw ValidationError("embedding_lookup: index " + std::to_string(indices[r]) + " outside table of " +
                                  std::to_string(v) + " rows");
        }
        std::copy_n(tv.data().data() + indices[r] * e, e, out.values().data() + r * e);
    }
    std::vector<std::size_t> idx(indices.begin(), indices.end());
    const std::size_t it = table.id;
    return table.tape->record(std::move(out), {it}, [it, e, idx = std::move(idx)](Tape& t, std::size_t self) {
        auto g = t.grad(self);
        auto gt = t.grad_buffer(it);
        for (std::size_t r = 0; r < idx.size(); ++r)
            for (std::size_t c = 0; c < e; ++c) gt[idx[r] * e + c] += g[r * e + c];
    });
}

/// Mean over the sequence axis: [N×d] rows grouped by `lengths` -> [B×d].
inline Var mean_pool(Var x, std::span<const std::size_t> lengths) {
    const Tensor& xv = x.value();
    if (xv.rank() != 2) throw ShapeError("mean_pool: expected [N×d]");
    detail::check_lengths("mean_pool", lengths, xv.rows());
    const std::size_t d = xv.cols(), b = lengths.size();
    Tensor out = Tensor::zeros({b, d});
    std::size_t row = 0;
    for (std::size_t s = 0; s < b; ++s) {
        for (std::size_t r = 0; r < lengths[s]; ++r, ++row)
            for (std::size_t c = 0; c < d; ++c) out.at(s, c) += xv.at(row, c);
        for (std::size_t c = 0; c < d; ++c) out.at(s, c) /= static_cast<double>(lengths[s]);
    }
    std::vector<std::size_t> lens(lengths.begin(), lengths.end());
    const std::size_t ix = x.id;
    return x.tape->record(std::move(out), {ix}, [ix, d, lens = std::move(lens)](Tape& t, std::size_t self) {
        auto g = t.grad(self);
        auto gx = t.grad_buffer(ix);
        std::size_t row = 0;
        for (std::size_t s = 0; s < lens.size(); ++s) {
            const double inv = 1.0 / static_cast<double>(lens[s]);
            for (std::size_t r = 0; r < lens[s]; ++r, ++row)
                for (std::size_t c = 0; c < d; ++c) gx[row * d + c] += g[s * d + c] * inv;
        }
    });
}

/// Column-wise concatenation of matrices with equal row counts.
inline Var concat(std::span<const Var> parts) {
    if (parts.empty()) throw ShapeError("concat: nothing to concatenate");
    const std::size_t n = parts[0].value().rows();
    std::size_t width = 0;
    std::vector<std::size_t> ids, widths;
    for (const Var& p : parts) {
        detail::same_tape(parts[0], p);
        const Tensor& v = p.value();
        if (v.rank() != 2 || v.rows() != n) {
            throw ShapeError("concat: part " + shape_string(v.shape()) + " does not have " + std::to_string(n) +
                             " rows");
        }
        ids.push_back(p.id);
        widths.push_back(v.cols());
        width += v.cols();
    }
    Tensor out = Tensor::zeros({n, width});
    std::size_t off = 0;
    for (std::size_t k = 0; k < parts.size(); ++k) {
        const Tensor& v = parts[k].value();
        for (std::size_t r = 0; r < n; ++r)
            std::copy_n(v.data().data() + r * widths[k], widths[k], out.values().data() + r * width + off);
        off += widths[k];
    }
    return parts[0].tape->record(std::move(out), ids, [ids, widths, n, width](Tape& t, std::size_t self) {
        auto g = t.grad(self);
        std::size_t off = 0;
        for (std::size_t k = 0; k < ids.size(); ++k) {
            if (t.requires_grad(ids[k])) {
                auto gp = t.grad_buffer(ids[k]);
                for (std::size_t r = 0; r < n; ++r)
                    for (std::size_t c = 0; c < widths[k]; ++c) gp[r * widths[k] + c] += g[r * width + off + c];
            }
            off += widths[k];
        }
    });
}

inline Var concat(std::initializer_list<Var> parts) {
    return concat(std::span<const Var>(parts.begin(), parts.size()));
}

/// Each row becomes [previous row, row, next row] within its sentence;
/// positions past a sentence boundary are zero. [N×e] -> [N×3e].
inline Var context_window(Var x, std::span<const std::size_t> lengths) {
    const Tensor& xv = x.value();
    if (xv.rank() != 2) throw ShapeError("context_window: expected [N×e]");
    detail::check_lengths("context_window", lengths, xv.rows());
    const std::size_t e = xv.cols(), n = xv.rows(), w = 3 * e;
    // source row for each (row, slot); n means padding
    std::vector<std::size_t> src(3 * n, n);
    std::size_t row = 0;
    for (auto len : lengths) {
        for (std::size_t p = 0; p < len; ++p, ++row) {
            if (p > 0) src[3 * row] = row - 1;
            src[3 * row + 1] = row;
            if (p + 1 < len) src[3 * row + 2] = row + 1;
        }
    }
    Tensor out = Tensor::zeros({n, w});
    for (std::size_t r = 0; r < n; ++r)
        for (std::size_t s = 0; s < 3; ++s)
            if (src[3 * r + s] < n)
                std::copy_n(xv.data().data() + src[3 * r + s] * e, e, out.values().data() + r * w + s * e);
    const std::size_t ix = x.id;
    return x.tape->record(std::move(out), {ix}, [ix, e, n, w, src = std::move(src)](Tape& t, std::size_t self) {
        auto g = t.grad(self);
        auto gx = t.grad_buffer(ix);
        for (std::size_t r = 0; r < n; ++r)
            for (std::size_t s = 0; s < 3; ++s)
                if (src[3 * r + s] < n)
                    for (std::size_t c = 0; c < e; ++c) gx[src[3 * r + s] * e + c] += g[r * w + s * e + c];
    });
}

/// Σ_j weights[row, j] · inputs[j] for one row of a square mixing matrix.
/// Differentiable in both the weights and the inputs.
inline Var mix_row(Var weights, std::size_t row, std::span<const Var> inputs) {
    const Tensor& wv = weights.value();
    if (wv.rank() != 2 || wv.rows() != wv.cols()) {
        throw ShapeError("mix_row: weights must be square, got " + shape_string(wv.shape()));
    }
    const std::size_t l = wv.rows();
    if (inputs.size() != l) {
        throw ShapeError("mix_row: " + std::to_string(inputs.size()) + " inputs for a " + std::to_string(l) + "x" +
                         std::to_string(l) + " mixing matrix");
    }
    if (row >= l) throw ShapeError("mix_row: row " + std::to_string(row) + " out of range");
    const Shape& shape = inputs[0].value().shape();
    std::vector<std::size_t> ids{weights.id};
    for (const Var& in : inputs) {
        detail::same_tape(weights, in);
        if (in.value().shape() != shape) {
            throw ShapeError("mix_row: non-uniform input shapes " + shape_string(shape) + " vs " +
                             shape_string(in.value().shape()));
        }
        ids.push_back(in.id);
    }
    Tensor out = Tensor::zeros(shape);
    auto ov = out.values();
    for (std::size_t j = 0; j < l; ++j) {
        const double a = wv.at(row, j);
        const auto hv = inputs[j].value().values();
        for (std::size_t i = 0; i < ov.size(); ++i) ov[i] += a * hv[i];
    }
    return weights.tape->record(std::move(out), ids, [ids, row, l](Tape& t, std::size_t self) {
        auto g = t.grad(self);
        const std::size_t iw = ids[0];
        const Tensor& w = t.value(iw);
        for (std::size_t j = 0; j < l; ++j) {
            const std::size_t ih = ids[j + 1];
            if (t.requires_grad(iw)) {
                const auto hv = t.value(ih).values();
                double dot = 0.0;
                for (std::size_t i = 0; i < g.size(); ++i) dot += g[i] * hv[i];
                t.grad_buffer(iw)[row * l + j] += dot;
            }
            if (t.requires_grad(ih)) {
                const double a = w.at(row, j);
                auto gh = t.grad_buffer(ih);
                for (std::size_t i = 0; i < g.size(); ++i) gh[i] += a * g[i];
            }
        }
    });
}

// ---------------------------------------------------------------------------
// Optimization

enum class OptimizerKind { gradient_descent, adam };

struct OptimizerSettings {
    OptimizerKind kind = OptimizerKind::adam;
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

/// Updates every parameter in place from its accumulated gradient, then
/// clears the gradient. Throws when a parameter has no gradient.
inline void optimizer_step(std::span<Parameter* const> params, const OptimizerSettings& settings) {
    for (const Parameter* p : params) {
        if (!p->has_grad) throw ValidationError("optimizer_step: parameter '" + p->name + "' has no gradient");
    }
    for (Parameter* p : params) {
        auto w = p->value.values();
        const double lr = settings.learning_rate;
        if (settings.kind == OptimizerKind::gradient_descent) {
            for (std::size_t i = 0; i < w.size(); ++i) w[i] -= lr * p->grad[i];
        } else {
            ++p->steps;
            const double b1 = settings.beta1, b2 = settings.beta2;
            const double c1 = 1.0 - std::pow(b1, static_cast<double>(p->steps));
            const double c2 = 1.0 - std::pow(b2, static_cast<double>(p->steps));
            for (std::size_t i = 0; i < w.size(); ++i) {
                const double g = p->grad[i];
                p->first_moment[i] = b1 * p->first_moment[i] + (1.0 - b1) * g;
                p->second_moment[i] = b2 * p->second_moment[i] + (1.0 - b2) * g * g;
                const double mhat = p->first_moment[i] / c1;
                const double vhat = p->second_moment[i] / c2;
                w[i] -= lr * mhat / (std::sqrt(vhat) + settings.epsilon);
            }
        }
        p->zero_grad();
    }
}

} // namespace typoblind::ad
