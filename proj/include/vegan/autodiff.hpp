#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>
#include <string>
#include <unordered_set>
#include <vector>

#include "vegan/tensor.hpp"

namespace vegan {

struct ContractError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Node;
using Var = std::shared_ptr<Node>;

/// One record in a define-by-run computation graph. Op nodes are created fresh
/// on every forward pass; parameter leaves persist across passes.
struct Node {
    Tensor value;
    Tensor grad;
    bool requires_grad = false;
    std::vector<Var> parents;
    std::function<void(Node&)> backprop;
    std::string name;

    void ensure_grad() {
        if (grad.data.size() != value.data.size()) grad = Tensor::zeros(value.shape);
    }
    void zero_grad() { std::fill(grad.data.begin(), grad.data.end(), 0.0); }
};

inline Var make_param(Tensor t, std::string name = "") {
    auto n = std::make_shared<Node>();
    n->value = std::move(t);
    n->requires_grad = true;
    n->name = std::move(name);
    return n;
}

inline Var make_const(Tensor t) {
    auto n = std::make_shared<Node>();
    n->value = std::move(t);
    n->requires_grad = false;
    return n;
}

namespace detail {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatMap = Eigen::Map<RowMat>;
using ConstMatMap = Eigen::Map<const RowMat>;

inline ConstMatMap map_of(const Tensor& t) {
    return ConstMatMap(t.data.data(), static_cast<Eigen::Index>(t.rows()),
                       static_cast<Eigen::Index>(t.cols()));
}

inline MatMap map_of(Tensor& t) {
    return MatMap(t.data.data(), static_cast<Eigen::Index>(t.rows()),
                  static_cast<Eigen::Index>(t.cols()));
}

inline Var make_op(const char* op, Tensor out, std::vector<Var> parents,
                   std::function<void(Node&)> backprop) {
    auto n = std::make_shared<Node>();
    n->value = std::move(out);
    n->value.check_finite(op);
    n->parents = std::move(parents);
    for (const auto& p : n->parents)
        if (p->requires_grad) n->requires_grad = true;
    if (n->requires_grad) n->backprop = std::move(backprop);
    n->name = op;
    return n;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Primitive ops
// ---------------------------------------------------------------------------

inline Var matmul(const Var& a, const Var& b) {
    if (a->value.rank() != 2 || b->value.rank() != 2)
        throw DimensionError("matmul: expects rank-2 tensors");
    if (a->value.cols() != b->value.rows())
        throw DimensionError("matmul: inner dimensions differ " + a->value.shape_str() +
                             " x " + b->value.shape_str());
    Tensor out = Tensor::zeros({a->value.rows(), b->value.cols()});
    detail::map_of(out).noalias() = detail::map_of(a->value) * detail::map_of(b->value);
    return detail::make_op("matmul", std::move(out), {a, b}, [](Node& n) {
        const auto& a = n.parents[0];
        const auto& b = n.parents[1];
        auto g = detail::map_of(n.grad);
        if (a->requires_grad) {
            a->ensure_grad();
            detail::map_of(a->grad).noalias() += g * detail::map_of(b->value).transpose();
        }
        if (b->requires_grad) {
            b->ensure_grad();
            detail::map_of(b->grad).noalias() += detail::map_of(a->value).transpose() * g;
        }
    });
}

/// Elementwise add; also broadcasts a 1xN bias over MxN, or a scalar.
inline Var add(const Var& a, const Var& b) {
    const Tensor& av = a->value;
    const Tensor& bv = b->value;
    const bool same = av.shape == bv.shape;
    const bool row_bcast = !same && av.rank() == 2 && bv.cols() == av.cols() && bv.rows() == 1;
    const bool scalar_bcast = !same && !row_bcast && bv.is_scalar();
    if (!same && !row_bcast && !scalar_bcast)
        throw DimensionError("add: incompatible shapes " + av.shape_str() + " + " + bv.shape_str());
    Tensor out = av;
    if (same) {
        for (std::size_t i = 0; i < out.numel(); ++i) out.data[i] += bv.data[i];
    } else if (row_bcast) {
        for (std::size_t i = 0; i < av.rows(); ++i)
            for (std::size_t j = 0; j < av.cols(); ++j) out.at(i, j) += bv.data[j];
    } else {
        for (auto& v : out.data) v += bv.data[0];
    }
    return detail::make_op("add", std::move(out), {a, b}, [same, row_bcast](Node& n) {
        const auto& a = n.parents[0];
        const auto& b = n.parents[1];
        if (a->requires_grad) {
            a->ensure_grad();
            for (std::size_t i = 0; i < n.grad.numel(); ++i) a->grad.data[i] += n.grad.data[i];
        }
        if (b->requires_grad) {
            b->ensure_grad();
            if (same) {
                for (std::size_t i = 0; i < n.grad.numel(); ++i) b->grad.data[i] += n.grad.data[i];
            } else if (row_bcast) {
                for (std::size_t i = 0; i < n.grad.rows(); ++i)
                    for (std::size_t j = 0; j < n.grad.cols(); ++j)
                        b->grad.data[j] += n.grad.at(i, j);
            } else {
                for (double g : n.grad.data) b->grad.data[0] += g;
            }
        }
    });
}

inline Var sub(const Var& a, const Var& b) {
    const Tensor& av = a->value;
    const Tensor& bv = b->value;
    const bool same = av.shape == bv.shape;
    const bool scalar_bcast = !same && bv.is_scalar();
    if (!same && !scalar_bcast)
        throw DimensionError("sub: incompatible shapes " + av.shape_str() + " - " + bv.shape_str());
    Tensor out = av;
    if (same) {
        for (std::size_t i = 0; i < out.numel(); ++i) out.data[i] -= bv.data[i];
    } else {
        for (auto& v : out.data) v -= bv.data[0];
    }
    return detail::make_op("sub", std::move(out), {a, b}, [same](Node& n) {
        const auto& a = n.parents[0];
        const auto& b = n.parents[1];
        if (a->requires_grad) {
            a->ensure_grad();
            for (std::size_t i = 0; i < n.grad.numel(); ++i) a->grad.data[i] += n.grad.data[i];
        }
        if (b->requires_grad) {
            b->ensure_grad();
            if (same) {
                for (std::size_t i = 0; i < n.grad.numel(); ++i) b->grad.data[i] -= n.grad.data[i];
            } else {
                for (double g : n.grad.data) b->grad.data[0] -= g;
            }
        }
    });
}

/// Elementwise product; either operand may be a scalar.
inline Var mul(const Var& a, const Var& b) {
    const Tensor& av = a->value;
    const Tensor& bv = b->value;
    if (!(av.shape == bv.shape) && !av.is_scalar() && !bv.is_scalar())
        throw DimensionError("mul: incompatible shapes " + av.shape_str() + " * " + bv.shape_str());
    const Tensor& big = av.numel() >= bv.numel() ? av : bv;
    Tensor out = Tensor::zeros(big.shape);
    for (std::size_t i = 0; i < out.numel(); ++i)
        out.data[i] = av.data[av.is_scalar() ? 0 : i] * bv.data[bv.is_scalar() ? 0 : i];
    return detail::make_op("mul", std::move(out), {a, b}, [](Node& n) {
        const auto& a = n.parents[0];
        const auto& b = n.parents[1];
        const bool as = a->value.is_scalar(), bs = b->value.is_scalar();
        if (a->requires_grad) {
            a->ensure_grad();
            for (std::size_t i = 0; i < n.grad.numel(); ++i)
                a->grad.data[as ? 0 : i] += n.grad.data[i] * b->value.data[bs ? 0 : i];
        }
        if (b->requires_grad) {
            b->ensure_grad();
            for (std::size_t i = 0; i < n.grad.numel(); ++i)
                b->grad.data[bs ? 0 : i] += n.grad.data[i] * a->value.data[as ? 0 : i];
        }
    });
}

namespace detail {

template <typename Fwd, typename Bwd>
Var unary_op(const char* op, const Var& a, Fwd fwd, Bwd dydx_from_in_out) {
    Tensor out = a->value;
    for (auto& v : out.data) v = fwd(v);
    return detail::make_op(op, std::move(out), {a}, [dydx_from_in_out](Node& n) {
        const auto& a = n.parents[0];
        if (!a->requires_grad) return;
        a->ensure_grad();
        for (std::size_t i = 0; i < n.grad.numel(); ++i)
            a->grad.data[i] += n.grad.data[i] * dydx_from_in_out(a->value.data[i], n.value.data[i]);
    });
}

}  // namespace detail

inline Var square(const Var& a) {
    return detail::unary_op("square", a, [](double x) { return x * x; },
                            [](double x, double) { return 2.0 * x; });
}

inline Var log_op(const Var& a) {
    for (double v : a->value.data)
        if (v <= 0.0) throw NumericDomainError("log: non-positive input");
    return detail::unary_op("log", a, [](double x) { return std::log(x); },
                            [](double x, double) { return 1.0 / x; });
}

inline Var exp_op(const Var& a) {
    return detail::unary_op("exp", a, [](double x) { return std::exp(x); },
                            [](double, double y) { return y; });
}

inline Var sigmoid(const Var& a) {
    return detail::unary_op(
        "sigmoid", a,
        [](double x) { return x >= 0.0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x)); },
        [](double, double y) { return y * (1.0 - y); });
}

inline Var softplus(const Var& a) {
    return detail::unary_op(
        "softplus", a,
        [](double x) { return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); },
        [](double x, double) {
            return x >= 0.0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
        });
}

inline Var elu(const Var& a) {
    return detail::unary_op("elu", a,
                            [](double x) { return x > 0.0 ? x : std::expm1(x); },
                            [](double x, double y) { return x > 0.0 ? 1.0 : y + 1.0; });
}

inline Var relu(const Var& a) {
    return detail::unary_op("relu", a, [](double x) { return x > 0.0 ? x : 0.0; },
                            [](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
}

/// Clamp to [lo, hi]; gradient is passed through strictly inside the interval.
inline Var clamp(const Var& a, double lo, double hi) {
    return detail::unary_op(
        "clamp", a, [lo, hi](double x) { return std::min(std::max(x, lo), hi); },
        [lo, hi](double x, double) { return (x > lo && x < hi) ? 1.0 : 0.0; });
}

inline Var sum(const Var& a) {
    double s = 0.0;
    for (double v : a->value.data) s += v;
    return detail::make_op("sum", Tensor::scalar(s), {a}, [](Node& n) {
        const auto& a = n.parents[0];
        if (!a->requires_grad) return;
        a->ensure_grad();
        const double g = n.grad.data[0];
        for (auto& v : a->grad.data) v += g;
    });
}

inline Var mean(const Var& a) {
    if (a->value.numel() == 0) throw DimensionError("mean: empty tensor");
    double s = 0.0;
    for (double v : a->value.data) s += v;
    const double inv_n = 1.0 / static_cast<double>(a->value.numel());
    return detail::make_op("mean", Tensor::scalar(s * inv_n), {a}, [inv_n](Node& n) {
        const auto& a = n.parents[0];
        if (!a->requires_grad) return;
        a->ensure_grad();
        const double g = n.grad.data[0] * inv_n;
        for (auto& v : a->grad.data) v += g;
    });
}

/// Column-wise concatenation of two rank-2 tensors with equal row counts.
inline Var concat(const Var& a, const Var& b) {
    const Tensor& av = a->value;
    const Tensor& bv = b->value;
    if (av.rank() != 2 || bv.rank() != 2 || av.rows() != bv.rows())
        throw DimensionError("concat: expects rank-2 tensors with equal rows");
    const std::size_t m = av.rows(), ca = av.cols(), cb = bv.cols();
    Tensor out = Tensor::zeros({m, ca + cb});
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < ca; ++j) out.at(i, j) = av.at(i, j);
        for (std::size_t j = 0; j < cb; ++j) out.at(i, ca + j) = bv.at(i, j);
    }
    return detail::make_op("concat", std::move(out), {a, b}, [ca, cb](Node& n) {
        const auto& a = n.parents[0];
        const auto& b = n.parents[1];
        for (std::size_t i = 0; i < n.grad.rows(); ++i) {
            if (a->requires_grad) {
                a->ensure_grad();
                for (std::size_t j = 0; j < ca; ++j) a->grad.at(i, j) += n.grad.at(i, j);
            }
            if (b->requires_grad) {
                b->ensure_grad();
                for (std::size_t j = 0; j < cb; ++j) b->grad.at(i, j) += n.grad.at(i, ca + j);
            }
        }
    });
}

/// Contiguous row slice of a rank-2 tensor.
inline Var slice_rows(const Var& a, std::size_t start, std::size_t count) {
    const Tensor& av = a->value;
    if (av.rank() != 2) throw DimensionError("slice_rows: expects rank-2 tensor");
    if (start + count > av.rows()) throw DimensionError("slice_rows: out of range");
    const std::size_t c = av.cols();
    Tensor out = Tensor::zeros({count, c});
    std::copy(av.data.begin() + start * c, av.data.begin() + (start + count) * c,
              out.data.begin());
    return detail::make_op("slice_rows", std::move(out), {a}, [start, c](Node& n) {
        const auto& a = n.parents[0];
        if (!a->requires_grad) return;
        a->ensure_grad();
        for (std::size_t i = 0; i < n.grad.numel(); ++i)
            a->grad.data[start * c + i] += n.grad.data[i];
    });
}

inline Var neg(const Var& a) {
    return detail::unary_op("neg", a, [](double x) { return -x; },
                            [](double, double) { return -1.0; });
}

inline Var add_scalar(const Var& a, double c) { return add(a, make_const(Tensor::scalar(c))); }
inline Var mul_scalar(const Var& a, double c) { return mul(a, make_const(Tensor::scalar(c))); }

// ---------------------------------------------------------------------------
// Backward pass
// ---------------------------------------------------------------------------

inline void topo_order(const Var& root, std::vector<Node*>& order) {
    std::unordered_set<Node*> visited;
    std::vector<std::pair<Node*, std::size_t>> stack;
    stack.emplace_back(root.get(), 0);
    visited.insert(root.get());
    while (!stack.empty()) {
        auto& [node, idx] = stack.back();
        if (idx < node->parents.size()) {
            Node* p = node->parents[idx++].get();
            if (visited.insert(p).second) stack.emplace_back(p, 0);
        } else {
            order.push_back(node);
            stack.pop_back();
        }
    }
}

/// Reverse-mode sweep from a scalar root; accumulates gradients into every
/// requires_grad leaf reachable from it. Stale leaf gradients are cleared.
inline void backward(const Var& root) {
    if (!root->value.is_scalar()) throw ContractError("backward: root must be scalar");
    std::vector<Node*> order;
    topo_order(root, order);
    for (Node* n : order) {
        n->ensure_grad();
        n->zero_grad();
    }
    root->grad.data[0] = 1.0;
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        Node* n = *it;
        if (n->requires_grad && n->backprop) n->backprop(*n);
    }
}

/// Max relative error between the analytic gradient of `forward()` w.r.t.
/// `leaf` and central finite differences with step h. `forward` must rebuild
/// the graph deterministically.
inline double finite_difference_check(const std::function<Var()>& forward, const Var& leaf,
                                      double h) {
    if (h <= 0.0) throw ContractError("finite_difference_check: h must be positive");
    Var root = forward();
    backward(root);
    std::vector<double> analytic = leaf->grad.data;
    double max_err = 0.0;
    for (std::size_t i = 0; i < leaf->value.numel(); ++i) {
        const double orig = leaf->value.data[i];
        leaf->value.data[i] = orig + h;
        const double f_plus = forward()->value.scalar_value();
        leaf->value.data[i] = orig - h;
        const double f_minus = forward()->value.scalar_value();
        leaf->value.data[i] = orig;
        const double fd = (f_plus - f_minus) / (2.0 * h);
        const double err = std::fabs(fd - analytic[i]) / (std::fabs(analytic[i]) + 1e-8);
        max_err = std::max(max_err, err);
    }
    return max_err;
}

}  // namespace vegan
