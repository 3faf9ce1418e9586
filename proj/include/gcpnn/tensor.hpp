#pragma once

#include <cmath>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "gcpnn/error.hpp"
#include "gcpnn/graph.hpp"

namespace gcpnn {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using RowVector = Eigen::Matrix<double, 1, Eigen::Dynamic>;
using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

namespace detail {

struct Node;
using NodePtr = std::shared_ptr<Node>;

// Accumulates the upstream gradient into the parents' gradient slots. A slot
// is null when that parent needs no gradient.
using BackwardFn = std::function<void(const Matrix& upstream, std::span<Matrix* const> parent_grads)>;

struct Node {
    Matrix value;
    std::vector<NodePtr> parents;
    BackwardFn backward;
    bool requires_grad = false;
    std::string name;
};

}  // namespace detail

/// 2-D tensor on a reverse-mode tape. Copies share the same node.
class Tensor {
public:
    Tensor() = default;

    static Tensor constant(Matrix value) {
        auto n = std::make_shared<detail::Node>();
        n->value = std::move(value);
        return Tensor(std::move(n));
    }

    static Tensor parameter(Matrix value, std::string name) {
        auto n = std::make_shared<detail::Node>();
        n->value = std::move(value);
        n->requires_grad = true;
        n->name = std::move(name);
        return Tensor(std::move(n));
    }

    static Tensor scalar(double x) { return constant(Matrix::Constant(1, 1, x)); }

    // Result of an op; registers `backward` only when some parent needs it.
    static Tensor op(Matrix value, std::vector<Tensor> parents, detail::BackwardFn backward) {
        auto n = std::make_shared<detail::Node>();
        n->value = std::move(value);
        for (const auto& p : parents) n->requires_grad = n->requires_grad || p.requires_grad();
        if (n->requires_grad) {
            for (auto& p : parents) n->parents.push_back(p.node_);
            n->backward = std::move(backward);
        }
        return Tensor(std::move(n));
    }

    bool defined() const noexcept { return node_ != nullptr; }
    Eigen::Index rows() const { return node_->value.rows(); }
    Eigen::Index cols() const { return node_->value.cols(); }
    std::vector<Eigen::Index> shape() const { return {rows(), cols()}; }
    const Matrix& value() const { return node_->value; }
    double item() const {
        if (rows() != 1 || cols() != 1) throw ShapeError("item() on a non-scalar tensor");
        return node_->value(0, 0);
    }
    bool requires_grad() const noexcept { return node_ && node_->requires_grad; }
    const std::string& name() const { return node_->name; }

    // Parameters only: in-place update by the optimiser or a checkpoint load.
    Matrix& mutable_value() { return node_->value; }

    const detail::Node* id() const noexcept { return node_.get(); }

private:
    explicit Tensor(detail::NodePtr n) : node_(std::move(n)) {}
    detail::NodePtr node_;
    friend std::vector<Matrix> backward(const Tensor&, const std::vector<Tensor>&);
};

inline std::string shape_str(const Matrix& m) {
    return "(" + std::to_string(m.rows()) + "x" + std::to_string(m.cols()) + ")";
}

inline std::string shape_str(const Tensor& t) { return shape_str(t.value()); }

/// Gradient of the scalar `loss` with respect to each of `params`, in order.
/// Parameters the loss does not depend on get a zero matrix.
inline std::vector<Matrix> backward(const Tensor& loss, const std::vector<Tensor>& params) {
    if (loss.rows() != 1 || loss.cols() != 1)
        throw ArgumentError("backward needs a scalar loss, got shape " + shape_str(loss));
    using detail::Node;
    std::vector<Node*> order;
    std::unordered_map<const Node*, Matrix> grads;
    if (loss.requires_grad()) {
        // iterative post-order DFS
        std::unordered_map<const Node*, bool> visited;
        std::vector<std::pair<Node*, std::size_t>> stack{{loss.node_.get(), 0}};
        visited[loss.node_.get()] = true;
        while (!stack.empty()) {
            auto& [node, next] = stack.back();
            if (next < node->parents.size()) {
                Node* p = node->parents[next++].get();
                if (p->requires_grad && !visited[p]) {
                    visited[p] = true;
                    stack.emplace_back(p, 0);
                }
            } else {
                order.push_back(node);
                stack.pop_back();
            }
        }
        grads[loss.node_.get()] = Matrix::Ones(1, 1);
        std::vector<Matrix*> slots;
        for (auto it = order.rbegin(); it != order.rend(); ++it) {
            Node* node = *it;
            if (!node->backward) continue;
            auto g = grads.find(node);
            if (g == grads.end()) continue;
            slots.clear();
            for (const auto& p : node->parents) {
                if (!p->requires_grad) {
                    slots.push_back(nullptr);
                    continue;
                }
                auto [slot, fresh] = grads.try_emplace(p.get());
                if (fresh) slot->second = Matrix::Zero(p->value.rows(), p->value.cols());
                slots.push_back(&slot->second);
            }
            node->backward(g->second, slots);
            if (node != loss.node_.get() && !node->parents.empty()) grads.erase(g);  // intermediate no longer needed
        }
    }
    std::vector<Matrix> out;
    out.reserve(params.size());
    for (const auto& p : params) {
        auto g = grads.find(p.node_.get());
        out.push_back(g != grads.end() ? g->second : Matrix::Zero(p.rows(), p.cols()));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Ops

namespace detail {
inline void require(bool ok, const std::string& op, const Matrix& a, const Matrix& b) {
    if (!ok) throw ShapeError(op + ": incompatible shapes " + shape_str(a) + " and " + shape_str(b));
}
}  // namespace detail

inline Tensor matmul(const Tensor& a, const Tensor& b) {
    detail::require(a.cols() == b.rows(), "matmul", a.value(), b.value());
    Matrix out = a.value() * b.value();
    return Tensor::op(std::move(out), {a, b}, [a, b](const Matrix& g, std::span<Matrix* const> pg) {
        if (pg[0]) pg[0]->noalias() += g * b.value().transpose();
        if (pg[1]) pg[1]->noalias() += a.value().transpose() * g;
    });
}

/// Sparse constant operator applied on the left: s * x.
inline Tensor spmm(std::shared_ptr<const SparseMatrix> s, const Tensor& x) {
    if (s->cols() != x.rows())
        throw ShapeError("spmm: incompatible shapes (" + std::to_string(s->rows()) + "x" + std::to_string(s->cols()) +
                         ") and " + shape_str(x));
    Matrix out = (*s) * x.value();
    return Tensor::op(std::move(out), {x}, [s](const Matrix& g, std::span<Matrix* const> pg) {
        if (pg[0]) pg[0]->noalias() += s->transpose() * g;
    });
}

inline Tensor add(const Tensor& a, const Tensor& b) {
    detail::require(a.rows() == b.rows() && a.cols() == b.cols(), "add", a.value(), b.value());
    return Tensor::op(a.value() + b.value(), {a, b}, [](const Matrix& g, std::span<Matrix* const> pg) {
        if (pg[0]) *pg[0] += g;
        if (pg[1]) *pg[1] += g;
    });
}

/// a + bias, bias a 1 x cols row broadcast over every row of a.
inline Tensor add_bias(const Tensor& a, const Tensor& bias) {
    detail::require(bias.rows() == 1 && bias.cols() == a.cols(), "add_bias", a.value(), bias.value());
    Matrix out = a.value().rowwise() + bias.value().row(0);
    return Tensor::op(std::move(out), {a, bias}, [](const Matrix& g, std::span<Matrix* const> pg) {
        if (pg[0]) *pg[0] += g;
        if (pg[1]) *pg[1] += g.colwise().sum();
    });
}

inline Tensor mul(const Tensor& a, const Tensor& b) {
    detail::require(a.rows() == b.rows() && a.cols() == b.cols(), "mul", a.value(), b.value());
    Matrix out = a.value().cwiseProduct(b.value());
    return Tensor::op(std::move(out), {a, b}, [a, b](const Matrix& g, std::span<Matrix* const> pg) {
        if (pg[0]) *pg[0] += g.cwiseProduct(b.value());
        if (pg[1]) *pg[1] += g.cwiseProduct(a.value());
    });
}

inline Tensor scale(const Tensor& a, double s) {
    return Tensor::op(a.value() * s, {a}, [s](const Matrix& g, std::span<Matrix* const> pg) {
        if (pg[0]) *pg[0] += g * s;
    });
}

inline Tensor concat_cols(const Tensor& a, const Tensor& b) {
    detail::require(a.rows() == b.rows(), "concat_cols", a.value(), b.value());
    Matrix out(a.rows(), a.cols() + b.cols());
    out << a.value(), b.value();
    const auto ac = a.cols(), bc = b.cols();
    return Tensor::op(std::move(out), {a, b}, [ac, bc](const Matrix& g, std::span<Matrix* const> pg) {
        if (pg[0]) *pg[0] += g.leftCols(ac);
        if (pg[1]) *pg[1] += g.rightCols(bc);
    });
}

inline Tensor concat_rows(const Tensor& a, const Tensor& b) {
    detail::require(a.cols() == b.cols(), "concat_rows", a.value(), b.value());
    Matrix out(a.rows() + b.rows(), a.cols());
    out << a.value(), b.value();
    const auto ar = a.rows(), br = b.rows();
    return Tensor::op(std::move(out), {a, b}, [ar, br](const Matrix& g, std::span<Matrix* const> pg) {
        if (pg[0]) *pg[0] += g.topRows(ar);
        if (pg[1]) *pg[1] += g.bottomRows(br);
    });
}

inline Tensor slice_cols(const Tensor& a, Eigen::Index begin, Eigen::Index count) {
    if (begin < 0 || count < 0 || begin + count > a.cols())
        throw ShapeError("slice_cols [" + std::to_string(begin) + ", +" + std::to_string(count) + ") out of " +
                         shape_str(a));
    Matrix out = a.value().middleCols(begin, count);
    return Tensor::op(std::move(out), {a}, [begin, count](const Matrix& g, std::span<Matrix* const> pg) {
        if (pg[0]) pg[0]->middleCols(begin, count) += g;
    });
}

/// Repeats a 1 x c row n times.
inline Tensor broadcast_rows(const Tensor& row, Eigen::Index n) {
    if (row.rows() != 1) throw ShapeError("broadcast_rows needs a single row, got " + shape_str(row));
    Matrix out = row.value().replicate(n, 1);
    return Tensor::op(std::move(out), {row}, [](const Matrix& g, std::span<Matrix* const> pg) {
        if (pg[0]) *pg[0] += g.colwise().sum();
    });
}

inline Tensor relu(const Tensor& a) {
    Matrix out = a.value().cwiseMax(0.0);
    return Tensor::op(std::move(out), {a}, [a](const Matrix& g, std::span<Matrix* const> pg) {
        if (pg[0]) *pg[0] += (a.value().array() > 0.0).select(g, 0.0);
    });
}

inline double sigmoid(double x) {
    return x >= 0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
}

inline Tensor sigmoid(const Tensor& a) {
    Matrix out = a.value().unaryExpr([](double x) { return sigmoid(x); });
    Matrix s = out;
    return Tensor::op(std::move(out), {a}, [s = std::move(s)](const Matrix& g, std::span<Matrix* const> pg) {
        if (pg[0]) *pg[0] += (g.array() * s.array() * (1.0 - s.array())).matrix();
    });
}

inline Tensor tanh(const Tensor& a) {
    Matrix out = a.value().array().tanh().matrix();
    Matrix t = out;
    return Tensor::op(std::move(out), {a}, [t = std::move(t)](const Matrix& g, std::span<Matrix* const> pg) {
        if (pg[0]) *pg[0] += (g.array() * (1.0 - t.array().square())).matrix();
    });
}

inline Tensor sum_all(const Tensor& a) {
    return Tensor::op(Matrix::Constant(1, 1, a.value().sum()), {a}, [](const Matrix& g, std::span<Matrix* const> pg) {
        if (pg[0]) pg[0]->array() += g(0, 0);
    });
}

inline Tensor mean_all(const Tensor& a) {
    const double n = static_cast<double>(a.value().size());
    if (n == 0) throw ShapeError("mean_all of an empty tensor");
    return scale(sum_all(a), 1.0 / n);
}

/// Per-segment mean of rows: row s of the result averages the rows of `a` in
/// segments[s]'s vertex range.
inline Tensor segment_mean(const Tensor& a, const SegmentMap& map) {
    if (a.rows() != map.total_vertices())
        throw ShapeError("segment_mean: " + shape_str(a) + " rows but segments cover " +
                         std::to_string(map.total_vertices()));
    Matrix out(static_cast<Eigen::Index>(map.count()), a.cols());
    for (std::size_t s = 0; s < map.count(); ++s) {
        const auto& seg = map.segments[s];
        if (seg.vertex_count() == 0) throw ShapeError("segment_mean over an empty segment");
        out.row(static_cast<Eigen::Index>(s)) =
            a.value().middleRows(seg.vertex_begin, seg.vertex_count()).colwise().sum() / seg.vertex_count();
    }
    return Tensor::op(std::move(out), {a}, [map](const Matrix& g, std::span<Matrix* const> pg) {
        if (!pg[0]) return;
        for (std::size_t s = 0; s < map.count(); ++s) {
            const auto& seg = map.segments[s];
            pg[0]->middleRows(seg.vertex_begin, seg.vertex_count()).rowwise() +=
                g.row(static_cast<Eigen::Index>(s)) / seg.vertex_count();
        }
    });
}

/// Row-wise layer normalisation: (x - mean) / sqrt(var + eps) * gain + offset,
/// with gain and offset 1 x cols rows.
inline Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& offset, double eps = 1e-5) {
    detail::require(gain.rows() == 1 && gain.cols() == x.cols(), "layer_norm gain", x.value(), gain.value());
    detail::require(offset.rows() == 1 && offset.cols() == x.cols(), "layer_norm offset", x.value(), offset.value());
    const auto n = x.rows(), c = x.cols();
    Matrix xhat(n, c);
    Eigen::VectorXd inv_std(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double mu = x.value().row(i).mean();
        const double var = (x.value().row(i).array() - mu).square().mean();
        inv_std(i) = 1.0 / std::sqrt(var + eps);
        xhat.row(i) = (x.value().row(i).array() - mu) * inv_std(i);
    }
    Matrix out = (xhat.array().rowwise() * gain.value().row(0).array()).rowwise() + offset.value().row(0).array();
    return Tensor::op(std::move(out), {x, gain, offset},
                      [xhat = std::move(xhat), inv_std = std::move(inv_std), gain](const Matrix& g,
                                                                                   std::span<Matrix* const> pg) {
                          if (pg[1]) *pg[1] += (g.array() * xhat.array()).colwise().sum().matrix();
                          if (pg[2]) *pg[2] += g.colwise().sum();
                          if (!pg[0]) return;
                          const double c = static_cast<double>(xhat.cols());
                          const Matrix gh = (g.array().rowwise() * gain.value().row(0).array()).matrix();
                          for (Eigen::Index i = 0; i < xhat.rows(); ++i) {
                              const double m1 = gh.row(i).mean();
                              const double m2 = gh.row(i).dot(xhat.row(i)) / c;
                              pg[0]->row(i).array() +=
                                  inv_std(i) * (gh.row(i).array() - m1 - xhat.row(i).array() * m2);
                          }
                      });
}

/// Mean binary cross-entropy of sigmoid(logits) against 0/1 labels, in the
/// stable form max(z, 0) - z*y + log(1 + exp(-|z|)).
inline Tensor bce_with_logits(const Tensor& logits, const std::vector<double>& labels) {
    if (logits.cols() != 1 || static_cast<std::size_t>(logits.rows()) != labels.size())
        throw ShapeError("bce_with_logits: logits " + shape_str(logits) + " vs " + std::to_string(labels.size()) +
                         " labels");
    const auto m = logits.rows();
    double total = 0.0;
    for (Eigen::Index i = 0; i < m; ++i) {
        const double z = logits.value()(i, 0), y = labels[static_cast<std::size_t>(i)];
        total += std::max(z, 0.0) - z * y + std::log1p(std::exp(-std::abs(z)));
    }
    return Tensor::op(Matrix::Constant(1, 1, total / static_cast<double>(m)), {logits},
                      [logits, labels](const Matrix& g, std::span<Matrix* const> pg) {
                          if (!pg[0]) return;
                          const auto m = logits.rows();
                          for (Eigen::Index i = 0; i < m; ++i)
                              (*pg[0])(i, 0) += g(0, 0) * (sigmoid(logits.value()(i, 0)) - labels[static_cast<std::size_t>(i)]) /
                                                static_cast<double>(m);
                      });
}

}  // namespace gcpnn
