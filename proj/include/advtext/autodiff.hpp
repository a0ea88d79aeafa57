/**
 * @file autodiff.hpp
 * @brief Reverse-mode automatic differentiation over Eigen matrices.
 *
 * A Tape records each forward operation as a Node holding its value and a
 * closure that pushes gradients to its parents. Activations are stored
 * feature-major: one column per batch element. Trainable weights live in
 * Parameter objects outside the tape; their gradients accumulate across
 * batches until an optimizer consumes them.
 */
#pragma once

#include <deque>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "advtext/common.hpp"

namespace advtext::nn {

struct Parameter {
  std::string name;
  Matrix value;
  Matrix grad;

  Parameter() = default;
  Parameter(std::string n, int rows, int cols)
      : name(std::move(n)), value(Matrix::Zero(rows, cols)), grad(Matrix::Zero(rows, cols)) {}

  void init_uniform(Rng& rng, double bound) {
    for (int c = 0; c < value.cols(); ++c)
      for (int r = 0; r < value.rows(); ++r) value(r, c) = rng.uniform(-bound, bound);
  }

  void zero_grad() { grad.setZero(); }
};

struct Node {
  Matrix val;
  Matrix grad;                  // lazily sized on first accumulation
  Parameter* bound = nullptr;   // leaf bound to a trainable parameter
  bool requires_grad = false;
  std::function<void()> backprop;

  const Matrix& value() const { return bound ? bound->value : val; }
};

class Tape {
 public:
  Node* input(Matrix v, bool requires_grad = false) {
    Node* n = make();
    n->val = std::move(v);
    n->requires_grad = requires_grad;
    return n;
  }

  Node* constant(Matrix v) { return input(std::move(v), false); }

  /// Leaf bound to a parameter. With trainable=false no gradient is
  /// accumulated into the parameter (frozen weights at attack time).
  Node* param(Parameter& p, bool trainable = true) {
    Node* n = make();
    n->bound = &p;
    n->requires_grad = trainable;
    return n;
  }

  Node* matmul(Node* a, Node* b) {
    Node* out = make();
    out->val = a->value() * b->value();
    finish(out, {a, b}, [out, a, b] {
      if (a->requires_grad) accumulate(a, out->grad * b->value().transpose());
      if (b->requires_grad) accumulate(b, a->value().transpose() * out->grad);
    });
    return out;
  }

  Node* add(Node* a, Node* b) {
    Node* out = make();
    out->val = a->value() + b->value();
    finish(out, {a, b}, [out, a, b] {
      if (a->requires_grad) accumulate(a, out->grad);
      if (b->requires_grad) accumulate(b, out->grad);
    });
    return out;
  }

  /// X + b broadcast over columns; bias is a (rows x 1) column.
  Node* add_bias(Node* x, Node* bias) {
    Node* out = make();
    out->val = x->value().colwise() + Eigen::VectorXd(bias->value().col(0));
    finish(out, {x, bias}, [out, x, bias] {
      if (x->requires_grad) accumulate(x, out->grad);
      if (bias->requires_grad) accumulate(bias, out->grad.rowwise().sum());
    });
    return out;
  }

  Node* mul(Node* a, Node* b) {
    Node* out = make();
    out->val = a->value().cwiseProduct(b->value());
    finish(out, {a, b}, [out, a, b] {
      if (a->requires_grad) accumulate(a, out->grad.cwiseProduct(b->value()));
      if (b->requires_grad) accumulate(b, out->grad.cwiseProduct(a->value()));
    });
    return out;
  }

  Node* scalar_mul(Node* x, double k) {
    Node* out = make();
    out->val = x->value() * k;
    finish(out, {x}, [out, x, k] {
      if (x->requires_grad) accumulate(x, Matrix(out->grad * k));
    });
    return out;
  }

  Node* sigmoid(Node* x) {
    Node* out = make();
    out->val = (1.0 / (1.0 + (-x->value().array()).exp())).matrix();
    finish(out, {x}, [out, x] {
      if (!x->requires_grad) return;
      const auto& s = out->val.array();
      accumulate(x, (out->grad.array() * s * (1.0 - s)).matrix());
    });
    return out;
  }

  Node* tanh(Node* x) {
    Node* out = make();
    out->val = x->value().array().tanh().matrix();
    finish(out, {x}, [out, x] {
      if (!x->requires_grad) return;
      const auto& t = out->val.array();
      accumulate(x, (out->grad.array() * (1.0 - t * t)).matrix());
    });
    return out;
  }

  /// Row slice [first, first+count).
  Node* rows(Node* x, int first, int count) {
    Node* out = make();
    out->val = x->value().middleRows(first, count);
    finish(out, {x}, [out, x, first, count] {
      if (!x->requires_grad) return;
      Matrix dx = Matrix::Zero(x->value().rows(), x->value().cols());
      dx.middleRows(first, count) = out->grad;
      accumulate(x, dx);
    });
    return out;
  }

  /// Scales column j by weights[j]. Weights are constants (batch masks).
  Node* scale_columns(Node* x, Eigen::RowVectorXd weights) {
    Node* out = make();
    out->val = x->value() * weights.asDiagonal();
    finish(out, {x}, [out, x, w = std::move(weights)] {
      if (x->requires_grad) accumulate(x, out->grad * w.asDiagonal());
    });
    return out;
  }

  /// Overwrites the given rows with a large negative constant so the
  /// following softmax assigns them zero probability. No gradient flows
  /// through the masked rows.
  Node* mask_rows(Node* x, std::vector<int> masked) {
    Node* out = make();
    out->val = x->value();
    for (int r : masked) out->val.row(r).setConstant(-1e30);
    finish(out, {x}, [out, x, m = std::move(masked)] {
      if (!x->requires_grad) return;
      Matrix dx = out->grad;
      for (int r : m) dx.row(r).setZero();
      accumulate(x, dx);
    });
    return out;
  }

  /// Column-wise softmax (probability distribution per batch element).
  Node* softmax_columns(Node* x) {
    Node* out = make();
    out->val = column_softmax(x->value());
    finish(out, {x}, [out, x] {
      if (!x->requires_grad) return;
      const Matrix& p = out->val;
      Matrix dx(p.rows(), p.cols());
      for (int j = 0; j < p.cols(); ++j) {
        double dot = out->grad.col(j).dot(p.col(j));
        dx.col(j) = p.col(j).cwiseProduct((out->grad.col(j).array() - dot).matrix());
      }
      accumulate(x, dx);
    });
    return out;
  }

  /// Gathers embedding columns for the given token ids.
  Node* embedding(Parameter& table, std::vector<int> ids, bool trainable = true) {
    const int vocab = static_cast<int>(table.value.cols());
    for (int id : ids) {
      if (id < 0 || id >= vocab)
        throw ConfigError("token id " + std::to_string(id) + " out of range for vocabulary of size " +
                          std::to_string(vocab));
    }
    Node* out = make();
    out->val.resize(table.value.rows(), static_cast<Eigen::Index>(ids.size()));
    for (std::size_t b = 0; b < ids.size(); ++b)
      out->val.col(static_cast<Eigen::Index>(b)) = table.value.col(ids[b]);
    out->requires_grad = trainable;
    if (trainable) {
      Parameter* t = &table;
      out->backprop = [out, t, ids = std::move(ids)] {
        for (std::size_t b = 0; b < ids.size(); ++b)
          t->grad.col(ids[b]) += out->grad.col(static_cast<Eigen::Index>(b));
      };
    }
    return out;
  }

  /// Weighted sum of per-column cross-entropies from logits:
  ///   sum_b weights[b] * (logsumexp(logits_b) - logits[targets[b], b]).
  /// Returns a 1x1 scalar node.
  Node* cross_entropy_sum(Node* logits, std::vector<int> targets, std::vector<double> weights) {
    const Matrix& l = logits->value();
    const int batch = static_cast<int>(l.cols());
    if (static_cast<int>(targets.size()) != batch || static_cast<int>(weights.size()) != batch)
      throw std::invalid_argument("cross_entropy_sum: targets/weights size must equal batch");
    for (int b = 0; b < batch; ++b) {
      if (targets[b] < 0 || targets[b] >= l.rows())
        throw std::invalid_argument("cross_entropy_sum: target out of range");
    }
    Matrix probs = column_softmax(l);
    double total = 0.0;
    for (int b = 0; b < batch; ++b) {
      double mx = l.col(b).maxCoeff();
      double lse = mx + std::log((l.col(b).array() - mx).exp().sum());
      total += weights[b] * (lse - l(targets[b], b));
    }
    Node* out = make();
    out->val = Matrix::Constant(1, 1, total);
    finish(out, {logits},
           [out, logits, probs = std::move(probs), targets = std::move(targets), weights = std::move(weights)] {
             if (!logits->requires_grad) return;
             const double g = out->grad(0, 0);
             Matrix dl = probs;
             for (int b = 0; b < dl.cols(); ++b) {
               dl.col(b) *= g * weights[static_cast<std::size_t>(b)];
               dl(targets[static_cast<std::size_t>(b)], b) -= g * weights[static_cast<std::size_t>(b)];
             }
             accumulate(logits, dl);
           });
    return out;
  }

  /// Backpropagates from a scalar root through every recorded operation.
  void backward(Node* root) {
    if (root->value().size() != 1) throw std::logic_error("backward root must be a scalar node");
    root->grad = Matrix::Ones(1, 1);
    for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) {
      if (it->backprop && it->grad.size() != 0) it->backprop();
    }
  }

  std::size_t size() const { return nodes_.size(); }

  static Matrix column_softmax(const Matrix& logits) {
    Matrix p(logits.rows(), logits.cols());
    for (int j = 0; j < logits.cols(); ++j) {
      Vector shifted = logits.col(j).array() - logits.col(j).maxCoeff();
      Vector e = shifted.array().exp();
      p.col(j) = e / e.sum();
    }
    return p;
  }

 private:
  Node* make() {
    nodes_.emplace_back();
    return &nodes_.back();
  }

  void finish(Node* out, std::initializer_list<Node*> parents, std::function<void()> fn) {
    for (Node* p : parents) out->requires_grad = out->requires_grad || p->requires_grad;
    if (out->requires_grad) out->backprop = std::move(fn);
  }

  static void accumulate(Node* n, const Matrix& g) {
    Matrix& dst = n->bound ? n->bound->grad : n->grad;
    if (dst.size() == 0)
      dst = g;
    else
      dst += g;
  }

  std::deque<Node> nodes_;
};

}  // namespace advtext::nn
