/**
 * @file lstm.hpp
 * @brief LSTM layer parameters with tape (trainable) and plain (inference)
 *        step functions. Gate row order inside the fused matrices: input,
 *        forget, cell, output.
 */
#pragma once

#include <string>
#include <vector>

#include "advtext/autodiff.hpp"
#include "advtext/common.hpp"

namespace advtext::nn {

struct LstmLayer {
  Parameter wx;  // (4H x input_dim)
  Parameter wh;  // (4H x H)
  Parameter b;   // (4H x 1)
  int input_dim = 0;
  int hidden_dim = 0;

  LstmLayer() = default;
  LstmLayer(const std::string& prefix, int input, int hidden)
      : wx(prefix + ".wx", 4 * hidden, input),
        wh(prefix + ".wh", 4 * hidden, hidden),
        b(prefix + ".b", 4 * hidden, 1),
        input_dim(input),
        hidden_dim(hidden) {}

  void init(Rng& rng, double bound) {
    wx.init_uniform(rng, bound);
    wh.init_uniform(rng, bound);
    b.init_uniform(rng, bound);
  }

  /// Bias the forget gate toward carrying state at the start of training.
  void open_forget_gate() { b.value.block(hidden_dim, 0, hidden_dim, 1).setOnes(); }

  std::vector<Parameter*> parameters() { return {&wx, &wh, &b}; }
};

/// Recurrent state as graph nodes (batched, one column per element).
struct LstmNodes {
  Node* h = nullptr;
  Node* c = nullptr;
};

inline LstmNodes lstm_zero_state(Tape& tape, const LstmLayer& layer, int batch) {
  return {tape.constant(Matrix::Zero(layer.hidden_dim, batch)),
          tape.constant(Matrix::Zero(layer.hidden_dim, batch))};
}

inline LstmNodes lstm_step(Tape& t, LstmLayer& layer, Node* x, const LstmNodes& s, bool trainable) {
  const int h = layer.hidden_dim;
  Node* pre = t.add_bias(t.add(t.matmul(t.param(layer.wx, trainable), x),
                               t.matmul(t.param(layer.wh, trainable), s.h)),
                         t.param(layer.b, trainable));
  Node* gi = t.sigmoid(t.rows(pre, 0, h));
  Node* gf = t.sigmoid(t.rows(pre, h, h));
  Node* gc = t.tanh(t.rows(pre, 2 * h, h));
  Node* go = t.sigmoid(t.rows(pre, 3 * h, h));
  Node* c_next = t.add(t.mul(gf, s.c), t.mul(gi, gc));
  Node* h_next = t.mul(go, t.tanh(c_next));
  return {h_next, c_next};
}

/// Keeps the previous state where mask is 0 (sequence already finished) and
/// the updated state where mask is 1.
inline LstmNodes lstm_masked_carry(Tape& t, const LstmNodes& updated, const LstmNodes& previous,
                                   const Eigen::RowVectorXd& mask) {
  Eigen::RowVectorXd inv = Eigen::RowVectorXd::Ones(mask.size()) - mask;
  return {t.add(t.scale_columns(updated.h, mask), t.scale_columns(previous.h, inv)),
          t.add(t.scale_columns(updated.c, mask), t.scale_columns(previous.c, inv))};
}

/// Recurrent state for the plain (no-gradient) inference path.
struct LstmState {
  Vector h;
  Vector c;

  static LstmState zero(int hidden) { return {Vector::Zero(hidden), Vector::Zero(hidden)}; }
};

inline void lstm_step_plain(const LstmLayer& layer, const Vector& x, LstmState& s) {
  const int h = layer.hidden_dim;
  Vector pre = layer.wx.value * x + layer.wh.value * s.h + layer.b.value.col(0);
  Vector gi = (1.0 / (1.0 + (-pre.segment(0, h).array()).exp())).matrix();
  Vector gf = (1.0 / (1.0 + (-pre.segment(h, h).array()).exp())).matrix();
  Vector gc = pre.segment(2 * h, h).array().tanh().matrix();
  Vector go = (1.0 / (1.0 + (-pre.segment(3 * h, h).array()).exp())).matrix();
  s.c = gf.cwiseProduct(s.c) + gi.cwiseProduct(gc);
  s.h = go.cwiseProduct(s.c.array().tanh().matrix());
}

}  // namespace advtext::nn
