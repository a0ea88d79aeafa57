/**
 * @file models.hpp
 * @brief The four networks of the pipeline: target classifier F, encoder E,
 *        decoder D, and latent classifier c, plus the losses and latent
 *        gradients connecting them.
 *
 * Every model offers a plain inference path (pure Eigen, no gradients) and a
 * tape-based graph builder used for training and for attack gradients. The
 * decoder's autoregressive path masks <pad> and <start> before the argmax so
 * generated sequences never contain them.
 */
#pragma once

#include <span>
#include <string>
#include <vector>

#include "advtext/autodiff.hpp"
#include "advtext/common.hpp"
#include "advtext/config.hpp"
#include "advtext/corpus.hpp"
#include "advtext/lstm.hpp"
#include "advtext/vocab.hpp"

namespace advtext {

using nn::LstmLayer;
using nn::LstmNodes;
using nn::LstmState;
using nn::Node;
using nn::Parameter;
using nn::Tape;

/// A batch of examples padded to a common step count, feature-major.
struct PackedBatch {
  int batch = 0;
  int steps = 0;
  std::vector<std::vector<int>> step_ids;           // [steps][batch], pad-filled
  std::vector<Eigen::RowVectorXd> step_mask;        // 1.0 while t < len(example)
  std::vector<std::vector<int>> dec_in_ids;         // teacher forcing: start-prefixed
  std::vector<std::vector<double>> target_weights;  // 1.0 at valid target positions
  std::vector<int> labels;
  int valid_positions = 0;
};

inline PackedBatch pack_batch(std::span<const LabeledExample> examples) {
  PackedBatch pb;
  pb.batch = static_cast<int>(examples.size());
  for (const auto& ex : examples) pb.steps = std::max(pb.steps, static_cast<int>(ex.tokens.size()));
  pb.step_ids.assign(static_cast<std::size_t>(pb.steps),
                     std::vector<int>(static_cast<std::size_t>(pb.batch), Vocabulary::kPad));
  pb.dec_in_ids = pb.step_ids;
  pb.target_weights.assign(static_cast<std::size_t>(pb.steps),
                           std::vector<double>(static_cast<std::size_t>(pb.batch), 0.0));
  pb.step_mask.assign(static_cast<std::size_t>(pb.steps), Eigen::RowVectorXd::Zero(pb.batch));
  for (int b = 0; b < pb.batch; ++b) {
    const auto& toks = examples[static_cast<std::size_t>(b)].tokens;
    for (std::size_t t = 0; t < toks.size(); ++t) {
      pb.step_ids[t][static_cast<std::size_t>(b)] = toks[t];
      pb.dec_in_ids[t][static_cast<std::size_t>(b)] = t == 0 ? Vocabulary::kStart : toks[t - 1];
      pb.target_weights[t][static_cast<std::size_t>(b)] = 1.0;
      pb.step_mask[t][b] = 1.0;
      ++pb.valid_positions;
    }
    pb.labels.push_back(examples[static_cast<std::size_t>(b)].label);
  }
  return pb;
}

namespace detail {

inline void check_token_ids(const std::vector<int>& tokens, int vocab_size) {
  for (int id : tokens) {
    if (id < 0 || id >= vocab_size)
      throw ConfigError("token id " + std::to_string(id) + " out of range for vocabulary of size " +
                        std::to_string(vocab_size));
  }
}

inline Vector stable_softmax(const Vector& logits) {
  Vector e = (logits.array() - logits.maxCoeff()).exp();
  return e / e.sum();
}

inline Matrix as_column(const Vector& v) {
  Matrix m(v.size(), 1);
  m.col(0) = v;
  return m;
}

}  // namespace detail

/// Target classifier F: embedding -> two stacked LSTMs -> softmax head.
class TargetClassifier {
 public:
  explicit TargetClassifier(const ModelConfig& cfg)
      : cfg_(cfg),
        embedding_("target.embedding", cfg.embed_dim, cfg.vocab_size),
        lstm1_("target.lstm1", cfg.embed_dim, cfg.target_hidden_1),
        lstm2_("target.lstm2", cfg.target_hidden_1, cfg.target_hidden_2),
        head_w_("target.head.w", cfg.num_classes, cfg.target_hidden_2),
        head_b_("target.head.b", cfg.num_classes, 1) {
    cfg_.validate();
    Rng rng(mix_seed(cfg.seed, 1));
    for (Parameter* p : parameters()) p->init_uniform(rng, kInitBound);
    lstm1_.open_forget_gate();
    lstm2_.open_forget_gate();
  }

  /// Confidence-score vector over classes (sums to 1).
  Vector classify(const std::vector<int>& tokens) const {
    detail::check_token_ids(tokens, cfg_.vocab_size);
    LstmState s1 = LstmState::zero(cfg_.target_hidden_1);
    LstmState s2 = LstmState::zero(cfg_.target_hidden_2);
    for (int tok : tokens) {
      nn::lstm_step_plain(lstm1_, embedding_.value.col(tok), s1);
      nn::lstm_step_plain(lstm2_, s1.h, s2);
    }
    return detail::stable_softmax(head_w_.value * s2.h + head_b_.value.col(0));
  }

  int predict(const std::vector<int>& tokens) const { return argmax(classify(tokens)); }

  /// Final-step class logits (num_classes x batch) for a packed batch.
  Node* logits_graph(Tape& t, const PackedBatch& pb, bool trainable) {
    LstmNodes s1 = nn::lstm_zero_state(t, lstm1_, pb.batch);
    LstmNodes s2 = nn::lstm_zero_state(t, lstm2_, pb.batch);
    for (int step = 0; step < pb.steps; ++step) {
      Node* x = t.embedding(embedding_, pb.step_ids[static_cast<std::size_t>(step)], trainable);
      LstmNodes u1 = nn::lstm_step(t, lstm1_, x, s1, trainable);
      s1 = nn::lstm_masked_carry(t, u1, s1, pb.step_mask[static_cast<std::size_t>(step)]);
      LstmNodes u2 = nn::lstm_step(t, lstm2_, s1.h, s2, trainable);
      s2 = nn::lstm_masked_carry(t, u2, s2, pb.step_mask[static_cast<std::size_t>(step)]);
    }
    return t.add_bias(t.matmul(t.param(head_w_, trainable), s2.h), t.param(head_b_, trainable));
  }

  /// Class logits when F consumes per-step vocabulary distributions instead
  /// of discrete tokens: each step's input is the expected embedding
  /// (embedding matrix times the distribution). Batch size 1.
  Node* logits_graph_soft(Tape& t, const std::vector<Node*>& step_distributions) {
    LstmNodes s1 = nn::lstm_zero_state(t, lstm1_, 1);
    LstmNodes s2 = nn::lstm_zero_state(t, lstm2_, 1);
    Node* table = t.param(embedding_, false);
    for (Node* dist : step_distributions) {
      Node* x = t.matmul(table, dist);
      s1 = nn::lstm_step(t, lstm1_, x, s1, false);
      s2 = nn::lstm_step(t, lstm2_, s1.h, s2, false);
    }
    return t.add_bias(t.matmul(t.param(head_w_, false), s2.h), t.param(head_b_, false));
  }

  std::vector<Parameter*> parameters() {
    std::vector<Parameter*> out = {&embedding_};
    for (auto* p : lstm1_.parameters()) out.push_back(p);
    for (auto* p : lstm2_.parameters()) out.push_back(p);
    out.push_back(&head_w_);
    out.push_back(&head_b_);
    return out;
  }

  const ModelConfig& config() const { return cfg_; }

  static constexpr double kInitBound = 0.08;

 private:
  ModelConfig cfg_;
  Parameter embedding_;
  LstmLayer lstm1_;
  LstmLayer lstm2_;
  Parameter head_w_;
  Parameter head_b_;
};

/// Encoder E: embedding -> LSTM -> linear projection of the final hidden
/// state to the latent dimension.
class Encoder {
 public:
  explicit Encoder(const ModelConfig& cfg)
      : cfg_(cfg),
        embedding_("encoder.embedding", cfg.embed_dim, cfg.vocab_size),
        lstm_("encoder.lstm", cfg.embed_dim, cfg.encoder_hidden),
        proj_w_("encoder.proj.w", cfg.latent_dim, cfg.encoder_hidden),
        proj_b_("encoder.proj.b", cfg.latent_dim, 1) {
    cfg_.validate();
    Rng rng(mix_seed(cfg.seed, 2));
    for (Parameter* p : parameters()) p->init_uniform(rng, TargetClassifier::kInitBound);
    lstm_.open_forget_gate();
  }

  Vector encode(const std::vector<int>& tokens) const {
    detail::check_token_ids(tokens, cfg_.vocab_size);
    LstmState s = LstmState::zero(cfg_.encoder_hidden);
    for (int tok : tokens) nn::lstm_step_plain(lstm_, embedding_.value.col(tok), s);
    return proj_w_.value * s.h + proj_b_.value.col(0);
  }

  /// Latent vectors (latent_dim x batch).
  Node* encode_graph(Tape& t, const PackedBatch& pb, bool trainable) {
    LstmNodes s = nn::lstm_zero_state(t, lstm_, pb.batch);
    for (int step = 0; step < pb.steps; ++step) {
      Node* x = t.embedding(embedding_, pb.step_ids[static_cast<std::size_t>(step)], trainable);
      LstmNodes u = nn::lstm_step(t, lstm_, x, s, trainable);
      s = nn::lstm_masked_carry(t, u, s, pb.step_mask[static_cast<std::size_t>(step)]);
    }
    return t.add_bias(t.matmul(t.param(proj_w_, trainable), s.h), t.param(proj_b_, trainable));
  }

  std::vector<Parameter*> parameters() {
    std::vector<Parameter*> out = {&embedding_};
    for (auto* p : lstm_.parameters()) out.push_back(p);
    out.push_back(&proj_w_);
    out.push_back(&proj_b_);
    return out;
  }

  const ModelConfig& config() const { return cfg_; }

 private:
  ModelConfig cfg_;
  Parameter embedding_;
  LstmLayer lstm_;
  Parameter proj_w_;
  Parameter proj_b_;
};

/// Decoder D: the latent vector is linearly mapped to the initial hidden and
/// cell states of each LSTM layer; generation starts from <start> and feeds
/// each output token into the next step until <eos> or the length limit.
class Decoder {
 public:
  struct SoftTrace {
    std::vector<int> tokens;
    std::vector<Vector> distributions;  // per-step softmax over the vocabulary
  };

  explicit Decoder(const ModelConfig& cfg)
      : cfg_(cfg),
        embedding_("decoder.embedding", cfg.embed_dim, cfg.vocab_size),
        lstm1_("decoder.lstm1", cfg.embed_dim, cfg.decoder_hidden),
        lstm2_("decoder.lstm2", cfg.decoder_hidden, cfg.decoder_hidden),
        init_h1_w_("decoder.init_h1.w", cfg.decoder_hidden, cfg.latent_dim),
        init_h1_b_("decoder.init_h1.b", cfg.decoder_hidden, 1),
        init_c1_w_("decoder.init_c1.w", cfg.decoder_hidden, cfg.latent_dim),
        init_c1_b_("decoder.init_c1.b", cfg.decoder_hidden, 1),
        init_h2_w_("decoder.init_h2.w", cfg.decoder_hidden, cfg.latent_dim),
        init_h2_b_("decoder.init_h2.b", cfg.decoder_hidden, 1),
        init_c2_w_("decoder.init_c2.w", cfg.decoder_hidden, cfg.latent_dim),
        init_c2_b_("decoder.init_c2.b", cfg.decoder_hidden, 1),
        head_w_("decoder.head.w", cfg.vocab_size, cfg.decoder_hidden),
        head_b_("decoder.head.b", cfg.vocab_size, 1) {
    cfg_.validate();
    Rng rng(mix_seed(cfg.seed, 3));
    for (Parameter* p : parameters()) p->init_uniform(rng, TargetClassifier::kInitBound);
    // The initial-state maps use a wider bound than the shared one so that
    // distinct latents condition the decoder measurably from the start.
    for (Parameter* p : {&init_h1_w_, &init_c1_w_, &init_h2_w_, &init_c2_w_})
      p->init_uniform(rng, kInitStateBound);
    lstm1_.open_forget_gate();
    lstm2_.open_forget_gate();
  }

  static constexpr double kInitStateBound = 0.5;

  std::vector<int> decode_greedy(const Vector& z, int max_seq_len) const {
    return decode_trace(z, max_seq_len, false).tokens;
  }

  /// Same greedy path as decode_greedy plus the per-step distributions.
  SoftTrace decode_soft(const Vector& z, int max_seq_len) const {
    return decode_trace(z, max_seq_len, true);
  }

  /// Teacher-forced per-step vocabulary logits for training.
  std::vector<Node*> teacher_logits_graph(Tape& t, Node* z, const PackedBatch& pb, bool trainable) {
    LstmNodes s1 = initial_state_graph(t, z, init_h1_w_, init_h1_b_, init_c1_w_, init_c1_b_, trainable);
    LstmNodes s2 = initial_state_graph(t, z, init_h2_w_, init_h2_b_, init_c2_w_, init_c2_b_, trainable);
    std::vector<Node*> logits;
    logits.reserve(static_cast<std::size_t>(pb.steps));
    for (int step = 0; step < pb.steps; ++step) {
      Node* x = t.embedding(embedding_, pb.dec_in_ids[static_cast<std::size_t>(step)], trainable);
      s1 = nn::lstm_step(t, lstm1_, x, s1, trainable);
      s2 = nn::lstm_step(t, lstm2_, s1.h, s2, trainable);
      logits.push_back(t.add_bias(t.matmul(t.param(head_w_, trainable), s2.h), t.param(head_b_, trainable)));
    }
    return logits;
  }

  /// Differentiable distributions along a frozen greedy token path; the
  /// gradient flows from each distribution back to z through the recurrent
  /// states, not through the discrete token choices. Batch size 1.
  std::vector<Node*> soft_path_graph(Tape& t, Node* z, const std::vector<int>& path) {
    LstmNodes s1 = initial_state_graph(t, z, init_h1_w_, init_h1_b_, init_c1_w_, init_c1_b_, false);
    LstmNodes s2 = initial_state_graph(t, z, init_h2_w_, init_h2_b_, init_c2_w_, init_c2_b_, false);
    std::vector<Node*> dists;
    dists.reserve(path.size());
    int prev = Vocabulary::kStart;
    for (int tok : path) {
      Node* x = t.embedding(embedding_, {prev}, false);
      s1 = nn::lstm_step(t, lstm1_, x, s1, false);
      s2 = nn::lstm_step(t, lstm2_, s1.h, s2, false);
      Node* logits = t.add_bias(t.matmul(t.param(head_w_, false), s2.h), t.param(head_b_, false));
      dists.push_back(t.softmax_columns(t.mask_rows(logits, {Vocabulary::kPad, Vocabulary::kStart})));
      prev = tok;
    }
    return dists;
  }

  std::vector<Parameter*> parameters() {
    std::vector<Parameter*> out = {&embedding_};
    for (auto* p : lstm1_.parameters()) out.push_back(p);
    for (auto* p : lstm2_.parameters()) out.push_back(p);
    for (Parameter* p : {&init_h1_w_, &init_h1_b_, &init_c1_w_, &init_c1_b_, &init_h2_w_, &init_h2_b_,
                         &init_c2_w_, &init_c2_b_, &head_w_, &head_b_})
      out.push_back(p);
    return out;
  }

  const ModelConfig& config() const { return cfg_; }

 private:
  SoftTrace decode_trace(const Vector& z, int max_seq_len, bool want_distributions) const {
    if (z.size() != cfg_.latent_dim)
      throw ConfigError("latent vector has dimension " + std::to_string(z.size()) + ", expected " +
                        std::to_string(cfg_.latent_dim));
    if (!z.allFinite()) throw NumericalError("latent vector contains non-finite values");
    LstmState s1{init_h1_w_.value * z + init_h1_b_.value.col(0), init_c1_w_.value * z + init_c1_b_.value.col(0)};
    LstmState s2{init_h2_w_.value * z + init_h2_b_.value.col(0), init_c2_w_.value * z + init_c2_b_.value.col(0)};
    SoftTrace trace;
    int prev = Vocabulary::kStart;
    for (int step = 0; step < max_seq_len; ++step) {
      nn::lstm_step_plain(lstm1_, embedding_.value.col(prev), s1);
      nn::lstm_step_plain(lstm2_, s1.h, s2);
      Vector logits = head_w_.value * s2.h + head_b_.value.col(0);
      logits[Vocabulary::kPad] = -1e30;
      logits[Vocabulary::kStart] = -1e30;
      int tok = argmax(logits);
      trace.tokens.push_back(tok);
      if (want_distributions) {
        // Vectorized exp leaves a subnormal residue at the masked entries;
        // the published distributions carry exact zeros there.
        Vector d = detail::stable_softmax(logits);
        d[Vocabulary::kPad] = 0.0;
        d[Vocabulary::kStart] = 0.0;
        trace.distributions.push_back(std::move(d));
      }
      if (tok == Vocabulary::kEos) break;
      prev = tok;
    }
    return trace;
  }

  static LstmNodes initial_state_graph(Tape& t, Node* z, Parameter& hw, Parameter& hb, Parameter& cw,
                                       Parameter& cb, bool trainable) {
    return {t.add_bias(t.matmul(t.param(hw, trainable), z), t.param(hb, trainable)),
            t.add_bias(t.matmul(t.param(cw, trainable), z), t.param(cb, trainable))};
  }

  ModelConfig cfg_;
  Parameter embedding_;
  LstmLayer lstm1_;
  LstmLayer lstm2_;
  Parameter init_h1_w_, init_h1_b_, init_c1_w_, init_c1_b_;
  Parameter init_h2_w_, init_h2_b_, init_c2_w_, init_c2_b_;
  Parameter head_w_;
  Parameter head_b_;
};

/// Latent classifier c: one dense layer with softmax on the latent vector.
class LatentClassifier {
 public:
  explicit LatentClassifier(const ModelConfig& cfg)
      : cfg_(cfg),
        w_("latent.w", cfg.num_classes, cfg.latent_dim),
        b_("latent.b", cfg.num_classes, 1) {
    cfg_.validate();
    Rng rng(mix_seed(cfg.seed, 4));
    w_.init_uniform(rng, TargetClassifier::kInitBound);
    b_.init_uniform(rng, TargetClassifier::kInitBound);
  }

  Vector classify_latent(const Vector& z) const {
    if (!z.allFinite()) throw NumericalError("latent vector contains non-finite values");
    return detail::stable_softmax(w_.value * z + b_.value.col(0));
  }

  int predict(const Vector& z) const { return argmax(classify_latent(z)); }

  Node* logits_graph(Tape& t, Node* z, bool trainable) {
    return t.add_bias(t.matmul(t.param(w_, trainable), z), t.param(b_, trainable));
  }

  void zero_weights() {
    w_.value.setZero();
    b_.value.setZero();
  }

  std::vector<Parameter*> parameters() { return {&w_, &b_}; }

  const ModelConfig& config() const { return cfg_; }

 private:
  ModelConfig cfg_;
  Parameter w_;
  Parameter b_;
};

/// Mean categorical cross-entropy of per-step vocabulary distributions
/// against a target sequence; pad positions are excluded from the mean.
inline double reconstruction_loss(const std::vector<Vector>& predicted, const std::vector<int>& target) {
  const std::size_t steps = std::min(predicted.size(), target.size());
  double total = 0.0;
  int valid = 0;
  for (std::size_t t = 0; t < steps; ++t) {
    if (target[t] == Vocabulary::kPad) continue;
    if (target[t] < 0 || target[t] >= predicted[t].size())
      throw ConfigError("reconstruction_loss: target id out of range");
    total += -std::log(std::max(predicted[t][target[t]], 1e-300));
    ++valid;
  }
  if (valid == 0) throw NumericalError("reconstruction_loss: no valid (non-pad) positions");
  return total / valid;
}

struct JointLossNodes {
  Node* total = nullptr;
  Node* reconstruction = nullptr;
  Node* latent = nullptr;
};

/// Builds R(X, X') + lambda * L(c(E(X)), Y) for one batch. R is the mean
/// cross-entropy over valid token positions under teacher forcing; L is the
/// mean cross-entropy of the latent classifier.
inline JointLossNodes joint_loss_graph(Tape& t, const PackedBatch& pb, Encoder& enc, Decoder& dec,
                                       LatentClassifier& lat, double lambda, bool trainable) {
  if (pb.batch == 0) throw ConfigError("joint loss requires a nonempty batch");
  Node* z = enc.encode_graph(t, pb, trainable);
  std::vector<Node*> logits = dec.teacher_logits_graph(t, z, pb, trainable);
  Node* recon_sum = nullptr;
  for (int step = 0; step < pb.steps; ++step) {
    Node* ce = t.cross_entropy_sum(logits[static_cast<std::size_t>(step)],
                                   pb.step_ids[static_cast<std::size_t>(step)],
                                   pb.target_weights[static_cast<std::size_t>(step)]);
    recon_sum = recon_sum ? t.add(recon_sum, ce) : ce;
  }
  JointLossNodes out;
  out.reconstruction = t.scalar_mul(recon_sum, 1.0 / pb.valid_positions);
  Node* lat_logits = lat.logits_graph(t, z, trainable);
  out.latent = t.scalar_mul(
      t.cross_entropy_sum(lat_logits, pb.labels,
                          std::vector<double>(static_cast<std::size_t>(pb.batch), 1.0)),
      1.0 / pb.batch);
  out.total = t.add(out.reconstruction, t.scalar_mul(out.latent, lambda));
  return out;
}

inline double joint_loss(std::span<const LabeledExample> batch, Encoder& enc, Decoder& dec,
                         LatentClassifier& lat, double lambda) {
  Tape t;
  PackedBatch pb = pack_batch(batch);
  return joint_loss_graph(t, pb, enc, dec, lat, lambda, false).total->value()(0, 0);
}

/// Scalar loss l(F(x'), y) where the decoder follows the given frozen token
/// path and F consumes the per-step distributions as expected embeddings.
/// This is the quantity whose z-gradient the soft mode computes; exposed so
/// tests can difference it directly.
inline double soft_attack_loss(const Vector& z, const std::vector<int>& path, int label, Decoder& dec,
                               TargetClassifier& target) {
  Tape t;
  Node* zn = t.input(detail::as_column(z), false);
  std::vector<Node*> dists = dec.soft_path_graph(t, zn, path);
  Node* logits = target.logits_graph_soft(t, dists);
  return t.cross_entropy_sum(logits, {label}, {1.0})->value()(0, 0);
}

/// Scalar loss l(c(z), y) for the surrogate gradient mode.
inline double surrogate_attack_loss(const Vector& z, int label, LatentClassifier& lat) {
  Tape t;
  Node* zn = t.input(detail::as_column(z), false);
  Node* logits = lat.logits_graph(t, zn, false);
  return t.cross_entropy_sum(logits, {label}, {1.0})->value()(0, 0);
}

/// Gradient of the attack loss with respect to the latent vector.
///   soft:      d/dz l(F(soft-decode(z)), y) along the frozen greedy path
///   surrogate: d/dz l(c(z), y)
inline Vector latent_gradient(const Vector& z, int label, Decoder& dec, TargetClassifier& target,
                              LatentClassifier* lat, GradientMode mode) {
  if (!z.allFinite()) throw NumericalError("latent vector contains non-finite values");
  Tape t;
  Node* zn = t.input(detail::as_column(z), true);
  Node* loss = nullptr;
  if (mode == GradientMode::soft) {
    std::vector<int> path = dec.decode_greedy(z, dec.config().max_seq_len);
    std::vector<Node*> dists = dec.soft_path_graph(t, zn, path);
    Node* logits = target.logits_graph_soft(t, dists);
    loss = t.cross_entropy_sum(logits, {label}, {1.0});
  } else {
    if (lat == nullptr) throw ConfigError("surrogate gradient mode requires the latent classifier");
    Node* logits = lat->logits_graph(t, zn, false);
    loss = t.cross_entropy_sum(logits, {label}, {1.0});
  }
  t.backward(loss);
  Vector grad = zn->grad.size() == 0 ? Vector::Zero(z.size()) : Vector(zn->grad.col(0));
  if (!grad.allFinite()) throw NumericalError("latent gradient contains non-finite values");
  return grad;
}

}  // namespace advtext
