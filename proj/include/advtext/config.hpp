#pragma once

#include <cmath>
#include <cstdint>
#include <string>

#include "json.hpp"

#include "advtext/common.hpp"

namespace advtext {

enum class GradientMode { soft, surrogate };
enum class AttackKind { fgsm, pgd };

inline std::string to_string(GradientMode m) { return m == GradientMode::soft ? "soft" : "surrogate"; }
inline std::string to_string(AttackKind k) { return k == AttackKind::fgsm ? "fgsm" : "pgd"; }

inline GradientMode gradient_mode_from_string(const std::string& s) {
  if (s == "soft") return GradientMode::soft;
  if (s == "surrogate") return GradientMode::surrogate;
  throw ConfigError("unknown gradient mode: " + s + " (expected soft|surrogate)");
}

inline AttackKind attack_kind_from_string(const std::string& s) {
  if (s == "fgsm") return AttackKind::fgsm;
  if (s == "pgd") return AttackKind::pgd;
  throw ConfigError("unknown attack: " + s + " (expected fgsm|pgd)");
}

/// Dimensions and shared hyperparameters of the four networks. Desk-scale
/// defaults; paper-scale values (embed 512, decoder hidden 512, target
/// hidden 128/64, vocab 30522) remain reachable by configuration.
struct ModelConfig {
  int vocab_size = 2000;
  int latent_dim = 128;
  int embed_dim = 128;
  int encoder_hidden = 128;
  int decoder_hidden = 128;
  int target_hidden_1 = 128;
  int target_hidden_2 = 64;
  int num_classes = 4;
  int max_seq_len = 64;
  double lambda_balance = 1.0;
  std::uint64_t seed = 1;

  void validate() const {
    auto positive = [](int v, const char* name) {
      if (v < 1) throw ConfigError(std::string("model config: ") + name + " must be >= 1");
    };
    positive(vocab_size, "vocab_size");
    positive(latent_dim, "latent_dim");
    positive(embed_dim, "embed_dim");
    positive(encoder_hidden, "encoder_hidden");
    positive(decoder_hidden, "decoder_hidden");
    positive(target_hidden_1, "target_hidden_1");
    positive(target_hidden_2, "target_hidden_2");
    positive(max_seq_len, "max_seq_len");
    if (num_classes < 2) throw ConfigError("model config: num_classes must be >= 2");
    if (!(lambda_balance >= 0.0)) throw ConfigError("model config: lambda_balance must be nonnegative");
  }
};

inline void to_json(nlohmann::json& j, const ModelConfig& c) {
  j = {{"vocab_size", c.vocab_size},
       {"latent_dim", c.latent_dim},
       {"embed_dim", c.embed_dim},
       {"encoder_hidden", c.encoder_hidden},
       {"decoder_hidden", c.decoder_hidden},
       {"target_hidden_1", c.target_hidden_1},
       {"target_hidden_2", c.target_hidden_2},
       {"num_classes", c.num_classes},
       {"max_seq_len", c.max_seq_len},
       {"lambda_balance", c.lambda_balance},
       {"seed", c.seed}};
}

inline void from_json(const nlohmann::json& j, ModelConfig& c) {
  j.at("vocab_size").get_to(c.vocab_size);
  j.at("latent_dim").get_to(c.latent_dim);
  j.at("embed_dim").get_to(c.embed_dim);
  j.at("encoder_hidden").get_to(c.encoder_hidden);
  j.at("decoder_hidden").get_to(c.decoder_hidden);
  j.at("target_hidden_1").get_to(c.target_hidden_1);
  j.at("target_hidden_2").get_to(c.target_hidden_2);
  j.at("num_classes").get_to(c.num_classes);
  j.at("max_seq_len").get_to(c.max_seq_len);
  j.at("lambda_balance").get_to(c.lambda_balance);
  j.at("seed").get_to(c.seed);
}

struct TrainConfig {
  int batch_size = 32;
  int epochs = 10;
  double learning_rate = 1e-3;
  std::string optimizer = "adam";
  std::uint64_t seed = 0;
  bool shuffle = true;
  double clip_norm = 0.0;  // 0 disables; 5.0 is the documented divergence switch

  void validate() const {
    if (batch_size < 1) throw ConfigError("train config: batch_size must be >= 1");
    if (epochs < 1) throw ConfigError("train config: epochs must be >= 1");
    if (!(learning_rate > 0.0)) throw ConfigError("train config: learning_rate must be positive");
    if (optimizer != "adam") throw ConfigError("train config: unsupported optimizer " + optimizer);
    if (clip_norm < 0.0) throw ConfigError("train config: clip_norm must be >= 0");
  }
};

inline void to_json(nlohmann::json& j, const TrainConfig& c) {
  j = {{"batch_size", c.batch_size}, {"epochs", c.epochs},       {"learning_rate", c.learning_rate},
       {"optimizer", c.optimizer},   {"seed", c.seed},           {"shuffle", c.shuffle},
       {"clip_norm", c.clip_norm}};
}

inline void from_json(const nlohmann::json& j, TrainConfig& c) {
  j.at("batch_size").get_to(c.batch_size);
  j.at("epochs").get_to(c.epochs);
  j.at("learning_rate").get_to(c.learning_rate);
  j.at("optimizer").get_to(c.optimizer);
  j.at("seed").get_to(c.seed);
  j.at("shuffle").get_to(c.shuffle);
  j.at("clip_norm").get_to(c.clip_norm);
}

/// Perturbation-search settings. eta defaults to epsilon/4 when left
/// unresolved (negative).
struct AttackConfig {
  double epsilon = 0.05;
  double eta = -1.0;
  int max_iters = 10;
  GradientMode gradient_mode = GradientMode::soft;
  std::uint64_t seed = 0;

  /// Fills the eta default. A positive fallback is used for the degenerate
  /// epsilon = 0 case where the attack cannot move anyway.
  void resolve_defaults() {
    if (eta < 0.0) eta = epsilon > 0.0 ? epsilon / 4.0 : 1.0;
  }

  void validate() const {
    if (!(epsilon >= 0.0) || !std::isfinite(epsilon))
      throw ConfigError("attack config: epsilon must be finite and nonnegative");
    if (!(eta > 0.0) || !std::isfinite(eta)) throw ConfigError("attack config: eta must be positive");
    if (epsilon > 0.0 && eta > 2.0 * epsilon)
      throw ConfigError("attack config: eta must be <= 2*epsilon (larger steps are always clipped)");
    if (max_iters < 1) throw ConfigError("attack config: max_iters must be >= 1");
  }
};

inline void to_json(nlohmann::json& j, const AttackConfig& c) {
  j = {{"epsilon", c.epsilon},
       {"eta", c.eta},
       {"max_iters", c.max_iters},
       {"gradient_mode", to_string(c.gradient_mode)},
       {"seed", c.seed}};
}

inline void from_json(const nlohmann::json& j, AttackConfig& c) {
  j.at("epsilon").get_to(c.epsilon);
  j.at("eta").get_to(c.eta);
  j.at("max_iters").get_to(c.max_iters);
  c.gradient_mode = gradient_mode_from_string(j.at("gradient_mode").get<std::string>());
  j.at("seed").get_to(c.seed);
}

}  // namespace advtext
