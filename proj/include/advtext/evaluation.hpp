/**
 * @file evaluation.hpp
 * @brief End-to-end attack evaluation: per-example pipeline runs, the
 *        success criterion, corpus-level summaries, class transition
 *        matrices, and report rendering.
 *
 * An attack on example (x, y) runs z = E(x), x' = D(z), perturbs z into z*,
 * decodes x* = D(z*), and classifies both with F. The attack is a success
 * when F(x') = y and F(x*) != y; when F(x') != y the example counts as an
 * invalid reconstruction and cannot be a success regardless of x*.
 */
#pragma once

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "advtext/attacks.hpp"
#include "advtext/common.hpp"
#include "advtext/config.hpp"
#include "advtext/corpus.hpp"
#include "advtext/models.hpp"
#include "advtext/vocab.hpp"

namespace advtext {

enum class AttackStatus { success, invalid_reconstruction, no_flip };

inline std::string to_string(AttackStatus s) {
  switch (s) {
    case AttackStatus::success: return "success";
    case AttackStatus::invalid_reconstruction: return "invalid_reconstruction";
    case AttackStatus::no_flip: return "no_flip";
  }
  throw ConfigError("unknown attack status");
}

inline AttackStatus attack_status_from_string(const std::string& s) {
  if (s == "success") return AttackStatus::success;
  if (s == "invalid_reconstruction") return AttackStatus::invalid_reconstruction;
  if (s == "no_flip") return AttackStatus::no_flip;
  throw ParseError("unknown attack status '" + s + "'");
}

/// The status is a pure function of the ground-truth label and the two
/// predictions, so any consumer of raw results can recompute it.
inline AttackStatus compute_status(int label, int reconstruction_pred, int adversarial_pred) {
  if (reconstruction_pred != label) return AttackStatus::invalid_reconstruction;
  return adversarial_pred != label ? AttackStatus::success : AttackStatus::no_flip;
}

struct AttackResult {
  int example_id = 0;
  int label = 0;
  std::vector<int> original_tokens;
  std::string original_text;
  std::vector<int> reconstruction_tokens;
  std::string reconstruction_text;
  int reconstruction_pred = 0;
  std::vector<int> adversarial_tokens;
  std::string adversarial_text;
  int adversarial_pred = 0;
  std::vector<double> z;
  std::vector<double> z_star;
  std::vector<double> delta;
  AttackStatus status = AttackStatus::no_flip;
  std::string attack;  // "fgsm" or "pgd"
  int iterations_used = 0;
  nlohmann::json config_echo;

  double delta_linf() const {
    double m = 0.0;
    for (double d : delta) m = std::max(m, std::abs(d));
    return m;
  }

  nlohmann::json to_json() const {
    return nlohmann::json{{"example_id", example_id},
                          {"label", label},
                          {"original_tokens", original_tokens},
                          {"original_text", original_text},
                          {"reconstruction_tokens", reconstruction_tokens},
                          {"reconstruction_text", reconstruction_text},
                          {"reconstruction_pred", reconstruction_pred},
                          {"adversarial_tokens", adversarial_tokens},
                          {"adversarial_text", adversarial_text},
                          {"adversarial_pred", adversarial_pred},
                          {"z", z},
                          {"z_star", z_star},
                          {"delta", delta},
                          {"status", to_string(status)},
                          {"attack", attack},
                          {"iterations_used", iterations_used},
                          {"config", config_echo}};
  }

  static AttackResult from_json(const nlohmann::json& j) {
    AttackResult r;
    r.example_id = j.at("example_id").get<int>();
    r.label = j.at("label").get<int>();
    r.original_tokens = j.at("original_tokens").get<std::vector<int>>();
    r.original_text = j.at("original_text").get<std::string>();
    r.reconstruction_tokens = j.at("reconstruction_tokens").get<std::vector<int>>();
    r.reconstruction_text = j.at("reconstruction_text").get<std::string>();
    r.reconstruction_pred = j.at("reconstruction_pred").get<int>();
    r.adversarial_tokens = j.at("adversarial_tokens").get<std::vector<int>>();
    r.adversarial_text = j.at("adversarial_text").get<std::string>();
    r.adversarial_pred = j.at("adversarial_pred").get<int>();
    r.z = j.at("z").get<std::vector<double>>();
    r.z_star = j.at("z_star").get<std::vector<double>>();
    r.delta = j.at("delta").get<std::vector<double>>();
    r.status = attack_status_from_string(j.at("status").get<std::string>());
    r.attack = j.at("attack").get<std::string>();
    r.iterations_used = j.at("iterations_used").get<int>();
    r.config_echo = j.value("config", nlohmann::json::object());
    return r;
  }
};

struct EvalSummary {
  int total = 0;
  int success_count = 0;
  int invalid_reconstruction_count = 0;
  int no_flip_count = 0;
  int valid_count = 0;         // success + no_flip
  double success_rate = 0.0;   // successes among reconstruction-valid examples
  double mean_delta_linf = 0.0;

  nlohmann::json to_json() const {
    return nlohmann::json{{"total", total},
                          {"success_count", success_count},
                          {"invalid_reconstruction_count", invalid_reconstruction_count},
                          {"no_flip_count", no_flip_count},
                          {"valid_count", valid_count},
                          {"success_rate", success_rate},
                          {"mean_delta_linf", mean_delta_linf}};
  }
};

namespace detail {

inline std::vector<double> to_std(const Vector& v) {
  return std::vector<double>(v.data(), v.data() + v.size());
}

}  // namespace detail

/// Runs the full pipeline on one example and fills an AttackResult. The
/// latent classifier may be null when the gradient mode does not need it.
inline AttackResult attack_one(int example_id, const LabeledExample& x, const Encoder& enc,
                               Decoder& dec, TargetClassifier& target, LatentClassifier* lat,
                               AttackKind kind, AttackConfig cfg, const Vocabulary& vocab) {
  cfg.resolve_defaults();
  cfg.validate();
  const int max_len = dec.config().max_seq_len;

  AttackResult r;
  r.example_id = example_id;
  r.label = x.label;
  r.original_tokens = x.tokens;
  r.original_text = vocab.decode(x.tokens);
  r.attack = to_string(kind);

  Vector z = enc.encode(x.tokens);
  r.z = detail::to_std(z);
  r.reconstruction_tokens = dec.decode_greedy(z, max_len);
  r.reconstruction_text = vocab.decode(r.reconstruction_tokens);
  r.reconstruction_pred = target.predict(r.reconstruction_tokens);

  Vector delta;
  if (kind == AttackKind::fgsm) {
    Vector grad = latent_gradient(z, x.label, dec, target, lat, cfg.gradient_mode);
    delta = fgsm_delta(grad, cfg.epsilon);
    r.iterations_used = 1;
  } else {
    LatentPredicate flipped = [&](const Vector& cand) {
      return target.predict(dec.decode_greedy(cand, max_len)) != x.label;
    };
    PgdOutcome outcome = pgd_attack(z, x.label, dec, target, lat, cfg, flipped);
    delta = outcome.delta;
    r.iterations_used = outcome.iterations_used;
  }
  Vector z_star = z + delta;
  r.delta = detail::to_std(delta);
  r.z_star = detail::to_std(z_star);
  r.adversarial_tokens = dec.decode_greedy(z_star, max_len);
  r.adversarial_text = vocab.decode(r.adversarial_tokens);
  r.adversarial_pred = target.predict(r.adversarial_tokens);
  r.status = compute_status(r.label, r.reconstruction_pred, r.adversarial_pred);

  nlohmann::json echo(cfg);
  echo["attack"] = to_string(kind);
  r.config_echo = echo;
  return r;
}

/// Counts and rates over a result list; aggregation is order-independent
/// except mean_delta_linf, which is summed in example-id order.
inline EvalSummary summarize_results(const std::vector<AttackResult>& results) {
  EvalSummary s;
  s.total = static_cast<int>(results.size());
  double delta_sum = 0.0;
  for (const auto& r : results) {
    switch (r.status) {
      case AttackStatus::success: ++s.success_count; break;
      case AttackStatus::invalid_reconstruction: ++s.invalid_reconstruction_count; break;
      case AttackStatus::no_flip: ++s.no_flip_count; break;
    }
    delta_sum += r.delta_linf();
  }
  s.valid_count = s.success_count + s.no_flip_count;
  s.success_rate = s.valid_count > 0
                       ? static_cast<double>(s.success_count) / static_cast<double>(s.valid_count)
                       : 0.0;
  s.mean_delta_linf = s.total > 0 ? delta_sum / s.total : 0.0;
  return s;
}

struct EvalRun {
  std::vector<AttackResult> results;
  EvalSummary summary;
};

inline EvalRun evaluate_attack(const std::vector<LabeledExample>& corpus, const Encoder& enc,
                               Decoder& dec, TargetClassifier& target, LatentClassifier* lat,
                               AttackKind kind, const AttackConfig& cfg, const Vocabulary& vocab) {
  if (corpus.empty()) throw ConfigError("attack evaluation requires a nonempty corpus");
  EvalRun run;
  run.results.reserve(corpus.size());
  for (std::size_t i = 0; i < corpus.size(); ++i)
    run.results.push_back(
        attack_one(static_cast<int>(i), corpus[i], enc, dec, target, lat, kind, cfg, vocab));
  run.summary = summarize_results(run.results);
  return run;
}

struct TransitionMatrix {
  std::vector<std::vector<double>> percentages;  // [source][target], diagonal unused
  std::vector<int> valid_counts;                 // reconstruction-valid examples per source class
};

/// Row i uses the reconstruction-valid examples of class i as denominator;
/// entry (i, j) is the percentage of them whose adversarial text F labels j.
inline TransitionMatrix build_transition_matrix(const std::vector<AttackResult>& results,
                                                const ClassSet& classes) {
  const int n = classes.count();
  TransitionMatrix m;
  m.percentages.assign(static_cast<std::size_t>(n), std::vector<double>(static_cast<std::size_t>(n), 0.0));
  m.valid_counts.assign(static_cast<std::size_t>(n), 0);
  std::vector<std::vector<int>> flips(static_cast<std::size_t>(n),
                                      std::vector<int>(static_cast<std::size_t>(n), 0));
  for (const auto& r : results) {
    if (r.label < 0 || r.label >= n) throw ConfigError("result label outside the class set");
    if (r.status == AttackStatus::invalid_reconstruction) continue;
    ++m.valid_counts[static_cast<std::size_t>(r.label)];
    if (r.status == AttackStatus::success) {
      if (r.adversarial_pred < 0 || r.adversarial_pred >= n)
        throw ConfigError("adversarial prediction outside the class set");
      ++flips[static_cast<std::size_t>(r.label)][static_cast<std::size_t>(r.adversarial_pred)];
    }
  }
  for (int i = 0; i < n; ++i) {
    if (m.valid_counts[static_cast<std::size_t>(i)] == 0) continue;
    for (int j = 0; j < n; ++j) {
      m.percentages[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] =
          100.0 * static_cast<double>(flips[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)]) /
          static_cast<double>(m.valid_counts[static_cast<std::size_t>(i)]);
    }
  }
  return m;
}

/// Integral percentages render without decimals ("0%"), everything else to
/// one decimal ("27.7%").
inline std::string format_percent(double value) {
  char buf[32];
  if (value == std::floor(value))
    std::snprintf(buf, sizeof(buf), "%.0f%%", value);
  else
    std::snprintf(buf, sizeof(buf), "%.1f%%", value);
  return buf;
}

/// Pipe-separated table: one header line, then one line per source class.
/// The diagonal renders as "-"; a class with no valid examples renders every
/// cell as "n/a".
inline std::string format_transition_matrix(const TransitionMatrix& m, const ClassSet& classes) {
  const int n = classes.count();
  std::ostringstream out;
  out << "Clean \\ Adv";
  for (int j = 0; j < n; ++j) out << " | " << classes.names[static_cast<std::size_t>(j)];
  out << "\n";
  for (int i = 0; i < n; ++i) {
    out << classes.names[static_cast<std::size_t>(i)];
    for (int j = 0; j < n; ++j) {
      out << " | ";
      if (m.valid_counts[static_cast<std::size_t>(i)] == 0)
        out << "n/a";
      else if (i == j)
        out << "-";
      else
        out << format_percent(m.percentages[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)]);
    }
    out << "\n";
  }
  return out.str();
}

/// Human-readable Markdown report: summary counts, the transition matrix,
/// and up to max_samples successful clean/adversarial text pairs.
inline std::string render_report(const EvalSummary& summary, const TransitionMatrix& matrix,
                                 const std::vector<AttackResult>& results, const ClassSet& classes,
                                 int max_samples = 5) {
  std::ostringstream out;
  out << "# Attack evaluation report\n\n";
  out << "## Summary\n\n";
  out << "- examples attacked: " << summary.total << "\n";
  out << "- successes: " << summary.success_count << "\n";
  out << "- invalid reconstructions: " << summary.invalid_reconstruction_count << "\n";
  out << "- no flip: " << summary.no_flip_count << "\n";
  out << "- success rate among valid: " << format_percent(100.0 * summary.success_rate) << "\n";
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6g", summary.mean_delta_linf);
  out << "- mean delta l-inf: " << buf << "\n\n";
  out << "## Class transitions\n\n";
  out << format_transition_matrix(matrix, classes) << "\n";
  out << "## Sample adversarial pairs\n\n";
  int shown = 0;
  for (const auto& r : results) {
    if (r.status != AttackStatus::success || shown >= max_samples) continue;
    out << "### Example " << r.example_id << ": "
        << classes.names[static_cast<std::size_t>(r.label)] << " -> "
        << classes.names[static_cast<std::size_t>(r.adversarial_pred)] << "\n\n";
    out << "- original: " << r.original_text << "\n";
    out << "- adversarial: " << r.adversarial_text << "\n\n";
    ++shown;
  }
  if (shown == 0) out << "No successful adversarial examples.\n";
  return out.str();
}

/// One JSON object per line, sorted by example id.
inline void write_results_jsonl(const std::string& path, std::vector<AttackResult> results) {
  std::sort(results.begin(), results.end(),
            [](const AttackResult& a, const AttackResult& b) { return a.example_id < b.example_id; });
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot open results file for writing: " + path);
  for (const auto& r : results) out << r.to_json().dump() << "\n";
}

inline std::vector<AttackResult> read_results_jsonl(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open results file: " + path);
  std::vector<AttackResult> results;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      results.push_back(AttackResult::from_json(nlohmann::json::parse(line)));
    } catch (const nlohmann::json::exception& e) {
      throw ParseError("results line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return results;
}

}  // namespace advtext
