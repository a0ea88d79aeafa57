/**
 * @file cli_app.hpp
 * @brief Command-line front end: build-vocab, train-target,
 *        train-autoencoder, attack, and report subcommands.
 *
 * Every subcommand accepts --config with a TOML file whose sections mirror
 * the dotted option names ([model] latent_dim = 32 equals
 * --model.latent_dim 32); values given as flags win over the file. Exit
 * codes: 0 success, 2 usage or configuration error, 1 runtime failure.
 */
#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "advtext/checkpoint.hpp"
#include "advtext/common.hpp"
#include "advtext/config.hpp"
#include "advtext/corpus.hpp"
#include "advtext/evaluation.hpp"
#include "advtext/models.hpp"
#include "advtext/training.hpp"
#include "advtext/vocab.hpp"

namespace advtext::cli {

namespace fs = std::filesystem;

struct RunConfig {
  // [corpus]
  std::string corpus_kind = "toy";
  std::string train_path;
  std::string test_path;
  std::uint64_t toy_seed = 7;
  int train_per_class = 200;
  int val_per_class = 50;
  int train_cap = 2000;
  int test_cap = 500;
  // [vocab]
  int vocab_max_size = 2000;
  // [model]
  ModelConfig model;
  // [train_target] / [train_autoencoder]
  TrainConfig train_target;
  TrainConfig train_autoencoder;
  // [attack]
  AttackConfig attack;
  std::string attack_kind = "fgsm";
  std::string gradient_mode = "soft";
  int attack_limit = 0;  // 0 attacks the whole evaluation split
  // [output]
  std::string out_dir = "out";
  int report_samples = 5;
  // consumed before parsing; see expand_config_args
  std::string config_path;
};

inline nlohmann::json run_config_echo(const RunConfig& rc) {
  return nlohmann::json{
      {"corpus",
       {{"kind", rc.corpus_kind},
        {"train_path", rc.train_path},
        {"test_path", rc.test_path},
        {"toy_seed", rc.toy_seed},
        {"train_per_class", rc.train_per_class},
        {"val_per_class", rc.val_per_class},
        {"train_cap", rc.train_cap},
        {"test_cap", rc.test_cap}}},
      {"vocab", {{"max_size", rc.vocab_max_size}}},
      {"model", nlohmann::json(rc.model)},
      {"train_target", nlohmann::json(rc.train_target)},
      {"train_autoencoder", nlohmann::json(rc.train_autoencoder)},
      {"attack",
       {{"epsilon", rc.attack.epsilon},
        {"eta", rc.attack.eta},
        {"max_iters", rc.attack.max_iters},
        {"kind", rc.attack_kind},
        {"gradient_mode", rc.gradient_mode},
        {"limit", rc.attack_limit}}},
      {"output", {{"dir", rc.out_dir}, {"samples", rc.report_samples}}}};
}

namespace detail {

struct CorpusBundle {
  std::vector<RawRecord> train_raw;
  std::vector<RawRecord> val_raw;
  ClassSet classes;
};

inline CorpusBundle load_corpus(const RunConfig& rc) {
  if (rc.corpus_kind == "toy") {
    ToySplit split = toy_split(rc.toy_seed, rc.train_per_class, rc.val_per_class);
    return {std::move(split.train), std::move(split.val), toy_classes()};
  }
  if (rc.corpus_kind == "agnews") {
    if (rc.train_path.empty() || rc.test_path.empty())
      throw ConfigError("agnews corpus requires corpus.train_path and corpus.test_path");
    ClassSet classes = agnews_classes();
    return {ingest_agnews(rc.train_path, classes, rc.train_cap),
            ingest_agnews(rc.test_path, classes, rc.test_cap), classes};
  }
  throw ConfigError("unknown corpus kind: " + rc.corpus_kind);
}

inline ClassSet classes_for(const RunConfig& rc) {
  if (rc.corpus_kind == "toy") return toy_classes();
  if (rc.corpus_kind == "agnews") return agnews_classes();
  throw ConfigError("unknown corpus kind: " + rc.corpus_kind);
}

inline void ensure_out_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw ConfigError("cannot create output directory " + dir + ": " + ec.message());
}

inline std::string out_path(const RunConfig& rc, const char* name) {
  return (fs::path(rc.out_dir) / name).string();
}

inline void write_text(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot open output file for writing: " + path);
  out << content;
  if (!out) throw ConfigError("error writing output file: " + path);
}

inline void write_json(const std::string& path, const nlohmann::json& j) {
  write_text(path, j.dump(2) + "\n");
}

inline Vocabulary load_vocab_artifact(const RunConfig& rc) {
  const std::string path = out_path(rc, "vocab.txt");
  if (!fs::exists(path))
    throw ConfigError("vocabulary file not found: " + path + " (run build-vocab first)");
  return Vocabulary::load(path);
}

/// The effective model configuration: vocabulary size and class count come
/// from the built vocabulary and the corpus kind, not from the config file.
inline ModelConfig effective_model_config(const RunConfig& rc, const Vocabulary& vocab) {
  ModelConfig mc = rc.model;
  mc.vocab_size = vocab.size();
  mc.num_classes = classes_for(rc).count();
  mc.validate();
  return mc;
}

inline AttackConfig effective_attack_config(const RunConfig& rc) {
  AttackConfig ac = rc.attack;
  ac.gradient_mode = gradient_mode_from_string(rc.gradient_mode);
  ac.resolve_defaults();
  ac.validate();
  return ac;
}

inline CheckpointMeta expect_meta(const RunConfig& rc, const char* ckpt_name,
                                  const std::string& model_kind, const std::string& vocab_hash) {
  const std::string meta_path = out_path(rc, ckpt_name) + ".meta.json";
  if (!fs::exists(meta_path))
    throw ConfigError("checkpoint metadata not found: " + meta_path + " (train first)");
  CheckpointMeta meta = load_checkpoint_meta(meta_path);
  if (meta.model_kind != model_kind)
    throw ConfigError(meta_path + ": model kind is '" + meta.model_kind + "', expected '" +
                      model_kind + "'");
  if (meta.vocab_hash != vocab_hash)
    throw ConfigError(meta_path + ": vocabulary hash mismatch; rebuild or retrain");
  return meta;
}

}  // namespace detail

inline int cmd_build_vocab(const RunConfig& rc) {
  detail::ensure_out_dir(rc.out_dir);
  detail::CorpusBundle corpus = detail::load_corpus(rc);
  std::vector<std::string> texts;
  texts.reserve(corpus.train_raw.size());
  for (const auto& [text, label] : corpus.train_raw) texts.push_back(text);
  Vocabulary vocab = Vocabulary::build(texts, rc.vocab_max_size);

  const std::string vocab_path = detail::out_path(rc, "vocab.txt");
  vocab.save(vocab_path);
  detail::write_json(detail::out_path(rc, "vocab.meta.json"),
                     nlohmann::json{{"size", vocab.size()},
                                    {"vocab_hash", hash_file(vocab_path)},
                                    {"config", run_config_echo(rc)}});
  std::cout << "wrote " << vocab_path << " (" << vocab.size() << " tokens)\n";
  return 0;
}

inline int cmd_train_target(const RunConfig& rc) {
  detail::ensure_out_dir(rc.out_dir);
  Vocabulary vocab = detail::load_vocab_artifact(rc);
  ModelConfig mc = detail::effective_model_config(rc, vocab);
  detail::CorpusBundle corpus = detail::load_corpus(rc);
  std::vector<LabeledExample> train = encode_corpus(corpus.train_raw, vocab, mc.max_seq_len);
  std::vector<LabeledExample> val = encode_corpus(corpus.val_raw, vocab, mc.max_seq_len);

  TargetClassifier model(mc);
  TrainReport report = train_target_classifier(train, val, model, rc.train_target);

  const std::string ckpt = detail::out_path(rc, "target.ckpt");
  save_checkpoint(ckpt, model.parameters());
  save_checkpoint_meta(ckpt + ".meta.json",
                       {1, "target", mc, hash_file(detail::out_path(rc, "vocab.txt")),
                        rc.train_target.seed});
  nlohmann::json j = report.to_json();
  j["run_config"] = run_config_echo(rc);
  detail::write_json(detail::out_path(rc, "train_target_report.json"), j);
  std::cout << "train accuracy " << report.train_accuracy << ", val accuracy " << report.val_accuracy
            << " after " << report.epochs << " epochs (" << report.wall_seconds << " s)\n";
  return 0;
}

inline int cmd_train_autoencoder(const RunConfig& rc) {
  detail::ensure_out_dir(rc.out_dir);
  Vocabulary vocab = detail::load_vocab_artifact(rc);
  ModelConfig mc = detail::effective_model_config(rc, vocab);
  detail::CorpusBundle corpus = detail::load_corpus(rc);
  std::vector<LabeledExample> train = encode_corpus(corpus.train_raw, vocab, mc.max_seq_len);

  Encoder enc(mc);
  Decoder dec(mc);
  LatentClassifier lat(mc);
  TrainReport report =
      train_autoencoder(train, enc, dec, lat, rc.train_autoencoder, mc.lambda_balance);

  const std::string vocab_hash = hash_file(detail::out_path(rc, "vocab.txt"));
  std::vector<nn::Parameter*> ae_params = enc.parameters();
  for (auto* p : dec.parameters()) ae_params.push_back(p);
  const std::string ae_ckpt = detail::out_path(rc, "autoencoder.ckpt");
  save_checkpoint(ae_ckpt, ae_params);
  save_checkpoint_meta(ae_ckpt + ".meta.json",
                       {1, "autoencoder", mc, vocab_hash, rc.train_autoencoder.seed});
  const std::string lat_ckpt = detail::out_path(rc, "latent.ckpt");
  save_checkpoint(lat_ckpt, lat.parameters());
  save_checkpoint_meta(lat_ckpt + ".meta.json",
                       {1, "latent", mc, vocab_hash, rc.train_autoencoder.seed});

  nlohmann::json j = report.to_json();
  j["run_config"] = run_config_echo(rc);
  detail::write_json(detail::out_path(rc, "train_autoencoder_report.json"), j);
  std::cout << "reconstruction accuracy " << report.reconstruction_accuracy << ", latent accuracy "
            << report.latent_accuracy << " after " << report.epochs << " epochs ("
            << report.wall_seconds << " s)\n";
  return 0;
}

inline int cmd_attack(const RunConfig& rc) {
  detail::ensure_out_dir(rc.out_dir);
  Vocabulary vocab = detail::load_vocab_artifact(rc);
  const std::string vocab_hash = hash_file(detail::out_path(rc, "vocab.txt"));

  CheckpointMeta target_meta = detail::expect_meta(rc, "target.ckpt", "target", vocab_hash);
  CheckpointMeta ae_meta = detail::expect_meta(rc, "autoencoder.ckpt", "autoencoder", vocab_hash);
  CheckpointMeta lat_meta = detail::expect_meta(rc, "latent.ckpt", "latent", vocab_hash);
  if (nlohmann::json(target_meta.model_config) != nlohmann::json(ae_meta.model_config) ||
      nlohmann::json(target_meta.model_config) != nlohmann::json(lat_meta.model_config))
    throw ConfigError("checkpoint model configurations disagree; retrain with one configuration");

  ModelConfig mc = target_meta.model_config;
  mc.validate();
  if (mc.vocab_size != vocab.size())
    throw ConfigError("checkpoint vocabulary size " + std::to_string(mc.vocab_size) +
                      " does not match vocabulary file (" + std::to_string(vocab.size()) + ")");

  TargetClassifier target(mc);
  Encoder enc(mc);
  Decoder dec(mc);
  LatentClassifier lat(mc);
  load_checkpoint(detail::out_path(rc, "target.ckpt"), target.parameters());
  std::vector<nn::Parameter*> ae_params = enc.parameters();
  for (auto* p : dec.parameters()) ae_params.push_back(p);
  load_checkpoint(detail::out_path(rc, "autoencoder.ckpt"), ae_params);
  load_checkpoint(detail::out_path(rc, "latent.ckpt"), lat.parameters());

  detail::CorpusBundle corpus = detail::load_corpus(rc);
  std::vector<LabeledExample> eval_set = encode_corpus(corpus.val_raw, vocab, mc.max_seq_len);
  if (rc.attack_limit > 0 && static_cast<std::size_t>(rc.attack_limit) < eval_set.size())
    eval_set.resize(static_cast<std::size_t>(rc.attack_limit));

  AttackConfig ac = detail::effective_attack_config(rc);
  AttackKind kind = attack_kind_from_string(rc.attack_kind);
  EvalRun run = evaluate_attack(eval_set, enc, dec, target, &lat, kind, ac, vocab);
  TransitionMatrix matrix = build_transition_matrix(run.results, corpus.classes);

  write_results_jsonl(detail::out_path(rc, "results.jsonl"), run.results);
  nlohmann::json echo = run_config_echo(rc);
  echo["attack"]["eta"] = ac.eta;  // echo the resolved step size
  detail::write_json(detail::out_path(rc, "attack_summary.json"),
                     nlohmann::json{{"summary", run.summary.to_json()}, {"config", echo}});
  detail::write_text(detail::out_path(rc, "report.md"),
                     render_report(run.summary, matrix, run.results, corpus.classes, rc.report_samples));
  std::cout << run.summary.success_count << "/" << run.summary.valid_count
            << " valid examples flipped (rate " << run.summary.success_rate << "); "
            << run.summary.invalid_reconstruction_count << " invalid reconstructions\n";
  return 0;
}

inline int cmd_report(const RunConfig& rc, const std::string& results_override) {
  detail::ensure_out_dir(rc.out_dir);
  const std::string results_path =
      results_override.empty() ? detail::out_path(rc, "results.jsonl") : results_override;
  std::vector<AttackResult> results = read_results_jsonl(results_path);
  if (results.empty()) throw ConfigError("no results in " + results_path);
  EvalSummary summary = summarize_results(results);
  ClassSet classes = detail::classes_for(rc);
  TransitionMatrix matrix = build_transition_matrix(results, classes);
  detail::write_text(detail::out_path(rc, "report.md"),
                     render_report(summary, matrix, results, classes, rc.report_samples));
  std::cout << "wrote " << detail::out_path(rc, "report.md") << " from " << results_path << "\n";
  return 0;
}

namespace detail {

inline void add_common_options(CLI::App* cmd, RunConfig& rc) {
  cmd->add_option("--config", rc.config_path,
                  "TOML configuration file; flags override its values");
  cmd->add_option("--corpus.kind", rc.corpus_kind, "corpus to use: toy|agnews")
      ->check(CLI::IsMember({"toy", "agnews"}));
  cmd->add_option("--corpus.train_path", rc.train_path, "AG News training CSV");
  cmd->add_option("--corpus.test_path", rc.test_path, "AG News test CSV");
  cmd->add_option("--corpus.toy_seed", rc.toy_seed, "toy corpus generator seed");
  cmd->add_option("--corpus.train_per_class", rc.train_per_class, "toy training samples per class");
  cmd->add_option("--corpus.val_per_class", rc.val_per_class, "toy validation samples per class");
  cmd->add_option("--corpus.train_cap", rc.train_cap, "AG News training rows per class");
  cmd->add_option("--corpus.test_cap", rc.test_cap, "AG News test rows per class");
  cmd->add_option("--vocab.max_size", rc.vocab_max_size, "vocabulary size cap incl. specials");
  cmd->add_option("--model.latent_dim", rc.model.latent_dim);
  cmd->add_option("--model.embed_dim", rc.model.embed_dim);
  cmd->add_option("--model.encoder_hidden", rc.model.encoder_hidden);
  cmd->add_option("--model.decoder_hidden", rc.model.decoder_hidden);
  cmd->add_option("--model.target_hidden_1", rc.model.target_hidden_1);
  cmd->add_option("--model.target_hidden_2", rc.model.target_hidden_2);
  cmd->add_option("--model.max_seq_len", rc.model.max_seq_len);
  cmd->add_option("--model.lambda_balance", rc.model.lambda_balance);
  cmd->add_option("--model.seed", rc.model.seed, "weight initialization seed");
  cmd->add_option("--train_target.batch_size", rc.train_target.batch_size);
  cmd->add_option("--train_target.epochs", rc.train_target.epochs);
  cmd->add_option("--train_target.learning_rate", rc.train_target.learning_rate);
  cmd->add_option("--train_target.seed", rc.train_target.seed);
  cmd->add_option("--train_target.shuffle", rc.train_target.shuffle);
  cmd->add_option("--train_target.clip_norm", rc.train_target.clip_norm);
  cmd->add_option("--train_autoencoder.batch_size", rc.train_autoencoder.batch_size);
  cmd->add_option("--train_autoencoder.epochs", rc.train_autoencoder.epochs);
  cmd->add_option("--train_autoencoder.learning_rate", rc.train_autoencoder.learning_rate);
  cmd->add_option("--train_autoencoder.seed", rc.train_autoencoder.seed);
  cmd->add_option("--train_autoencoder.shuffle", rc.train_autoencoder.shuffle);
  cmd->add_option("--train_autoencoder.clip_norm", rc.train_autoencoder.clip_norm);
  cmd->add_option("--attack.epsilon", rc.attack.epsilon);
  cmd->add_option("--attack.eta", rc.attack.eta);
  cmd->add_option("--attack.max_iters", rc.attack.max_iters);
  cmd->add_option("--attack.kind", rc.attack_kind)->check(CLI::IsMember({"fgsm", "pgd"}));
  cmd->add_option("--attack.gradient_mode", rc.gradient_mode)
      ->check(CLI::IsMember({"soft", "surrogate"}));
  cmd->add_option("--attack.seed", rc.attack.seed);
  cmd->add_option("--attack.limit", rc.attack_limit, "attack only the first N evaluation examples");
  cmd->add_option("--output.dir", rc.out_dir);
  cmd->add_option("--output.samples", rc.report_samples, "sample pairs shown in the report");
  cmd->add_option("--out", rc.out_dir, "output directory (same as --output.dir)");
}

/**
 * Expands --config FILE into ordinary command-line arguments.
 *
 * The library only applies config files to the top-level command, so the
 * file is read up front and each entry is spliced in as "--section.key value"
 * right after the subcommand token. Keys the user already passed as flags are
 * skipped, and later arguments win ties, so explicit flags always override
 * the file.
 */
inline std::vector<std::string> expand_config_args(int argc, const char* const* argv) {
  std::vector<std::string> args(argv + (argc > 0 ? 1 : 0), argv + argc);

  std::string config_path;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size())
      config_path = args[i + 1];
    else if (args[i].rfind("--config=", 0) == 0)
      config_path = args[i].substr(std::string("--config=").size());
  }
  if (config_path.empty()) return args;

  std::ifstream in(config_path);
  if (!in) throw ConfigError("cannot open config file " + config_path);
  std::vector<CLI::ConfigItem> items;
  try {
    items = CLI::ConfigTOML().from_config(in);
  } catch (const std::exception& e) {
    throw ConfigError("config file " + config_path + ": " + e.what());
  }

  auto given_as_flag = [&args](const std::string& flag) {
    for (const std::string& a : args)
      if (a == flag || a.rfind(flag + "=", 0) == 0) return true;
    return false;
  };

  std::vector<std::string> file_args;
  for (const CLI::ConfigItem& item : items) {
    if (item.name == "++" || item.name == "--") continue;  // section markers
    const std::string flag = "--" + item.fullname();
    if (given_as_flag(flag)) continue;
    file_args.push_back(flag);
    file_args.insert(file_args.end(), item.inputs.begin(), item.inputs.end());
  }

  auto sub = std::find_if(args.begin(), args.end(),
                          [](const std::string& a) { return a.rfind("-", 0) != 0; });
  if (sub != args.end()) args.insert(sub + 1, file_args.begin(), file_args.end());
  return args;
}

}  // namespace detail

inline int run(int argc, const char* const* argv) {
  CLI::App app{"latent-space adversarial attacks on LSTM text classifiers"};
  app.require_subcommand(1);
  RunConfig rc;

  CLI::App* build_vocab = app.add_subcommand("build-vocab", "build the vocabulary file");
  CLI::App* train_target = app.add_subcommand("train-target", "train the target classifier");
  CLI::App* train_ae = app.add_subcommand("train-autoencoder",
                                          "jointly train encoder, decoder, and latent classifier");
  CLI::App* attack = app.add_subcommand("attack", "run the attack over the evaluation split");
  CLI::App* report = app.add_subcommand("report", "regenerate the report from a results file");
  for (CLI::App* cmd : {build_vocab, train_target, train_ae, attack, report})
    detail::add_common_options(cmd, rc);

  std::uint64_t seed_flag = 0;
  CLI::Option* vocab_seed = build_vocab->add_option("--seed", seed_flag, "toy corpus seed");
  CLI::Option* target_seed = train_target->add_option("--seed", seed_flag, "training seed");
  CLI::Option* ae_seed = train_ae->add_option("--seed", seed_flag, "training seed");
  CLI::Option* attack_seed = attack->add_option("--seed", seed_flag, "attack seed");

  double epsilon_flag = 0.0, eta_flag = 0.0;
  int max_iters_flag = 0;
  std::string attack_flag, mode_flag;
  CLI::Option* eps_opt = attack->add_option("--epsilon", epsilon_flag, "l-infinity bound");
  CLI::Option* eta_opt = attack->add_option("--eta", eta_flag, "PGD step size");
  CLI::Option* iters_opt = attack->add_option("--max-iters", max_iters_flag, "PGD iteration cap");
  CLI::Option* kind_opt = attack->add_option("--attack", attack_flag, "attack: fgsm|pgd")
                              ->check(CLI::IsMember({"fgsm", "pgd"}));
  CLI::Option* mode_opt =
      attack->add_option("--gradient-mode", mode_flag, "latent gradient mode: soft|surrogate")
          ->check(CLI::IsMember({"soft", "surrogate"}));

  std::string results_override;
  report->add_option("--results", results_override, "results JSONL file to summarize");

  std::vector<std::string> args;
  try {
    args = detail::expand_config_args(argc, argv);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  if (argc > 0) app.name(argv[0]);
  std::reverse(args.begin(), args.end());  // the vector overload wants them reversed
  try {
    app.parse(std::move(args));
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  if (vocab_seed->count() > 0) rc.toy_seed = seed_flag;
  if (target_seed->count() > 0) rc.train_target.seed = seed_flag;
  if (ae_seed->count() > 0) rc.train_autoencoder.seed = seed_flag;
  if (attack_seed->count() > 0) rc.attack.seed = seed_flag;
  if (eps_opt->count() > 0) rc.attack.epsilon = epsilon_flag;
  if (eta_opt->count() > 0) rc.attack.eta = eta_flag;
  if (iters_opt->count() > 0) rc.attack.max_iters = max_iters_flag;
  if (kind_opt->count() > 0) rc.attack_kind = attack_flag;
  if (mode_opt->count() > 0) rc.gradient_mode = mode_flag;

  try {
    if (build_vocab->parsed()) return cmd_build_vocab(rc);
    if (train_target->parsed()) return cmd_train_target(rc);
    if (train_ae->parsed()) return cmd_train_autoencoder(rc);
    if (attack->parsed()) return cmd_attack(rc);
    if (report->parsed()) return cmd_report(rc, results_override);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const NumericalError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

}  // namespace advtext::cli
