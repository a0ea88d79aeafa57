/**
 * @file acceptance.cpp
 * @brief Release gate: one pass/fail line per numbered criterion.
 *
 * Criteria are computed in dependency order (standalone checks first, then
 * the trained toy pipeline and everything that consumes it) but reported in
 * numeric order on stdout. Progress goes to stderr. Exit code 0 iff every
 * criterion passes.
 */
#include <unistd.h>

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "advtext/attacks.hpp"
#include "advtext/cli_app.hpp"
#include "advtext/corpus.hpp"
#include "advtext/evaluation.hpp"
#include "advtext/models.hpp"
#include "advtext/training.hpp"
#include "advtext/vocab.hpp"

using namespace advtext;
namespace fs = std::filesystem;

namespace {

// ---------------------------------------------------------------------------
// Tuned settings for the joint-training gate (criterion 4). The learning-rate
// schedule is a step decay executed as successive training calls on the same
// models; the epoch total stays within the 200-epoch budget.
struct JointChunk {
  int epochs;
  double lr;
};
const std::vector<JointChunk> kJointSchedule = {{60, 5e-3}, {60, 2e-3}, {40, 1e-3}, {40, 5e-4}};
constexpr int kJointBatch = 8;
constexpr double kJointClip = 5.0;

ModelConfig pipeline_config(int vocab_size) {
  ModelConfig mc;
  mc.vocab_size = vocab_size;
  mc.embed_dim = 48;
  mc.encoder_hidden = 64;
  mc.decoder_hidden = 64;
  mc.latent_dim = 128;
  mc.target_hidden_1 = 128;
  mc.target_hidden_2 = 64;
  mc.num_classes = 4;
  mc.max_seq_len = 16;
  mc.lambda_balance = 1.0;
  mc.seed = 1;
  return mc;
}
// ---------------------------------------------------------------------------

struct Outcome {
  bool pass = false;
  std::string detail;
  double seconds = 0.0;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(const char* format, ...) {
  char buf[512];
  va_list args;
  va_start(args, format);
  std::vsnprintf(buf, sizeof(buf), format, args);
  va_end(args);
  return buf;
}

void progress(const std::string& msg) { std::fprintf(stderr, "[acceptance] %s\n", msg.c_str()); }

/// Everything the pipeline-dependent criteria share: the toy corpus, its
/// vocabulary, and the four trained networks.
struct Pipeline {
  std::vector<LabeledExample> train;  // 4 x 200
  std::vector<LabeledExample> val;    // 4 x 50
  std::optional<Vocabulary> vocab;
  ModelConfig mc;
  std::optional<Encoder> enc;
  std::optional<Decoder> dec;
  std::optional<LatentClassifier> lat;
  std::optional<TargetClassifier> target;
};

/// One recorded attack run: the results file plus the library-side summary
/// and matrix it must agree with under the independent recount.
struct RecordedRun {
  std::string name;
  std::string path;
  EvalSummary summary;
  TransitionMatrix matrix;
};

Pipeline build_pipeline_corpus() {
  Pipeline p;
  ToySplit split = toy_split(7, 200, 50);
  std::vector<std::string> texts;
  texts.reserve(split.train.size());
  for (const auto& [text, label] : split.train) texts.push_back(text);
  p.vocab = Vocabulary::build(texts, 200);
  p.mc = pipeline_config(p.vocab->size());
  p.train = encode_corpus(split.train, *p.vocab, p.mc.max_seq_len);
  p.val = encode_corpus(split.val, *p.vocab, p.mc.max_seq_len);
  return p;
}

// Criterion 1: FGSM perturbations land exactly on the {-eps, 0, +eps}
// lattice, with 0 exactly where the gradient coordinate is 0.
Outcome criterion1() {
  const auto t0 = std::chrono::steady_clock::now();
  const double eps = 0.05;
  const int dim = 128;
  Rng rng(20240501);
  int checked = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    Vector z(dim), grad(dim);
    for (int i = 0; i < dim; ++i) {
      z[i] = rng.uniform(-2.0, 2.0);
      grad[i] = rng.below(5) == 0 ? 0.0 : rng.uniform(-1.0, 1.0);
    }
    const Vector delta = fgsm_delta(grad, eps);
    for (int i = 0; i < dim; ++i) {
      const double d = delta[i];
      const bool ok = grad[i] == 0.0 ? d == 0.0 : (grad[i] > 0.0 ? d == eps : d == -eps);
      if (!ok)
        return {false,
                fmt("trial %d coordinate %d: grad=%a delta=%a is off the lattice", trial, i,
                    grad[i], d),
                seconds_since(t0)};
    }
    ++checked;
  }
  const double secs = seconds_since(t0);
  return {secs < 1.0, fmt("%d random (z, grad) pairs at dim %d, every delta in {-0.05, 0, +0.05}",
                          checked, dim),
          secs};
}

// Criterion 3: soft and surrogate latent gradients vs central finite
// differences on a small model; max coordinate relative error < 1e-4.
Outcome criterion3() {
  const auto t0 = std::chrono::steady_clock::now();
  ModelConfig mc;
  mc.vocab_size = 30;
  mc.latent_dim = 8;
  mc.embed_dim = 10;
  mc.encoder_hidden = 12;
  mc.decoder_hidden = 12;
  mc.target_hidden_1 = 12;
  mc.target_hidden_2 = 8;
  mc.num_classes = 4;
  mc.max_seq_len = 12;
  mc.seed = 5;
  Encoder enc(mc);
  Decoder dec(mc);
  LatentClassifier lat(mc);
  TargetClassifier target(mc);

  const std::vector<int> tokens = {7, 9, 4, 11, 2};
  const int label = 1;
  const Vector z = enc.encode(tokens);
  const double h = 1e-5;
  double worst = 0.0;

  const std::vector<int> path = dec.decode_greedy(z, mc.max_seq_len);
  if (path.empty()) return {false, "greedy decode produced an empty path", seconds_since(t0)};
  const Vector got_soft = latent_gradient(z, label, dec, target, &lat, GradientMode::soft);
  for (int i = 0; i < z.size(); ++i) {
    Vector zp = z, zm = z;
    zp[i] += h;
    zm[i] -= h;
    const double fd =
        (soft_attack_loss(zp, path, label, dec, target) - soft_attack_loss(zm, path, label, dec, target)) /
        (2.0 * h);
    worst = std::max(worst, std::abs(got_soft[i] - fd) /
                                std::max({std::abs(fd), std::abs(got_soft[i]), 1e-4}));
  }

  const Vector got_sur = latent_gradient(z, label, dec, target, &lat, GradientMode::surrogate);
  for (int i = 0; i < z.size(); ++i) {
    Vector zp = z, zm = z;
    zp[i] += h;
    zm[i] -= h;
    const double fd = (surrogate_attack_loss(zp, label, lat) - surrogate_attack_loss(zm, label, lat)) /
                      (2.0 * h);
    worst = std::max(worst, std::abs(got_sur[i] - fd) /
                                std::max({std::abs(fd), std::abs(got_sur[i]), 1e-4}));
  }

  const double secs = seconds_since(t0);
  return {worst < 1e-4 && secs < 10.0,
          fmt("both modes vs central differences (step 1e-5): max relative error %.3g", worst), secs};
}

// Criterion 4: joint training on the toy corpus reaches 95% positional
// reconstruction accuracy and 95% latent-classifier accuracy within 200
// epochs and five minutes.
Outcome criterion4(Pipeline& p) {
  const auto t0 = std::chrono::steady_clock::now();
  p.enc.emplace(p.mc);
  p.dec.emplace(p.mc);
  p.lat.emplace(p.mc);

  int epochs_done = 0;
  double recon_acc = 0.0, lat_acc = 0.0, final_loss = 0.0;
  for (std::size_t ci = 0; ci < kJointSchedule.size(); ++ci) {
    TrainConfig tc;
    tc.batch_size = kJointBatch;
    tc.epochs = kJointSchedule[ci].epochs;
    tc.learning_rate = kJointSchedule[ci].lr;
    tc.clip_norm = kJointClip;
    tc.seed = ci;
    TrainReport rep = train_autoencoder(p.train, *p.enc, *p.dec, *p.lat, tc, p.mc.lambda_balance);
    epochs_done += rep.epochs;
    recon_acc = rep.reconstruction_accuracy;
    lat_acc = rep.latent_accuracy;
    final_loss = rep.epoch_reconstruction_loss.back();
    progress(fmt("criterion 4: epoch %d, reconstruction loss %.4f, accuracy %.3f / %.3f (%.0f s)",
                 epochs_done, final_loss, recon_acc, lat_acc, seconds_since(t0)));
    if (recon_acc >= 0.95 && lat_acc >= 0.95) break;
  }

  const double secs = seconds_since(t0);
  const bool pass = recon_acc >= 0.95 && lat_acc >= 0.95 && epochs_done <= 200 && secs < 300.0;
  return {pass,
          fmt("reconstruction accuracy %.1f%%, latent accuracy %.1f%% after %d epochs (lambda=1, "
              "vocab %d)",
              100.0 * recon_acc, 100.0 * lat_acc, epochs_done, p.mc.vocab_size),
          secs};
}

// Criterion 5: target classifier accuracy gates, toy corpus and (when the
// CSV files are available) the AG News subset.
Outcome criterion5(Pipeline& p) {
  const auto t0 = std::chrono::steady_clock::now();
  p.target.emplace(p.mc);

  // Toy gate: 400 train / 200 val within 30 epochs.
  std::vector<LabeledExample> toy_train;
  for (int c = 0; c < 4; ++c)
    for (int i = 0; i < 100; ++i) toy_train.push_back(p.train[static_cast<std::size_t>(c * 200 + i)]);
  TrainConfig tc;
  tc.batch_size = 16;
  tc.epochs = 30;
  tc.learning_rate = 3e-3;
  tc.clip_norm = 5.0;
  tc.seed = 1;
  TrainReport rep = train_target_classifier(toy_train, p.val, *p.target, tc);
  const bool toy_ok = rep.val_accuracy >= 0.95;
  std::string detail = fmt("toy val accuracy %.1f%% after %d epochs", 100.0 * rep.val_accuracy,
                           rep.epochs);

  // AG News gate: 4x2000 train, 4x500 test, within 10 epochs.
  std::string train_csv, test_csv;
  if (const char* e = std::getenv("ADVTEXT_AGNEWS_TRAIN")) train_csv = e;
  if (const char* e = std::getenv("ADVTEXT_AGNEWS_TEST")) test_csv = e;
  if (train_csv.empty() || test_csv.empty()) {
    const std::string base = std::string(ADVTEXT_SOURCE_DIR) + "/data/ag_news/";
    if (fs::exists(base + "train.csv") && fs::exists(base + "test.csv")) {
      train_csv = base + "train.csv";
      test_csv = base + "test.csv";
    } else if (fs::exists("data/ag_news/train.csv") && fs::exists("data/ag_news/test.csv")) {
      train_csv = "data/ag_news/train.csv";
      test_csv = "data/ag_news/test.csv";
    }
  }

  if (train_csv.empty()) {
    return {false,
            detail + "; AG News gate not evaluated: no CSV files found (set ADVTEXT_AGNEWS_TRAIN "
                     "and ADVTEXT_AGNEWS_TEST or provide data/ag_news/{train,test}.csv)",
            seconds_since(t0)};
  }

  ClassSet classes = agnews_classes();
  std::vector<RawRecord> raw_train = ingest_agnews(train_csv, classes, 2000);
  std::vector<RawRecord> raw_test = ingest_agnews(test_csv, classes, 500);
  std::vector<std::string> texts;
  for (const auto& [text, label] : raw_train) texts.push_back(text);
  Vocabulary vocab = Vocabulary::build(texts, 2000);

  ModelConfig amc;
  amc.vocab_size = vocab.size();
  amc.embed_dim = 64;
  amc.target_hidden_1 = 128;
  amc.target_hidden_2 = 64;
  amc.num_classes = 4;
  amc.max_seq_len = 64;
  amc.seed = 1;
  std::vector<LabeledExample> ag_train = encode_corpus(raw_train, vocab, amc.max_seq_len);
  std::vector<LabeledExample> ag_test = encode_corpus(raw_test, vocab, amc.max_seq_len);

  TargetClassifier ag_model(amc);
  TrainConfig atc;
  atc.batch_size = 32;
  atc.epochs = 10;
  atc.learning_rate = 3e-3;
  atc.clip_norm = 5.0;
  atc.seed = 1;
  TrainReport ag_rep = train_target_classifier(ag_train, ag_test, ag_model, atc);
  detail += fmt("; AG News val accuracy %.1f%% after %d epochs", 100.0 * ag_rep.val_accuracy,
                ag_rep.epochs);

  const double secs = seconds_since(t0);
  return {toy_ok && ag_rep.val_accuracy >= 0.80 && secs < 900.0, detail, secs};
}

// Criterion 2: every PGD iterate stays inside the l-infinity ball, exactly.
Outcome criterion2(Pipeline& p, std::vector<RecordedRun>& runs, const std::string& run_dir) {
  const auto t0 = std::chrono::steady_clock::now();
  AttackConfig ac;
  ac.epsilon = 0.5;
  ac.eta = 0.125;
  ac.max_iters = 10;
  ac.gradient_mode = GradientMode::soft;

  const int max_len = p.mc.max_seq_len;
  std::vector<LabeledExample> sample(p.val.begin(), p.val.begin() + 100);
  long audited = 0;
  bool contained = true;
  std::string violation;
  for (const LabeledExample& x : sample) {
    const Vector z0 = p.enc->encode(x.tokens);
    LatentPredicate flipped = [&](const Vector& cand) {
      return p.target->predict(p.dec->decode_greedy(cand, max_len)) != x.label;
    };
    PgdObserver audit = [&](int iter, const Vector& delta, const Vector& z) {
      for (int i = 0; i < delta.size(); ++i) {
        if (std::abs(delta[i]) > ac.epsilon || z[i] != z0[i] + delta[i]) {
          contained = false;
          violation = fmt("iteration %d coordinate %d: delta=%a", iter, i, delta[i]);
        }
      }
      ++audited;
    };
    pgd_attack(z0, x.label, *p.dec, *p.target, &*p.lat, ac, flipped, audit);
  }

  // The same configuration through the evaluation front end, recorded for
  // the criterion-7 recount.
  EvalRun run = evaluate_attack(sample, *p.enc, *p.dec, *p.target, &*p.lat, AttackKind::pgd, ac,
                                *p.vocab);
  const std::string path = run_dir + "/pgd_criterion2.jsonl";
  write_results_jsonl(path, run.results);
  runs.push_back({"pgd eps=0.5", path, run.summary, build_transition_matrix(run.results, toy_classes())});

  const double secs = seconds_since(t0);
  if (!contained) return {false, "ball violation at " + violation, secs};
  return {secs < 60.0,
          fmt("100 attacks (eps=0.5, eta=0.125, 10 iters), %ld iterates all inside the ball; "
              "%d/%d valid flipped",
              audited, run.summary.success_count, run.summary.valid_count),
          secs};
}

// Criterion 6: FGSM over the epsilon sweep reaches a 10% success rate at
// some epsilon, and epsilon=0 never succeeds.
Outcome criterion6(Pipeline& p, std::vector<RecordedRun>& runs, const std::string& run_dir) {
  const auto t0 = std::chrono::steady_clock::now();
  double best_rate = 0.0, best_eps = 0.0;
  bool any_valid = false;
  std::string sweep;
  for (double eps : {0.05, 0.1, 0.25, 0.5}) {
    AttackConfig ac;
    ac.epsilon = eps;
    ac.gradient_mode = GradientMode::soft;
    EvalRun run =
        evaluate_attack(p.val, *p.enc, *p.dec, *p.target, &*p.lat, AttackKind::fgsm, ac, *p.vocab);
    const std::string path = run_dir + fmt("/fgsm_eps_%g.jsonl", eps);
    write_results_jsonl(path, run.results);
    runs.push_back(
        {fmt("fgsm eps=%g", eps), path, run.summary, build_transition_matrix(run.results, toy_classes())});
    if (run.summary.valid_count > 0) any_valid = true;
    if (run.summary.success_rate > best_rate) {
      best_rate = run.summary.success_rate;
      best_eps = eps;
    }
    sweep += fmt("%s%g: %.1f%%", sweep.empty() ? "" : ", ", eps, 100.0 * run.summary.success_rate);
  }

  AttackConfig zero;
  zero.epsilon = 0.0;
  zero.gradient_mode = GradientMode::soft;
  EvalRun zero_run =
      evaluate_attack(p.val, *p.enc, *p.dec, *p.target, &*p.lat, AttackKind::fgsm, zero, *p.vocab);
  const std::string zero_path = run_dir + "/fgsm_eps_0.jsonl";
  write_results_jsonl(zero_path, zero_run.results);
  runs.push_back({"fgsm eps=0", zero_path, zero_run.summary,
                  build_transition_matrix(zero_run.results, toy_classes())});

  const double secs = seconds_since(t0);
  const bool pass = any_valid && best_rate >= 0.10 && zero_run.summary.success_count == 0 &&
                    secs < 120.0;
  return {pass,
          fmt("success rates {%s}; best %.1f%% at eps=%g; eps=0 flips %d", sweep.c_str(),
              100.0 * best_rate, best_eps, zero_run.summary.success_count),
          secs};
}

// Criterion 7: a brute-force recount of the raw JSON-lines files reproduces
// every summary count, the success rate, and every matrix cell exactly.
Outcome criterion7(const std::vector<RecordedRun>& runs) {
  const auto t0 = std::chrono::steady_clock::now();
  if (runs.empty()) return {false, "no recorded attack runs to recount", seconds_since(t0)};
  const int n = toy_classes().count();
  for (const RecordedRun& run : runs) {
    int total = 0, success = 0, invalid = 0, noflip = 0;
    double linf_sum = 0.0;
    std::vector<std::vector<int>> flips(static_cast<std::size_t>(n), std::vector<int>(static_cast<std::size_t>(n), 0));
    std::vector<int> valid(static_cast<std::size_t>(n), 0);

    std::ifstream in(run.path);
    if (!in) return {false, "cannot reopen " + run.path, seconds_since(t0)};
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      const nlohmann::json j = nlohmann::json::parse(line);
      ++total;
      const std::string status = j.at("status").get<std::string>();
      const int label = j.at("label").get<int>();
      double linf = 0.0;
      for (double d : j.at("delta").get<std::vector<double>>()) linf = std::max(linf, std::abs(d));
      linf_sum += linf;
      if (status == "invalid_reconstruction") {
        ++invalid;
      } else {
        ++valid[static_cast<std::size_t>(label)];
        if (status == "success") {
          ++success;
          ++flips[static_cast<std::size_t>(label)][static_cast<std::size_t>(j.at("adversarial_pred").get<int>())];
        } else {
          ++noflip;
        }
      }
    }

    const EvalSummary& s = run.summary;
    const double rate =
        (success + noflip) > 0 ? static_cast<double>(success) / static_cast<double>(success + noflip) : 0.0;
    const double mean_linf = total > 0 ? linf_sum / static_cast<double>(total) : 0.0;
    if (total != s.total || success != s.success_count || invalid != s.invalid_reconstruction_count ||
        noflip != s.no_flip_count || success + noflip != s.valid_count || rate != s.success_rate ||
        mean_linf != s.mean_delta_linf)
      return {false, "summary recount mismatch for " + run.name, seconds_since(t0)};

    for (int i = 0; i < n; ++i) {
      if (valid[static_cast<std::size_t>(i)] != run.matrix.valid_counts[static_cast<std::size_t>(i)])
        return {false, fmt("valid-count recount mismatch for %s row %d", run.name.c_str(), i),
                seconds_since(t0)};
      for (int j = 0; j < n; ++j) {
        const double cell =
            valid[static_cast<std::size_t>(i)] > 0
                ? 100.0 * static_cast<double>(flips[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)]) /
                      static_cast<double>(valid[static_cast<std::size_t>(i)])
                : 0.0;
        if (cell != run.matrix.percentages[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)])
          return {false, fmt("matrix recount mismatch for %s cell (%d, %d)", run.name.c_str(), i, j),
                  seconds_since(t0)};
      }
    }
  }
  return {true, fmt("%zu recorded runs recounted from raw JSON lines with zero tolerance", runs.size()),
          seconds_since(t0)};
}

// Criterion 8: the transition-matrix renderer reproduces the published
//-values row layout exactly (values fed in, not recomputed).
Outcome criterion8() {
  const auto t0 = std::chrono::steady_clock::now();
  const ClassSet classes{{"World", "Sport", "Business", "Sci/Tech"}};
  TransitionMatrix m;
  m.percentages = {{0.0, 2.4, 6.4, 6.4},
                   {27.7, 0.0, 0.0, 0.7},
                   {9.8, 0.7, 0.0, 14.9},
                   {14.5, 0.3, 18.24, 0.0}};
  m.valid_counts = {1000, 1000, 1000, 1000};
  const std::string rendered = format_transition_matrix(m, classes);

  auto squeeze = [](const std::string& s) {
    std::string out;
    bool space = false;
    for (char c : s) {
      if (c == ' ' || c == '\t') {
        space = true;
        continue;
      }
      if (space && !out.empty()) out += ' ';
      space = false;
      out += c;
    }
    return out;
  };

  std::istringstream lines(rendered);
  std::string line;
  while (std::getline(lines, line)) {
    if (squeeze(line) == "Sport | 27.7% | - | 0% | 0.7%")
      return {true, "rendered row matches \"Sport | 27.7% | - | 0% | 0.7%\"", seconds_since(t0)};
  }
  return {false, "no rendered row matches \"Sport | 27.7% | - | 0% | 0.7%\"; got: " + rendered,
          seconds_since(t0)};
}

// Criterion 9: repeating every CLI command with the same configuration
// produces byte-identical machine-readable artifacts.
Outcome criterion9(const std::string& run_dir) {
  const auto t0 = std::chrono::steady_clock::now();
  auto run_cli = [](std::vector<std::string> args) {
    std::vector<std::string> owned = {"advtext"};
    for (auto& a : args) owned.push_back(std::move(a));
    std::vector<const char*> argv;
    argv.reserve(owned.size());
    for (const std::string& s : owned) argv.push_back(s.c_str());
    return cli::run(static_cast<int>(argv.size()), argv.data());
  };

  auto pipeline_into = [&](const std::string& out) {
    const std::vector<std::string> base = {
        "--corpus.train_per_class", "6", "--corpus.val_per_class", "3",
        "--vocab.max_size", "120",
        "--model.latent_dim", "8", "--model.embed_dim", "10",
        "--model.encoder_hidden", "12", "--model.decoder_hidden", "12",
        "--model.target_hidden_1", "12", "--model.target_hidden_2", "8",
        "--model.max_seq_len", "14",
        "--out", out};
    auto with = [&](std::vector<std::string> extra) {
      std::vector<std::string> all = extra;
      all.insert(all.end(), base.begin(), base.end());
      return run_cli(all);
    };
    if (with({"build-vocab"}) != 0) return false;
    if (with({"train-target", "--train_target.epochs", "2", "--train_target.batch_size", "4"}) != 0)
      return false;
    if (with({"train-autoencoder", "--train_autoencoder.epochs", "2",
              "--train_autoencoder.batch_size", "4"}) != 0)
      return false;
    if (with({"attack", "--attack", "pgd", "--epsilon", "0.25", "--max-iters", "3"}) != 0)
      return false;
    if (with({"report"}) != 0) return false;
    return true;
  };

  const std::string dir_a = run_dir + "/det_a";
  const std::string dir_b = run_dir + "/det_b";
  if (!pipeline_into(dir_a) || !pipeline_into(dir_b))
    return {false, "a CLI command failed", seconds_since(t0)};

  auto read_bytes = [](const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  };

  int compared = 0;
  for (const char* name :
       {"vocab.txt", "vocab.meta.json", "target.ckpt", "target.ckpt.meta.json",
        "train_target_report.json", "autoencoder.ckpt", "autoencoder.ckpt.meta.json", "latent.ckpt",
        "latent.ckpt.meta.json", "train_autoencoder_report.json", "results.jsonl",
        "attack_summary.json", "report.md"}) {
    const std::string a = dir_a + "/" + name;
    const std::string b = dir_b + "/" + name;
    if (!fs::exists(a) || !fs::exists(b))
      return {false, fmt("missing artifact %s", name), seconds_since(t0)};
    if (read_bytes(a) != read_bytes(b))
      return {false, fmt("artifact %s differs between identical runs", name), seconds_since(t0)};
    ++compared;
  }
  return {true, fmt("5 commands repeated; %d artifacts byte-identical", compared),
          seconds_since(t0)};
}

}  // namespace

int main() {
  std::array<Outcome, 10> results;
  auto guarded = [&](int n, const char* label, auto&& fn) {
    progress(fmt("running criterion %d (%s)", n, label));
    try {
      results[static_cast<std::size_t>(n)] = fn();
    } catch (const std::exception& e) {
      results[static_cast<std::size_t>(n)] = {false, std::string("exception: ") + e.what(), 0.0};
    }
  };

  const std::string run_dir =
      (fs::temp_directory_path() / fmt("advtext-acceptance-%d", static_cast<int>(::getpid()))).string();
  fs::create_directories(run_dir);

  Pipeline p = build_pipeline_corpus();
  std::vector<RecordedRun> runs;

  guarded(1, "fgsm exactness", criterion1);
  guarded(3, "gradient fidelity", criterion3);
  guarded(8, "matrix format", criterion8);
  guarded(4, "joint training", [&] { return criterion4(p); });
  guarded(5, "target classifier", [&] { return criterion5(p); });
  guarded(2, "pgd containment", [&] { return criterion2(p, runs, run_dir); });
  guarded(6, "attack effectiveness", [&] { return criterion6(p, runs, run_dir); });
  guarded(7, "oracle recount", [&] { return criterion7(runs); });
  guarded(9, "cli determinism", [&] { return criterion9(run_dir); });

  int passed = 0;
  for (int n = 1; n <= 9; ++n) {
    const Outcome& o = results[static_cast<std::size_t>(n)];
    std::printf("[criterion %d] %s (%s; %.1f s)\n", n, o.pass ? "PASS" : "FAIL", o.detail.c_str(),
                o.seconds);
    if (o.pass) ++passed;
  }
  std::printf("acceptance: %d/9 criteria passed\n", passed);

  std::error_code ec;
  fs::remove_all(run_dir, ec);
  return passed == 9 ? 0 : 1;
}
