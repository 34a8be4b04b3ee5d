// Acceptance run: one PASS, FAIL or SKIPPED line per criterion.
// Exit status is nonzero iff any criterion fails.

#include "coolkws/config.hpp"
#include "coolkws/dsp.hpp"
#include "coolkws/error.hpp"
#include "coolkws/model.hpp"
#include "coolkws/online.hpp"
#include "coolkws/pipeline.hpp"
#include "coolkws/random.hpp"
#include "coolkws/report.hpp"
#include "coolkws/stream.hpp"

#include "support/fixtures.hpp"
#include "support/gradcheck.hpp"
#include "support/reference_mfcc.hpp"
#include "support/shift_experiment.hpp"

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

using namespace coolkws;

namespace {

enum class Status { pass, fail, skipped };

struct Verdict {
  Status status = Status::fail;
  std::string detail;
};

Verdict verdict(bool ok, std::string detail) { return {ok ? Status::pass : Status::fail, std::move(detail)}; }

std::string fmt(double v, int precision = 4) {
  std::ostringstream s;
  s << std::setprecision(precision) << v;
  return s.str();
}

// ---------------------------------------------------------------- helpers

ModelParams<double> random_params(const ModelShape& shape, std::uint64_t seed) {
  auto p = glorot_init<double>(shape, seed);
  Rng rng(seed ^ 0xABCDu);
  std::uniform_real_distribution<double> u(-0.1, 0.1);
  for (auto* b : {&p.conv_b, &p.dnn_b, &p.out_b}) {
    for (auto& v : *b) v = u(rng);
  }
  return p;
}

Eigen::MatrixXd random_mfcc(std::uint64_t seed) {
  Rng rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  Eigen::MatrixXd x(32, 40);
  for (Eigen::Index k = 0; k < x.size(); ++k) x.data()[k] = g(rng);
  return x;
}

/// Windows whose targets carry a positive offset in the lower coefficients.
std::vector<LabeledWindow> random_windows(int n, std::uint64_t seed, double target_rate) {
  Rng rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  std::bernoulli_distribution is_target(target_rate);
  std::vector<LabeledWindow> out;
  for (int i = 0; i < n; ++i) {
    const bool t = is_target(rng);
    Eigen::MatrixXf x(32, 40);
    for (Eigen::Index k = 0; k < x.size(); ++k) {
      x.data()[k] = static_cast<float>(g(rng) + (t && k % 40 < 20 ? 0.6 : 0.0));
    }
    out.push_back({{x, static_cast<Eigen::Index>(i) * 1600}, t ? BinaryLabel::target : BinaryLabel::non_target});
  }
  return out;
}

/// p(target) = sigmoid(w x + b), Params = (w, b).
struct Logistic {
  using Params = Eigen::Vector2d;
  struct Sample {
    double x = 0.0;
    int y = 0;
  };
  static double p1(const Params& p, double x) { return 1.0 / (1.0 + std::exp(-(p[0] * x + p[1]))); }
  static Eigen::Vector2d probabilities(const Params& p, const Sample& s) {
    const double q = p1(p, s.x);
    return {1.0 - q, q};
  }
  static double loss(const Params& p, std::span<const Sample> batch) {
    double sum = 0.0;
    for (const auto& s : batch) sum += -std::log(std::max(probabilities(p, s)[s.y], 1e-12));
    return sum / static_cast<double>(batch.size());
  }
  static Params descend(const Params& p, std::span<const Sample> batch, double lr) {
    Eigen::Vector2d g = Eigen::Vector2d::Zero();
    for (const auto& s : batch) {
      const double e = p1(p, s.x) - s.y;
      g += Eigen::Vector2d(e * s.x, e);
    }
    return p - lr * g / static_cast<double>(batch.size());
  }
  static bool finite(const Sample& s) { return std::isfinite(s.x); }
  static int label(const Sample& s) { return s.y; }
};

StreamClip tone_clip(BinaryLabel label, Eigen::Index begin, Eigen::Index end, Eigen::Index length) {
  StreamClip c;
  c.clip.samples = fixtures::tone_word(length, begin, end, 500, 900, 0.4);
  c.clip.sample_rate_hz = 16000;
  c.label = label;
  c.extent = {begin, end};
  return c;
}

// ------------------------------------------------------------- criteria

Verdict gradient_correctness() {
  double worst = 0.0;
  std::size_t checked = 0, refined = 0, unresolved = 0, expected = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto p = random_params(ModelShape::shrunken(), 1000 + seed);
    const auto r = gradcheck::check(p, random_mfcc(2000 + seed), static_cast<int>(seed % 2), 1e-4);
    worst = std::max(worst, r.worst_relative);
    checked += r.checked;
    refined += r.refined;
    unresolved += r.unresolved;
    expected += p.parameter_count();
  }
  return verdict(worst < 1e-4 && unresolved == 0 && checked == expected,
                 "20 models, " + std::to_string(checked) + " components, worst relative error " + fmt(worst) +
                     ", " + std::to_string(refined) + " re-probed off a ReLU kink, " +
                     std::to_string(unresolved) + " unresolved");
}

Verdict holdout_non_degradation() {
  bool ok = true;
  double worst_excess = -std::numeric_limits<double>::infinity();
  std::size_t attempts = 0, consolidated = 0, violations = 0;
  const double rates[] = {1e-3, 1e-2, 3e-2, 1e-1, 3e-1};
  for (std::uint64_t k = 0; k < 5; ++k) {
    const auto m0 = glorot_init<float>(ModelShape{}, 300 + k);
    const auto holdout = random_windows(64, 400 + k, 0.5);
    const auto stream = random_windows(1000, 500 + k, 0.2 + 0.1 * static_cast<double>(k));
    OnlineConfig cfg;
    cfg.lr = rates[k];
    const auto r = run_windows(m0, holdout, stream, {{"Clean", 0}}, RunMode::cool, cfg);
    const double l_v = r.log.holdout_baseline;
    const double after = evaluate(r.final_params, std::span<const LabeledWindow>(holdout)).loss;
    worst_excess = std::max(worst_excess, after - l_v);
    ok = ok && after <= l_v + 1e-6;
    for (const auto& d : r.log.decisions) {
      ++attempts;
      if (!d.consolidated) continue;
      ++consolidated;
      if (!(d.l_v_prime <= l_v && d.l_prime < d.l)) ++violations;
    }
  }
  ok = ok && violations == 0;
  return verdict(ok, "5 streams x 1000 windows, " + std::to_string(attempts) + " attempts, " +
                         std::to_string(consolidated) + " consolidated, " + std::to_string(violations) +
                         " gate violations, max(l_v_final - l_v) = " + fmt(worst_excess));
}

Verdict revert_exactness() {
  // Every target window is x_t and every non-target x_n; the hold-out set
  // holds the same two inputs with swapped labels.
  bool ok = true;
  std::size_t attempts = 0, holdout_reverts = 0;
  for (std::uint64_t k = 0; k < 3; ++k) {
    const auto m0 = glorot_init<float>(ModelShape{}, 700 + k);
    const Eigen::MatrixXf xt = random_mfcc(800 + k).cast<float>();
    const Eigen::MatrixXf xn = random_mfcc(900 + k).cast<float>();
    const std::vector<LabeledWindow> holdout{{{xt, 0}, BinaryLabel::non_target}, {{xn, 0}, BinaryLabel::target}};
    Rng rng(1000 + k);
    std::bernoulli_distribution is_target(0.3);
    std::vector<LabeledWindow> stream;
    for (int i = 0; i < 1000; ++i) {
      const bool t = is_target(rng);
      stream.push_back({{t ? xt : xn, static_cast<Eigen::Index>(i) * 1600}, t ? BinaryLabel::target : BinaryLabel::non_target});
    }
    OnlineConfig cfg;
    cfg.lr = 1e-2;
    const auto r = run_windows(m0, holdout, stream, {{"Clean", 0}}, RunMode::cool, cfg);
    for (const auto& d : r.log.decisions) {
      ++attempts;
      holdout_reverts += d.reason == DecisionReason::reverted_holdout ? 1 : 0;
    }
    ok = ok && !r.log.decisions.empty() && r.final_params.bitwise_equal(m0);
  }
  ok = ok && holdout_reverts == attempts;
  return verdict(ok, "3 engineered streams, " + std::to_string(attempts) + " attempts, " +
                         std::to_string(holdout_reverts) + " reverted by the hold-out check, final params " +
                         (ok ? "bitwise equal to M0" : "differ from M0"));
}

Verdict shift_experiment() {
  // Library training and online defaults; mean over three seeds.
  const std::uint64_t seeds[] = {1, 2, 3};
  double frozen = 0.0, naive = 0.0, cool = 0.0, cool_final = 0.0, naive_final = 0.0;
  std::string per_seed;
  for (auto seed : seeds) {
    shift::Settings s;
    s.seed = seed;
    const auto o = shift::run(s);
    frozen += o.accuracy.at(RunMode::frozen) / 3.0;
    naive += o.accuracy.at(RunMode::naive) / 3.0;
    cool += o.accuracy.at(RunMode::cool) / 3.0;
    cool_final += o.final_cumulative.at(RunMode::cool) / 3.0;
    naive_final += o.final_cumulative.at(RunMode::naive) / 3.0;
    per_seed += "\n      seed " + std::to_string(seed) + ": frozen " + fmt(o.accuracy.at(RunMode::frozen), 3) +
                " naive " + fmt(o.accuracy.at(RunMode::naive), 3) + " cool " + fmt(o.accuracy.at(RunMode::cool), 3) +
                ", " + std::to_string(o.consolidated) + "/" + std::to_string(o.attempts) +
                " consolidated, M0 val acc " + fmt(o.m0_val_acc, 3) + ", l_v " + fmt(o.holdout_baseline, 3);
  }
  const bool beats_frozen = cool >= frozen + 0.05;
  const bool beats_naive = cool_final >= naive_final;
  return verdict(beats_frozen && beats_naive,
                 "mean over 3 seeds: cool " + fmt(cool, 3) + " vs frozen " + fmt(frozen, 3) + " (need +0.05: " +
                     (beats_frozen ? "met" : "not met") + "); final cumulative cool " + fmt(cool_final, 3) +
                     " vs naive " + fmt(naive_final, 3) + " (" + (beats_naive ? "met" : "not met") + ")" + per_seed);
}

Verdict full_corpus_gains() {
  const char* config_path = std::getenv("COOLKWS_ACCEPTANCE_CONFIG");
  if (!config_path) return {Status::skipped, "set COOLKWS_ACCEPTANCE_CONFIG to a config with corpus and noise paths"};
  ExperimentConfig cfg = load_config(config_path);
  if (!std::filesystem::is_directory(cfg.gsc_root)) {
    return {Status::skipped, "speech corpus not found at '" + cfg.gsc_root + "'"};
  }
  for (const auto& [scenario, path] : cfg.noise) {
    if (!std::filesystem::exists(path)) return {Status::skipped, "noise for " + scenario + " not found at '" + path + "'"};
  }
  PipelineOptions opt;
  opt.force = true;
  opt.log = &std::cerr;
  const std::vector<std::string> sequential{kSequential};
  const std::vector<RunMode> modes{RunMode::frozen, RunMode::cool};
  prepare_data(cfg, cfg.words, opt);
  pretrain_tasks(cfg, cfg.words, opt);
  build_streams(cfg, cfg.words, sequential, opt);
  run_streams(cfg, cfg.words, sequential, modes, opt);
  write_report(cfg, opt);

  std::ifstream csv(OutputLayout{cfg.output_dir}.report_dir() / "table3.csv");
  std::string line;
  std::getline(csv, line);
  bool all_positive = true;
  double final_gain = std::numeric_limits<double>::quiet_NaN();
  int rows = 0;
  while (std::getline(csv, line)) {
    std::stringstream fields(line);
    std::string scenario, isolated, cumulative;
    std::getline(fields, scenario, ',');
    std::getline(fields, isolated, ',');
    std::getline(fields, cumulative, ',');
    final_gain = std::stod(cumulative);
    all_positive = all_positive && final_gain > 0.0;
    ++rows;
  }
  return verdict(rows == 5 && all_positive && final_gain >= 20.0 && final_gain <= 50.0,
                 std::to_string(cfg.words.size()) + " tasks, " + std::to_string(rows) +
                     " rows, cumulative gains all positive: " + (all_positive ? "yes" : "no") +
                     ", final cumulative gain " + fmt(final_gain) + "%");
}

Verdict mfcc_equivalence() {
  const DspConfig dsp;
  double worst = 0.0;
  Rng rng(61);
  std::uniform_real_distribution<double> amp(0.01, 0.9), hz(60.0, 7500.0);
  for (int i = 0; i < 50; ++i) {
    Eigen::VectorXf x = fixtures::white_noise(16000, amp(rng), rng());
    if (i % 2) x += fixtures::sine(16000, hz(rng), amp(rng));
    const auto got = mfcc_window(x, dsp).mfcc;
    const auto want = reference::mfcc(std::vector<double>(x.data(), x.data() + x.size()), {});
    for (Eigen::Index t = 0; t < got.rows(); ++t) {
      for (Eigen::Index k = 0; k < got.cols(); ++k) {
        const double ref = want[static_cast<std::size_t>(t)][static_cast<std::size_t>(k)];
        worst = std::max(worst, std::abs(static_cast<double>(got(t, k)) - ref) / std::max(std::abs(ref), 1e-6));
      }
    }
  }
  return verdict(worst < 1e-4, "50 signals, worst per-coefficient relative error " + fmt(worst));
}

Verdict snr_fidelity() {
  double worst = 0.0;
  Rng rng(71);
  for (int i = 0; i < 20; ++i) {
    std::vector<StreamClip> clips;
    const int n = std::uniform_int_distribution<int>(2, 8)(rng);
    for (int c = 0; c < n; ++c) {
      const Eigen::Index b = std::uniform_int_distribution<Eigen::Index>(500, 6000)(rng);
      const Eigen::Index e = std::uniform_int_distribution<Eigen::Index>(b + 2000, 15500)(rng);
      clips.push_back(tone_clip(c % 3 ? BinaryLabel::non_target : BinaryLabel::target, b, e, 16000));
    }
    const auto clean = concat_with_labels(clips, StreamConfig{});
    AudioClip noise;
    noise.samples = fixtures::white_noise(std::uniform_int_distribution<Eigen::Index>(3000, 40000)(rng), 0.3, rng());
    noise.sample_rate_hz = 16000;
    const auto mixed = mix_noise(clean, noise, 25.0, rng());
    const Eigen::VectorXf noise_part = mixed.stream.samples - clean.samples;
    const double snr = 20.0 * std::log10(rms(clean.samples) / rms(noise_part));
    worst = std::max(worst, std::abs(snr - 25.0));
  }
  return verdict(worst <= 0.1, "20 mixes, worst |measured - 25 dB| = " + fmt(worst) + " dB");
}

Verdict labeling_oracle() {
  Rng rng(81);
  std::size_t windows = 0, mismatches = 0, positives = 0;
  for (int trial = 0; trial < 100; ++trial) {
    StreamConfig cfg;
    cfg.pad = std::uniform_int_distribution<Eigen::Index>(0, 9000)(rng);
    std::vector<StreamClip> clips;
    const int n = std::uniform_int_distribution<int>(1, 6)(rng);
    for (int i = 0; i < n; ++i) {
      const Eigen::Index len = std::uniform_int_distribution<Eigen::Index>(4000, 16000)(rng);
      const Eigen::Index b = std::uniform_int_distribution<Eigen::Index>(0, len - 1)(rng);
      const Eigen::Index e = std::uniform_int_distribution<Eigen::Index>(b + 1, len)(rng);
      const bool target = std::bernoulli_distribution(0.6)(rng);
      clips.push_back(tone_clip(target ? BinaryLabel::target : BinaryLabel::non_target, b, e, len));
    }
    const auto s = concat_with_labels(clips, cfg);

    // Exhaustive: every window against every target, sample by sample.
    std::vector<WordExtent> words;
    Eigen::Index at = 0;
    for (const auto& c : clips) {
      if (c.label == BinaryLabel::target) words.push_back({at + cfg.pad + c.extent.begin, at + cfg.pad + c.extent.end});
      at += c.clip.size() + 2 * cfg.pad;
    }
    std::size_t expected_windows = 0;
    for (Eigen::Index o = 0; o + cfg.window_len <= at; o += cfg.hop, ++expected_windows) {
      bool hit = false;
      for (const auto& w : words) {
        Eigen::Index inside = 0;
        for (Eigen::Index x = w.begin; x < w.end; ++x) inside += (x >= o && x < o + cfg.window_len) ? 1 : 0;
        hit = hit || 10 * inside >= 8 * w.length();
      }
      positives += hit ? 1 : 0;
      const auto idx = static_cast<std::size_t>(o / cfg.hop);
      if (idx >= s.windows.size() || s.windows[idx].origin != o || (s.windows[idx].label == BinaryLabel::target) != hit) {
        ++mismatches;
      }
    }
    if (expected_windows != s.windows.size()) ++mismatches;
    windows += expected_windows;
  }
  return verdict(mismatches == 0, "100 layouts, " + std::to_string(windows) + " windows (" +
                                      std::to_string(positives) + " positive), " + std::to_string(mismatches) +
                                      " mismatches");
}

Verdict report_arithmetic() {
  struct Cell {
    const char* scenario;
    double base, cool, printed;
  };
  const Cell cells[] = {{"Clean", 0.52, 0.74, 30.13},
                        {"Baby crying", 0.53, 0.65, 18.29},
                        {"Glass break", 0.53, 0.62, 15.21},
                        {"Gun shot", 0.53, 0.63, 16.20},
                        {"Average", 0.53, 0.66, 19.96}};
  double worst = 0.0;
  std::string values;
  for (const auto& c : cells) {
    const double got = relative_gain(c.base, c.cool);
    worst = std::max(worst, std::abs(got - 100.0 * (c.cool - c.base) / c.cool));
    values += std::string(values.empty() ? "" : ", ") + fmt(got, 4) + " (printed " + fmt(c.printed, 4) + ")";
  }

  // Pooled identity: the cumulative row equals the gain of whole-prefix accuracies.
  std::mt19937_64 rng(91);
  std::size_t identity_failures = 0;
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t per = 5 + rng() % 40;
    const std::vector<std::string> names{"Clean", "BabyCrying", "GlassBreak", "GunShot", "Clean"};
    RunLog logs[2];
    for (int m = 0; m < 2; ++m) {
      std::bernoulli_distribution correct(m == 0 ? 0.55 : 0.8);
      logs[m].mode = m == 0 ? RunMode::frozen : RunMode::cool;
      for (std::size_t i = 0; i < names.size(); ++i) logs[m].scenarios.push_back({names[i], static_cast<Eigen::Index>(i * per * 1600)});
      for (std::size_t i = 0; i < 5 * per; ++i) {
        WindowRecord r;
        r.index = i;
        r.origin_sample = static_cast<Eigen::Index>(i) * 1600;
        r.correct = correct(rng);
        r.predicted = r.correct ? 0 : 1;
        logs[m].records.push_back(r);
      }
    }
    const auto rows = sequential_gains(logs[0], logs[1]);
    for (std::size_t k = 0; k < rows.size(); ++k) {
      std::size_t bc = 0, cc = 0;
      const std::size_t n = (k + 1) * per;
      for (std::size_t i = 0; i < n; ++i) {
        bc += logs[0].records[i].correct;
        cc += logs[1].records[i].correct;
      }
      const double b = static_cast<double>(bc) / static_cast<double>(n);
      const double c = static_cast<double>(cc) / static_cast<double>(n);
      if (rows[k].base_cumulative != b || rows[k].cool_cumulative != c || rows[k].cumulative_gain != relative_gain(b, c)) {
        ++identity_failures;
      }
    }
  }
  return verdict(worst <= 0.01 && identity_failures == 0,
                 "gains " + values + ", worst deviation from the formula " + fmt(worst) + "; pooled identity failures " +
                     std::to_string(identity_failures) + "/250");
}

Verdict naive_sgd_oracle() {
  const std::vector<Logistic::Sample> xs{{0.5, 1}, {-1.5, 0}, {2.0, 1}, {0.25, 0}, {-0.75, 1}};
  const std::vector<Eigen::Index> origins{0, 1600, 3200, 4800, 6400};
  OnlineConfig cfg;
  cfg.lr = 0.2;
  double w = 0.1, b = -0.3, worst = 0.0;
  for (std::size_t n = 1; n <= xs.size(); ++n) {
    const auto& s = xs[n - 1];
    const double p = 1.0 / (1.0 + std::exp(-(w * s.x + b)));
    w -= cfg.lr * (p - s.y) * s.x;
    b -= cfg.lr * (p - s.y);
    const auto r = run_sequence<Logistic>(Eigen::Vector2d(0.1, -0.3), {}, std::span(xs).first(n),
                                          std::span(origins).first(n), RunMode::naive, cfg);
    worst = std::max({worst, std::abs(r.final_params[0] - w), std::abs(r.final_params[1] - b)});
  }
  return verdict(worst <= 1e-12, "5 steps, worst |theta - hand-computed| = " + fmt(worst));
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    std::function<Verdict()> run;
  };
  const std::vector<Criterion> criteria{
      {1, "gradient correctness", gradient_correctness},
      {2, "hold-out non-degradation", holdout_non_degradation},
      {3, "revert exactness", revert_exactness},
      {4, "shift experiment ordering", shift_experiment},
      {5, "full-corpus sequential gains", full_corpus_gains},
      {6, "MFCC reference equivalence", mfcc_equivalence},
      {7, "SNR fidelity", snr_fidelity},
      {8, "labeling oracle", labeling_oracle},
      {9, "report arithmetic", report_arithmetic},
      {10, "naive SGD oracle", naive_sgd_oracle},
  };

  int failures = 0;
  for (const auto& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = c.run();
    } catch (const std::exception& e) {
      v = {Status::fail, std::string("error: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const char* tag = v.status == Status::pass ? "PASS" : v.status == Status::fail ? "FAIL" : "SKIPPED";
    failures += v.status == Status::fail ? 1 : 0;
    std::cout << tag << " criterion " << c.id << " (" << c.name << ", " << std::fixed << std::setprecision(1) << secs
              << " s): " << std::defaultfloat << v.detail << std::endl;
  }
  return failures == 0 ? 0 : 1;
}
