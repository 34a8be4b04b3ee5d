#ifndef COOLKWS_ONLINE_HPP
#define COOLKWS_ONLINE_HPP

#include "coolkws/stream.hpp"
#include "coolkws/trainer.hpp"

#include <Eigen/Dense>
#include <json.hpp>

#include <cmath>
#include <concepts>
#include <deque>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace coolkws {

enum class RunMode { frozen, naive, cool };

std::string_view to_string(RunMode mode) noexcept;
RunMode parse_mode(std::string_view text);

struct OnlineConfig {
  int batch_size = 16;
  double lr = 1e-3;
  std::size_t max_buffer = 64;  // per class, FIFO eviction
  bool naive_batched = false;   // naive mode steps on COOL-style balanced batches

  void validate() const;
};

void to_json(nlohmann::json& j, const OnlineConfig& c);
void from_json(const nlohmann::json& j, OnlineConfig& c);

enum class DecisionReason { not_enough_samples, consolidated, reverted_holdout, reverted_batch };

std::string_view to_string(DecisionReason reason) noexcept;
DecisionReason parse_reason(std::string_view text);

struct StepDecision {
  std::size_t step_index = 0;  // value of the attempt counter when the step ran
  std::size_t window_index = 0;
  bool attempted = false;
  bool consolidated = false;
  double l = 0.0;          // batch loss before the step
  double l_prime = 0.0;    // batch loss after the step
  double l_v_prime = 0.0;  // hold-out loss after the step
  DecisionReason reason = DecisionReason::not_enough_samples;
};

struct WindowRecord {
  std::size_t index = 0;
  Eigen::Index origin_sample = 0;
  int label = 0;
  int predicted = 0;
  bool correct = false;
  bool skipped = false;  // non-finite features, never learned from
};

struct RunLog {
  RunMode mode = RunMode::frozen;
  std::vector<WindowRecord> records;
  std::vector<StepDecision> decisions;
  std::vector<ScenarioMark> scenarios;
  std::vector<std::string> warnings;
  double holdout_baseline = std::numeric_limits<double>::quiet_NaN();
  nlohmann::json meta = nlohmann::json::object();  // task, scenario, config, checkpoint hash
};

/// What the online loop needs from a binary classifier.
template <typename C>
concept OnlineClassifier =
    requires(const typename C::Params& p, const typename C::Sample& s,
             std::span<const typename C::Sample> batch, double lr) {
      { C::probabilities(p, s) } -> std::convertible_to<Eigen::Vector2d>;
      { C::loss(p, batch) } -> std::convertible_to<double>;
      { C::descend(p, batch, lr) } -> std::same_as<typename C::Params>;
      { C::finite(s) } -> std::convertible_to<bool>;
      { C::label(s) } -> std::convertible_to<int>;
    };

/// The conditional online learner: balanced per-class buffers, one SGD
/// step per full batch, consolidated only if the batch loss drops and the
/// hold-out loss stays at or below that of the initial model.
template <OnlineClassifier C>
class OnlineLearner {
 public:
  using Params = typename C::Params;
  using Sample = typename C::Sample;

  /// Gated learner. l_v is measured once, here, and never changes.
  OnlineLearner(Params m0, std::vector<Sample> holdout, OnlineConfig cfg)
      : params_(std::move(m0)), holdout_(std::move(holdout)), cfg_(cfg), gated_(true) {
    cfg_.validate();
    if (holdout_.empty()) throw Error(Errc::config, "COOL needs a non-empty hold-out set");
    l_v_ = C::loss(params_, std::span<const Sample>(holdout_));
  }

  /// Batched learner without the hold-out gate (naive ablation).
  static OnlineLearner ungated(Params m0, OnlineConfig cfg) { return OnlineLearner(std::move(m0), cfg); }

  const Params& params() const noexcept { return params_; }
  double holdout_baseline() const noexcept { return l_v_; }
  std::size_t attempts() const noexcept { return j_; }
  std::size_t target_buffered() const noexcept { return targets_.size(); }
  std::size_t nontarget_buffered() const noexcept { return nontargets_.size(); }
  std::span<const Sample> holdout() const noexcept { return holdout_; }

  /// Buffers the sample; once both classes hold batch_size/2 samples, runs
  /// an update on the latest of each and empties both buffers.
  std::optional<StepDecision> observe(Sample sample) {
    auto& buf = C::label(sample) == 1 ? targets_ : nontargets_;
    buf.push_back(std::move(sample));
    if (buf.size() > cfg_.max_buffer) buf.pop_front();

    const auto half = static_cast<std::size_t>(cfg_.batch_size / 2);
    if (targets_.size() < half || nontargets_.size() < half) return std::nullopt;

    std::vector<Sample> batch;
    batch.reserve(2 * half);
    batch.insert(batch.end(), targets_.end() - static_cast<std::ptrdiff_t>(half), targets_.end());
    batch.insert(batch.end(), nontargets_.end() - static_cast<std::ptrdiff_t>(half), nontargets_.end());

    StepDecision d = gated_ ? cool_update(batch) : ungated_update(batch);
    ++j_;
    targets_.clear();
    nontargets_.clear();
    return d;
  }

  /// One gated step on `batch`. Leaves the parameters untouched unless the
  /// candidate passes both checks.
  StepDecision cool_update(std::span<const Sample> batch) {
    if (!gated_) throw Error(Errc::config, "cool_update on an ungated learner");
    if (batch.size() != static_cast<std::size_t>(cfg_.batch_size)) {
      throw Error(Errc::config, "batch must hold exactly batch_size samples");
    }
    StepDecision d;
    d.step_index = j_;
    d.attempted = true;
    d.l = C::loss(params_, batch);
    Params candidate = C::descend(params_, batch, cfg_.lr);
    d.l_prime = C::loss(candidate, batch);
    d.l_v_prime = C::loss(candidate, std::span<const Sample>(holdout_));

    if (!std::isfinite(d.l) || !std::isfinite(d.l_prime) || !std::isfinite(d.l_v_prime)) {
      d.reason = DecisionReason::reverted_batch;
    } else if (d.l_v_prime > l_v_) {
      d.reason = DecisionReason::reverted_holdout;
    } else if (d.l_prime >= d.l) {
      d.reason = DecisionReason::reverted_batch;
    } else {
      d.reason = DecisionReason::consolidated;
      d.consolidated = true;
      params_ = std::move(candidate);
    }
    return d;
  }

 private:
  OnlineLearner(Params m0, OnlineConfig cfg) : params_(std::move(m0)), cfg_(cfg), gated_(false) {
    cfg_.validate();
  }

  StepDecision ungated_update(std::span<const Sample> batch) {
    StepDecision d;
    d.step_index = j_;
    d.attempted = true;
    d.l = C::loss(params_, batch);
    params_ = C::descend(params_, batch, cfg_.lr);
    d.l_prime = C::loss(params_, batch);
    d.l_v_prime = std::numeric_limits<double>::quiet_NaN();
    d.consolidated = true;
    d.reason = DecisionReason::consolidated;
    return d;
  }

  Params params_;
  std::vector<Sample> holdout_;
  OnlineConfig cfg_;
  bool gated_;
  std::deque<Sample> targets_;
  std::deque<Sample> nontargets_;
  double l_v_ = std::numeric_limits<double>::quiet_NaN();
  std::size_t j_ = 0;
};

template <OnlineClassifier C>
struct RunResult {
  RunLog log;
  typename C::Params final_params;
};

/// Prequential run: every sample is predicted with the current parameters
/// before it can influence them.
template <OnlineClassifier C>
RunResult<C> run_sequence(const typename C::Params& m0, std::span<const typename C::Sample> holdout,
                          std::span<const typename C::Sample> samples,
                          std::span<const Eigen::Index> origins, RunMode mode,
                          const OnlineConfig& cfg) {
  using Sample = typename C::Sample;
  cfg.validate();
  if (samples.empty()) throw Error(Errc::config, "no stream windows");
  if (origins.size() != samples.size()) throw Error(Errc::config, "origins and samples differ in length");

  RunResult<C> out{RunLog{}, m0};
  out.log.mode = mode;

  std::optional<OnlineLearner<C>> learner;
  if (mode == RunMode::cool) {
    learner.emplace(m0, std::vector<Sample>(holdout.begin(), holdout.end()), cfg);
    out.log.holdout_baseline = learner->holdout_baseline();
  } else if (mode == RunMode::naive && cfg.naive_batched) {
    learner.emplace(OnlineLearner<C>::ungated(m0, cfg));
  }

  typename C::Params params = m0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const Sample& s = samples[i];
    const typename C::Params& current = learner ? learner->params() : params;
    const Eigen::Vector2d probs = C::probabilities(current, s);
    WindowRecord rec;
    rec.index = i;
    rec.origin_sample = origins[i];
    rec.label = C::label(s);
    rec.predicted = argmax_class(probs);
    rec.correct = rec.predicted == rec.label;
    rec.skipped = !C::finite(s);
    out.log.records.push_back(rec);
    if (rec.skipped) {
      out.log.warnings.push_back("window " + std::to_string(i) + ": non-finite features, skipped");
      continue;
    }

    if (mode == RunMode::frozen) continue;
    if (learner) {
      if (auto d = learner->observe(s)) {
        d->window_index = i;
        out.log.decisions.push_back(*d);
      }
    } else {
      params = C::descend(params, std::span<const Sample>(&s, 1), cfg.lr);
    }
  }
  out.final_params = learner ? learner->params() : params;
  return out;
}

/// Adapter exposing the CNN to the online loop.
struct CnnClassifier {
  using Params = ModelParams<float>;
  using Sample = LabeledWindow;

  static Eigen::Vector2d probabilities(const Params& p, const Sample& s) {
    return predict(p, s.x.mfcc).cast<double>();
  }
  static double loss(const Params& p, std::span<const Sample> batch) { return evaluate(p, batch).loss; }
  static Params descend(const Params& p, std::span<const Sample> batch, double lr) {
    return sgd_step(p, batch_gradient(p, batch).grads, lr);
  }
  static bool finite(const Sample& s) { return s.x.mfcc.allFinite(); }
  static int label(const Sample& s) { return s.target(); }
};

using CnnLearner = OnlineLearner<CnnClassifier>;

/// Features for every window of the stream, in order.
std::vector<LabeledWindow> stream_features(const LabeledStream& stream, const DspConfig& dsp);

struct StreamRun {
  RunLog log;
  ModelParams<float> final_params;
};

StreamRun run_stream(const ModelParams<float>& m0, std::span<const LabeledWindow> holdout,
                     const LabeledStream& stream, RunMode mode, const DspConfig& dsp,
                     const OnlineConfig& cfg);

/// Same as run_stream() for already extracted window features.
StreamRun run_windows(const ModelParams<float>& m0, std::span<const LabeledWindow> holdout,
                      std::span<const LabeledWindow> windows, std::vector<ScenarioMark> scenarios,
                      RunMode mode, const OnlineConfig& cfg);

/// JSON-lines: a header line, one line per window, one per decision.
void save_runlog(const RunLog& log, const std::filesystem::path& path);
RunLog load_runlog(const std::filesystem::path& path);

}  // namespace coolkws

#endif  // COOLKWS_ONLINE_HPP
