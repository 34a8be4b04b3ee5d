#include "coolkws/online.hpp"

namespace coolkws {

std::string_view to_string(RunMode mode) noexcept {
  switch (mode) {
    case RunMode::frozen: return "frozen";
    case RunMode::naive: return "naive";
    case RunMode::cool: return "cool";
  }
  return "frozen";
}

RunMode parse_mode(std::string_view text) {
  if (text == "frozen") return RunMode::frozen;
  if (text == "naive") return RunMode::naive;
  if (text == "cool") return RunMode::cool;
  throw Error(Errc::config, "unknown mode '" + std::string(text) + "'");
}

std::string_view to_string(DecisionReason reason) noexcept {
  switch (reason) {
    case DecisionReason::not_enough_samples: return "not-enough-samples";
    case DecisionReason::consolidated: return "consolidated";
    case DecisionReason::reverted_holdout: return "reverted-holdout";
    case DecisionReason::reverted_batch: return "reverted-batch";
  }
  return "not-enough-samples";
}

DecisionReason parse_reason(std::string_view text) {
  if (text == "not-enough-samples") return DecisionReason::not_enough_samples;
  if (text == "consolidated") return DecisionReason::consolidated;
  if (text == "reverted-holdout") return DecisionReason::reverted_holdout;
  if (text == "reverted-batch") return DecisionReason::reverted_batch;
  throw Error(Errc::format, "unknown decision reason '" + std::string(text) + "'");
}

void OnlineConfig::validate() const {
  if (batch_size < 2 || batch_size % 2 != 0) throw Error(Errc::config, "online batch size must be even and >= 2");
  if (!(lr >= 0.0) || !std::isfinite(lr)) throw Error(Errc::config, "online lr must be finite and >= 0");
  if (max_buffer < static_cast<std::size_t>(batch_size / 2))
    throw Error(Errc::config, "max_buffer smaller than half a batch");
}

void to_json(nlohmann::json& j, const OnlineConfig& c) {
  j = {{"batch_size", c.batch_size}, {"lr", c.lr}, {"max_buffer", c.max_buffer},
       {"naive_batched", c.naive_batched}};
}

void from_json(const nlohmann::json& j, OnlineConfig& c) {
  OnlineConfig d;
  c.batch_size = j.value("batch_size", d.batch_size);
  c.lr = j.value("lr", d.lr);
  c.max_buffer = j.value("max_buffer", d.max_buffer);
  c.naive_batched = j.value("naive_batched", d.naive_batched);
}

std::vector<LabeledWindow> stream_features(const LabeledStream& stream, const DspConfig& dsp) {
  std::vector<LabeledWindow> out;
  out.reserve(stream.windows.size());
  for (const auto& w : stream.windows) {
    if (w.origin < 0 || w.origin + stream.window_len > stream.samples.size()) {
      throw Error(Errc::shape, "window origin " + std::to_string(w.origin) + " outside stream");
    }
    // Non-finite audio is passed through as a NaN window so the run skips it.
    const auto segment = stream.window_samples(w);
    FeatureWindow fw;
    if (segment.allFinite()) {
      fw = mfcc_window(segment, dsp, w.origin);
    } else {
      fw.mfcc = Eigen::MatrixXf::Constant(dsp.n_frames, dsp.n_mfcc, std::numeric_limits<float>::quiet_NaN());
      fw.origin_sample = w.origin;
    }
    out.push_back({std::move(fw), w.label});
  }
  return out;
}

StreamRun run_windows(const ModelParams<float>& m0, std::span<const LabeledWindow> holdout,
                      std::span<const LabeledWindow> windows, std::vector<ScenarioMark> scenarios,
                      RunMode mode, const OnlineConfig& cfg) {
  if (mode == RunMode::cool && holdout.empty()) {
    throw Error(Errc::config, "mode cool requires a hold-out set");
  }
  std::vector<Eigen::Index> origins;
  origins.reserve(windows.size());
  for (const auto& w : windows) origins.push_back(w.x.origin_sample);
  auto r = run_sequence<CnnClassifier>(m0, holdout, windows, origins, mode, cfg);
  r.log.scenarios = std::move(scenarios);
  return {std::move(r.log), std::move(r.final_params)};
}

StreamRun run_stream(const ModelParams<float>& m0, std::span<const LabeledWindow> holdout,
                     const LabeledStream& stream, RunMode mode, const DspConfig& dsp,
                     const OnlineConfig& cfg) {
  if (mode == RunMode::cool && holdout.empty()) {
    throw Error(Errc::config, "mode cool requires a hold-out set");
  }
  const auto windows = stream_features(stream, dsp);
  return run_windows(m0, holdout, windows, stream.scenarios, mode, cfg);
}

}  // namespace coolkws
