#include "coolkws/stream.hpp"

#include "coolkws/error.hpp"
#include "coolkws/random.hpp"

#include <algorithm>
#include <cmath>

namespace coolkws {
using nlohmann::json;

void StreamConfig::validate() const {
  if (pad < 0) throw Error(Errc::config, "negative pad");
  if (window_len <= 0 || hop <= 0) throw Error(Errc::config, "window_len and hop must be positive");
  if (window_len % hop != 0) throw Error(Errc::config, "hop must divide window_len");
  if (!(overlap_threshold > 0.0 && overlap_threshold <= 1.0))
    throw Error(Errc::config, "overlap_threshold must be in (0, 1]");
  if (!std::isfinite(snr_db)) throw Error(Errc::config, "snr_db must be finite");
}

void to_json(json& j, const StreamConfig& c) {
  j = {{"pad", c.pad}, {"snr_db", c.snr_db}, {"overlap_threshold", c.overlap_threshold},
       {"window_len", c.window_len}, {"hop", c.hop}};
}

void from_json(const json& j, StreamConfig& c) {
  StreamConfig d;
  c.pad = j.value("pad", d.pad);
  c.snr_db = j.value("snr_db", d.snr_db);
  c.overlap_threshold = j.value("overlap_threshold", d.overlap_threshold);
  c.window_len = j.value("window_len", d.window_len);
  c.hop = j.value("hop", d.hop);
}

const std::vector<std::string>& sequential_order() {
  static const std::vector<std::string> order{"Clean", "BabyCrying", "GlassBreak", "GunShot", "Clean"};
  return order;
}

Eigen::Index overlap(Eigen::Index origin, Eigen::Index window_len, const WordExtent& extent) noexcept {
  const Eigen::Index lo = std::max(origin, extent.begin);
  const Eigen::Index hi = std::min(origin + window_len, extent.end);
  return std::max<Eigen::Index>(0, hi - lo);
}

bool covers_word(Eigen::Index origin, Eigen::Index window_len, const WordExtent& extent,
                 double threshold) noexcept {
  if (extent.length() <= 0) return false;
  // Smallest integer overlap meeting the threshold; the epsilon absorbs the
  // representation error of e.g. 0.8 so that exactly 80% counts.
  const auto required =
      static_cast<Eigen::Index>(std::ceil(threshold * static_cast<double>(extent.length()) - 1e-9));
  return overlap(origin, window_len, extent) >= std::max<Eigen::Index>(required, 1);
}

WordExtent detect_word_extent(const Eigen::VectorXf& samples, double range_db) {
  constexpr Eigen::Index frame = kSampleRate / 100;
  const Eigen::Index n_frames = samples.size() / frame;
  if (n_frames == 0) return {0, samples.size()};
  Eigen::VectorXd energy(n_frames);
  for (Eigen::Index f = 0; f < n_frames; ++f) {
    energy[f] = samples.segment(f * frame, frame).cast<double>().squaredNorm();
  }
  const double peak = energy.maxCoeff();
  if (peak <= 0.0) return {0, samples.size()};
  const double floor = peak * std::pow(10.0, -range_db / 10.0);
  Eigen::Index first = 0;
  while (energy[first] < floor) ++first;
  Eigen::Index last = n_frames - 1;
  while (energy[last] < floor) --last;
  return {first * frame, (last + 1) * frame};
}

LabeledStream concat_with_labels(std::span<const StreamClip> clips, const StreamConfig& cfg,
                                 const std::string& scenario) {
  cfg.validate();
  if (clips.empty()) throw Error(Errc::config, "no clips to concatenate");

  Eigen::Index total = 0;
  for (const auto& c : clips) {
    if (c.clip.size() > cfg.window_len) {
      throw Error(Errc::config, "clip " + c.clip.source_path + " is longer than one window");
    }
    if (c.extent.begin < 0 || c.extent.end > c.clip.size() || c.extent.begin > c.extent.end) {
      throw Error(Errc::config, "word extent outside clip " + c.clip.source_path);
    }
    total += c.clip.size() + 2 * cfg.pad;
  }

  LabeledStream s;
  s.window_len = cfg.window_len;
  s.hop = cfg.hop;
  s.samples = Eigen::VectorXf::Zero(total);
  s.scenarios.push_back({scenario, 0});
  std::vector<WordExtent> targets;
  Eigen::Index at = 0;
  for (const auto& c : clips) {
    at += cfg.pad;
    s.samples.segment(at, c.clip.size()) = c.clip.samples;
    if (c.label == BinaryLabel::target) {
      targets.push_back({at + c.extent.begin, at + c.extent.end});
    }
    at += c.clip.size() + cfg.pad;
  }

  for (Eigen::Index origin = 0; origin + cfg.window_len <= total; origin += cfg.hop) {
    StreamWindow w{origin, BinaryLabel::non_target};
    // Targets are sorted; only those within one window of the origin can qualify.
    auto it = std::lower_bound(targets.begin(), targets.end(), origin,
                               [](const WordExtent& e, Eigen::Index o) { return e.end <= o; });
    for (; it != targets.end() && it->begin < origin + cfg.window_len; ++it) {
      if (covers_word(origin, cfg.window_len, *it, cfg.overlap_threshold)) {
        w.label = BinaryLabel::target;
        break;
      }
    }
    s.windows.push_back(w);
  }
  return s;
}

Eigen::VectorXf tile_noise(const Eigen::VectorXf& noise, Eigen::Index length, Eigen::Index offset) {
  Eigen::VectorXf out(length);
  const Eigen::Index n = noise.size();
  Eigen::Index src = offset % n;
  Eigen::Index dst = 0;
  while (dst < length) {
    const Eigen::Index chunk = std::min(n - src, length - dst);
    out.segment(dst, chunk) = noise.segment(src, chunk);
    dst += chunk;
    src = 0;
  }
  return out;
}

double rms(const Eigen::VectorXf& x) noexcept {
  if (x.size() == 0) return 0.0;
  return std::sqrt(x.cast<double>().squaredNorm() / static_cast<double>(x.size()));
}

MixResult mix_noise(const LabeledStream& stream, const AudioClip& noise, double snr_db,
                    std::uint64_t seed) {
  if (noise.size() == 0 || !(rms(noise.samples) > 0.0)) {
    throw Error(Errc::invalid_noise, "noise '" + noise.source_path + "' is silent");
  }
  MixResult r;
  r.stream = stream;
  auto rng = make_rng(seed, "stream.noise_offset");
  r.offset = std::uniform_int_distribution<Eigen::Index>(0, noise.size() - 1)(rng);
  const Eigen::VectorXf tiled = tile_noise(noise.samples, stream.samples.size(), r.offset);
  const double noise_rms = rms(tiled);
  if (!(noise_rms > 0.0)) throw Error(Errc::invalid_noise, "tiled noise segment is silent");
  r.gain = rms(stream.samples) / (noise_rms * std::pow(10.0, snr_db / 20.0));

  Eigen::VectorXf& out = r.stream.samples;
  for (Eigen::Index i = 0; i < out.size(); ++i) {
    const double v = static_cast<double>(stream.samples[i]) + r.gain * tiled[i];
    if (v > 1.0 || v < -1.0) ++r.clipped;
    out[i] = static_cast<float>(std::clamp(v, -1.0, 1.0));
  }
  return r;
}

LabeledStream build_sequential_stream(
    std::span<const std::pair<std::string, LabeledStream>> per_scenario) {
  if (per_scenario.empty()) throw Error(Errc::config, "no scenario streams");
  LabeledStream out;
  out.window_len = per_scenario.front().second.window_len;
  out.hop = per_scenario.front().second.hop;
  Eigen::Index total = 0;
  for (const auto& [name, s] : per_scenario) {
    if (s.window_len != out.window_len || s.hop != out.hop) {
      throw Error(Errc::config, "scenario '" + name + "' uses a different window geometry");
    }
    total += s.samples.size();
  }
  out.samples.resize(total);
  Eigen::Index at = 0;
  for (const auto& [name, s] : per_scenario) {
    out.samples.segment(at, s.samples.size()) = s.samples;
    out.scenarios.push_back({name, at});
    for (const auto& w : s.windows) out.windows.push_back({w.origin + at, w.label});
    at += s.samples.size();
  }
  return out;
}

void save_stream(const LabeledStream& stream, const StreamConfig& cfg,
                 const std::filesystem::path& wav_path, const std::filesystem::path& json_path) {
  write_wav(wav_path, stream.samples);
  json windows = json::array();
  for (const auto& w : stream.windows) windows.push_back({w.origin, static_cast<int>(w.label)});
  json marks = json::array();
  for (const auto& m : stream.scenarios) marks.push_back({{"name", m.name}, {"start_sample", m.start_sample}});
  save_json(json_path, {{"schema_version", kSchemaVersion},
                        {"kind", "stream"},
                        {"wav", wav_path.filename().string()},
                        {"total_samples", stream.samples.size()},
                        {"window_len", stream.window_len},
                        {"hop", stream.hop},
                        {"config", cfg},
                        {"scenarios", std::move(marks)},
                        {"windows", std::move(windows)}});
}

LabeledStream load_stream(const std::filesystem::path& wav_path, const std::filesystem::path& json_path) {
  const json doc = load_json(json_path);
  if (doc.value("schema_version", 0) != kSchemaVersion || doc.value("kind", "") != "stream") {
    throw Error(Errc::format, json_path.string() + " is not a stream sidecar");
  }
  LabeledStream s;
  s.samples = read_wav(wav_path).samples;
  if (s.samples.size() != doc.at("total_samples").get<Eigen::Index>()) {
    throw Error(Errc::format, "stream WAV length disagrees with its sidecar");
  }
  s.window_len = doc.at("window_len").get<Eigen::Index>();
  s.hop = doc.at("hop").get<Eigen::Index>();
  for (const auto& m : doc.at("scenarios")) {
    s.scenarios.push_back({m.at("name").get<std::string>(), m.at("start_sample").get<Eigen::Index>()});
  }
  for (const auto& w : doc.at("windows")) {
    const auto origin = w.at(0).get<Eigen::Index>();
    if (origin < 0 || origin + s.window_len > s.samples.size()) {
      throw Error(Errc::format, "window origin outside the stream");
    }
    s.windows.push_back({origin, static_cast<BinaryLabel>(w.at(1).get<int>())});
  }
  return s;
}

}  // namespace coolkws
