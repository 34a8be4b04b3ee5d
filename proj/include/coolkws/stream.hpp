#ifndef COOLKWS_STREAM_HPP
#define COOLKWS_STREAM_HPP

#include "coolkws/audio.hpp"
#include "coolkws/dataset.hpp"
#include "coolkws/error.hpp"

#include <Eigen/Dense>
#include <json.hpp>

#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace coolkws {

struct StreamConfig {
  Eigen::Index pad = 8000;          // zeros on each side of every clip
  double snr_db = 25.0;
  double overlap_threshold = 0.8;   // fraction of the word inside the window
  Eigen::Index window_len = 16000;
  Eigen::Index hop = 1600;

  void validate() const;
  friend bool operator==(const StreamConfig&, const StreamConfig&) = default;
};

void to_json(nlohmann::json& j, const StreamConfig& c);
void from_json(const nlohmann::json& j, StreamConfig& c);

/// Half-open sample range [begin, end).
struct WordExtent {
  Eigen::Index begin = 0;
  Eigen::Index end = 0;

  Eigen::Index length() const noexcept { return end - begin; }
};

struct StreamWindow {
  Eigen::Index origin = 0;
  BinaryLabel label = BinaryLabel::non_target;

  friend bool operator==(const StreamWindow&, const StreamWindow&) = default;
};

struct ScenarioMark {
  std::string name;
  Eigen::Index start_sample = 0;

  friend bool operator==(const ScenarioMark&, const ScenarioMark&) = default;
};

struct LabeledStream {
  Eigen::VectorXf samples;
  std::vector<StreamWindow> windows;  // sorted by origin
  std::vector<ScenarioMark> scenarios;
  Eigen::Index window_len = 16000;
  Eigen::Index hop = 1600;

  auto window_samples(const StreamWindow& w) const { return samples.segment(w.origin, window_len); }
};

struct StreamClip {
  AudioClip clip;
  BinaryLabel label = BinaryLabel::non_target;
  WordExtent extent;  // within the clip
};

inline const std::vector<std::string>& noise_scenarios() {
  static const std::vector<std::string> names{"BabyCrying", "GlassBreak", "GunShot"};
  return names;
}

/// Clean, BabyCrying, GlassBreak, GunShot, Clean.
const std::vector<std::string>& sequential_order();

/// Samples of `window_len` starting at `origin` that fall inside `extent`.
Eigen::Index overlap(Eigen::Index origin, Eigen::Index window_len, const WordExtent& extent) noexcept;

/// Whether a window holds enough of a word to be labeled with it.
bool covers_word(Eigen::Index origin, Eigen::Index window_len, const WordExtent& extent,
                 double threshold) noexcept;

/// Span of the spoken word in a clip: 10 ms frames whose energy is within
/// `range_db` of the loudest frame. Silent clips yield the whole clip.
WordExtent detect_word_extent(const Eigen::VectorXf& samples, double range_db = 30.0);

/// Pads every clip by cfg.pad on both sides, concatenates, and labels each
/// window origin 0, hop, 2*hop, ... target iff a target word extent
/// overlaps it by at least overlap_threshold of the word's length.
LabeledStream concat_with_labels(std::span<const StreamClip> clips, const StreamConfig& cfg,
                                 const std::string& scenario = "Clean");

/// Noise tiled circularly from `offset` to `length` samples.
Eigen::VectorXf tile_noise(const Eigen::VectorXf& noise, Eigen::Index length, Eigen::Index offset);

double rms(const Eigen::VectorXf& x) noexcept;

struct MixResult {
  LabeledStream stream;
  double gain = 0.0;          // applied to the tiled noise
  Eigen::Index offset = 0;    // circular start inside the noise clip
  std::size_t clipped = 0;    // samples saturated at +/-1
};

MixResult mix_noise(const LabeledStream& stream, const AudioClip& noise, double snr_db,
                    std::uint64_t seed);

/// Concatenates scenario streams, rebasing window origins and marking each
/// scenario's first sample.
LabeledStream build_sequential_stream(
    std::span<const std::pair<std::string, LabeledStream>> per_scenario);

void save_stream(const LabeledStream& stream, const StreamConfig& cfg,
                 const std::filesystem::path& wav_path, const std::filesystem::path& json_path);
LabeledStream load_stream(const std::filesystem::path& wav_path, const std::filesystem::path& json_path);

}  // namespace coolkws

#endif  // COOLKWS_STREAM_HPP
