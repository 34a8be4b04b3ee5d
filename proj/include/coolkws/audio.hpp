#ifndef COOLKWS_AUDIO_HPP
#define COOLKWS_AUDIO_HPP

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

namespace coolkws {

inline constexpr int kSampleRate = 16000;
inline constexpr Eigen::Index kClipSamples = 16000;

/// Mono PCM audio with amplitudes in [-1, 1].
struct AudioClip {
  Eigen::VectorXf samples;
  int sample_rate_hz = kSampleRate;
  std::optional<std::string> word;
  std::string source_path;

  Eigen::Index size() const noexcept { return samples.size(); }
};

struct WavInfo {
  int channels = 0;
  int sample_rate_hz = 0;
  int bits_per_sample = 0;
  std::uint32_t frames = 0;
};

/// Parses only the RIFF header chunks. Throws Error{format} on anything that
/// is not a PCM WAV file.
WavInfo read_wav_info(const std::filesystem::path& path);

/// Reads a 16-bit PCM mono 16 kHz WAV at its native length.
AudioClip read_wav(const std::filesystem::path& path);

/// read_wav() followed by fit_to_length(kClipSamples): short clips are
/// right-padded with zeros, long clips are center-cropped.
AudioClip load_clip(const std::filesystem::path& path);

Eigen::VectorXf fit_to_length(const Eigen::VectorXf& samples, Eigen::Index length);

/// Writes 16-bit PCM mono. Samples are scaled by 32768, rounded and saturated.
void write_wav(const std::filesystem::path& path, const Eigen::VectorXf& samples,
               int sample_rate_hz = kSampleRate);

bool all_finite_in_range(const Eigen::VectorXf& samples) noexcept;

}  // namespace coolkws

#endif  // COOLKWS_AUDIO_HPP
