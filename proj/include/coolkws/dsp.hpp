#ifndef COOLKWS_DSP_HPP
#define COOLKWS_DSP_HPP

#include "coolkws/audio.hpp"

#include <Eigen/Dense>
#include <json.hpp>

namespace coolkws {

enum class WindowFn { hann };

/// Short-time analysis settings for one 1 s input window.
struct DspConfig {
  int frame_len = 1000;
  int hop = 477;
  int fft_size = 1024;
  int n_mels = 40;
  int n_mfcc = 40;
  int n_frames = 32;
  double fmin = 20.0;
  double fmax = 8000.0;
  double log_floor = 1e-6;
  int sample_rate_hz = kSampleRate;
  WindowFn window_fn = WindowFn::hann;

  /// Throws Error{config} when the settings are inconsistent.
  void validate() const;
  /// Samples consumed by n_frames frames: frame_len + (n_frames - 1) * hop.
  Eigen::Index span() const noexcept { return frame_len + Eigen::Index(n_frames - 1) * hop; }
};

void to_json(nlohmann::json& j, const DspConfig& c);
void from_json(const nlohmann::json& j, DspConfig& c);

/// n_frames x n_mfcc cepstra of one window (time along rows).
struct FeatureWindow {
  Eigen::MatrixXf mfcc;
  Eigen::Index origin_sample = 0;
};

struct MelFilterbank {
  Eigen::MatrixXd weights;     // n_mels x (fft_size / 2 + 1)
  Eigen::VectorXd centers_hz;  // n_mels
};

double hz_to_mel(double hz) noexcept;
double mel_to_hz(double mel) noexcept;

/// Triangular filters, centres equally spaced in mel between fmin and fmax,
/// each spanning its two neighbours' centres (50% overlap).
MelFilterbank build_filterbank(const DspConfig& config);

/// Orthonormal DCT-II basis, row k holds coefficient k.
Eigen::MatrixXd dct_matrix(int n);

/// Periodic Hann window of length n.
Eigen::VectorXd hann_window(int n);

/// Full-precision cepstra for a window of config.sample_rate_hz samples.
Eigen::MatrixXd mfcc_matrix(const Eigen::Ref<const Eigen::VectorXf>& samples,
                            const DspConfig& config);

/// Throws Error{shape} for a wrong length and Error{invalid_sample} for
/// non-finite input.
FeatureWindow mfcc_window(const Eigen::Ref<const Eigen::VectorXf>& samples,
                          const DspConfig& config, Eigen::Index origin_sample = 0);

inline constexpr int kMaxShift = 1600;

/// Positive shift delays the signal. Vacated samples are zero.
AudioClip time_shift(const AudioClip& clip, int shift);

}  // namespace coolkws

#endif  // COOLKWS_DSP_HPP
