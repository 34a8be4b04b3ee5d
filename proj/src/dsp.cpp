#include "coolkws/dsp.hpp"

#include "coolkws/error.hpp"

#include <unsupported/Eigen/FFT>

#include <cmath>
#include <complex>
#include <memory>
#include <numbers>
#include <vector>

namespace coolkws {

void DspConfig::validate() const {
  if (frame_len <= 0 || hop <= 0 || n_frames <= 0) throw Error(Errc::config, "non-positive frame geometry");
  if (frame_len > fft_size) throw Error(Errc::config, "frame_len exceeds fft_size");
  if (n_mels < 2) throw Error(Errc::config, "n_mels must be at least 2");
  if (n_mfcc < 1 || n_mfcc > n_mels) throw Error(Errc::config, "n_mfcc must be in [1, n_mels]");
  if (!(fmin >= 0.0 && fmin < fmax)) throw Error(Errc::config, "need 0 <= fmin < fmax");
  if (fmax > sample_rate_hz / 2.0) throw Error(Errc::config, "fmax above Nyquist");
  if (!(log_floor > 0.0)) throw Error(Errc::config, "log_floor must be positive");
  if (span() > sample_rate_hz) throw Error(Errc::config, "frames overrun the 1 s window");
}

void to_json(nlohmann::json& j, const DspConfig& c) {
  j = {{"frame_len", c.frame_len}, {"hop", c.hop},         {"fft_size", c.fft_size},
       {"n_mels", c.n_mels},       {"n_mfcc", c.n_mfcc},   {"n_frames", c.n_frames},
       {"fmin", c.fmin},           {"fmax", c.fmax},       {"log_floor", c.log_floor},
       {"sample_rate_hz", c.sample_rate_hz}, {"window_fn", "hann"}};
}

void from_json(const nlohmann::json& j, DspConfig& c) {
  DspConfig d;
  c.frame_len = j.value("frame_len", d.frame_len);
  c.hop = j.value("hop", d.hop);
  c.fft_size = j.value("fft_size", d.fft_size);
  c.n_mels = j.value("n_mels", d.n_mels);
  c.n_mfcc = j.value("n_mfcc", d.n_mfcc);
  c.n_frames = j.value("n_frames", d.n_frames);
  c.fmin = j.value("fmin", d.fmin);
  c.fmax = j.value("fmax", d.fmax);
  c.log_floor = j.value("log_floor", d.log_floor);
  c.sample_rate_hz = j.value("sample_rate_hz", d.sample_rate_hz);
  if (j.value("window_fn", std::string("hann")) != "hann") {
    throw Error(Errc::config, "only the hann window is supported");
  }
  c.window_fn = WindowFn::hann;
}

double hz_to_mel(double hz) noexcept { return 2595.0 * std::log10(1.0 + hz / 700.0); }

double mel_to_hz(double mel) noexcept { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

MelFilterbank build_filterbank(const DspConfig& config) {
  config.validate();
  const int n_bins = config.fft_size / 2 + 1;
  const double lo = hz_to_mel(config.fmin);
  const double hi = hz_to_mel(config.fmax);

  // n_mels + 2 edges: filter m rises on [edge m, edge m+1], falls on [edge m+1, edge m+2].
  Eigen::VectorXd edges(config.n_mels + 2);
  for (int i = 0; i < edges.size(); ++i) {
    edges[i] = mel_to_hz(lo + (hi - lo) * i / (config.n_mels + 1));
  }

  MelFilterbank fb;
  fb.weights = Eigen::MatrixXd::Zero(config.n_mels, n_bins);
  fb.centers_hz = edges.segment(1, config.n_mels);
  const double bin_hz = static_cast<double>(config.sample_rate_hz) / config.fft_size;
  for (int m = 0; m < config.n_mels; ++m) {
    const double left = edges[m];
    const double center = edges[m + 1];
    const double right = edges[m + 2];
    for (int k = 0; k < n_bins; ++k) {
      const double f = k * bin_hz;
      if (f > left && f <= center) {
        fb.weights(m, k) = (f - left) / (center - left);
      } else if (f > center && f < right) {
        fb.weights(m, k) = (right - f) / (right - center);
      }
    }
  }
  return fb;
}

Eigen::MatrixXd dct_matrix(int n) {
  Eigen::MatrixXd d(n, n);
  const double s0 = std::sqrt(1.0 / n);
  const double s = std::sqrt(2.0 / n);
  for (int k = 0; k < n; ++k) {
    for (int i = 0; i < n; ++i) {
      d(k, i) = (k == 0 ? s0 : s) * std::cos(std::numbers::pi * k * (2 * i + 1) / (2.0 * n));
    }
  }
  return d;
}

Eigen::VectorXd hann_window(int n) {
  Eigen::VectorXd w(n);
  for (int i = 0; i < n; ++i) w[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * i / n);
  return w;
}

namespace {

// Precomputed tables for one configuration.
struct MfccPlan {
  DspConfig config;
  MelFilterbank filterbank;
  Eigen::MatrixXd dct;  // n_mfcc x n_mels
  Eigen::VectorXd window;
  Eigen::FFT<double> fft;

  explicit MfccPlan(const DspConfig& c)
      : config(c),
        filterbank(build_filterbank(c)),
        dct(dct_matrix(c.n_mels).topRows(c.n_mfcc)),
        window(hann_window(c.frame_len)) {
    fft.SetFlag(Eigen::FFT<double>::HalfSpectrum);
  }

  bool matches(const DspConfig& c) const {
    return c.frame_len == config.frame_len && c.hop == config.hop &&
           c.fft_size == config.fft_size && c.n_mels == config.n_mels &&
           c.n_mfcc == config.n_mfcc && c.n_frames == config.n_frames &&
           c.fmin == config.fmin && c.fmax == config.fmax && c.log_floor == config.log_floor &&
           c.sample_rate_hz == config.sample_rate_hz;
  }
};

MfccPlan& plan_for(const DspConfig& config) {
  thread_local std::unique_ptr<MfccPlan> plan;
  if (!plan || !plan->matches(config)) plan = std::make_unique<MfccPlan>(config);
  return *plan;
}

}  // namespace

Eigen::MatrixXd mfcc_matrix(const Eigen::Ref<const Eigen::VectorXf>& samples,
                            const DspConfig& config) {
  if (samples.size() != config.sample_rate_hz) {
    throw Error(Errc::shape, "expected " + std::to_string(config.sample_rate_hz) +
                                 " samples, got " + std::to_string(samples.size()));
  }
  if (!samples.allFinite()) throw Error(Errc::invalid_sample, "non-finite amplitude in window");

  MfccPlan& plan = plan_for(config);
  const int n_bins = config.fft_size / 2 + 1;
  Eigen::MatrixXd power(n_bins, config.n_frames);
  std::vector<double> frame(static_cast<std::size_t>(config.fft_size), 0.0);
  std::vector<std::complex<double>> spectrum;
  for (int t = 0; t < config.n_frames; ++t) {
    const Eigen::Index start = Eigen::Index(t) * config.hop;
    for (int i = 0; i < config.frame_len; ++i) {
      frame[static_cast<std::size_t>(i)] = plan.window[i] * samples[start + i];
    }
    plan.fft.fwd(spectrum, frame);
    for (int k = 0; k < n_bins; ++k) power(k, t) = std::norm(spectrum[static_cast<std::size_t>(k)]);
  }
  const Eigen::MatrixXd mel = plan.filterbank.weights * power;
  const Eigen::MatrixXd logmel = mel.cwiseMax(config.log_floor).array().log().matrix();
  return (plan.dct * logmel).transpose();
}

FeatureWindow mfcc_window(const Eigen::Ref<const Eigen::VectorXf>& samples,
                          const DspConfig& config, Eigen::Index origin_sample) {
  return {mfcc_matrix(samples, config).cast<float>(), origin_sample};
}

AudioClip time_shift(const AudioClip& clip, int shift) {
  if (shift < -kMaxShift || shift > kMaxShift) {
    throw Error(Errc::range, "time shift " + std::to_string(shift) + " exceeds +/-" +
                                 std::to_string(kMaxShift));
  }
  AudioClip out = clip;
  const Eigen::Index n = clip.samples.size();
  const Eigen::Index k = std::min<Eigen::Index>(std::abs(shift), n);
  out.samples.setZero();
  if (shift >= 0) {
    out.samples.tail(n - k) = clip.samples.head(n - k);
  } else {
    out.samples.head(n - k) = clip.samples.tail(n - k);
  }
  return out;
}

}  // namespace coolkws
