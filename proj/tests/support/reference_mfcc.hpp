#ifndef COOLKWS_TESTS_REFERENCE_MFCC_HPP
#define COOLKWS_TESTS_REFERENCE_MFCC_HPP

// Straight-line MFCC used as an oracle: explicit DFT sums, filter weights
// from the mel formula, DCT from its defining cosine sum. Shares no code
// with the library beyond the config struct.

#include <cmath>
#include <complex>
#include <vector>

namespace reference {

struct MfccSettings {
  int frame_len = 1000;
  int hop = 477;
  int fft_size = 1024;
  int n_filters = 40;
  int n_coeffs = 40;
  int n_frames = 32;
  double fmin = 20.0;
  double fmax = 8000.0;
  double floor = 1e-6;
  double rate = 16000.0;
};

inline double mel(double f) { return 2595.0 * std::log10(1.0 + f / 700.0); }
inline double inv_mel(double m) { return 700.0 * (std::pow(10.0, m / 2595.0) - 1.0); }

inline std::vector<double> filter_centers(const MfccSettings& s) {
  std::vector<double> c;
  const double step = (mel(s.fmax) - mel(s.fmin)) / (s.n_filters + 1);
  for (int m = 1; m <= s.n_filters; ++m) c.push_back(inv_mel(mel(s.fmin) + m * step));
  return c;
}

inline double triangle(double f, double left, double center, double right) {
  if (f <= left || f >= right) return 0.0;
  if (f <= center) return (f - left) / (center - left);
  return (right - f) / (right - center);
}

// frames x coeffs, row-major
inline std::vector<std::vector<double>> mfcc(const std::vector<double>& x, const MfccSettings& s) {
  const double pi = std::acos(-1.0);
  const int bins = s.fft_size / 2 + 1;
  const double step = (mel(s.fmax) - mel(s.fmin)) / (s.n_filters + 1);
  std::vector<double> edge(static_cast<std::size_t>(s.n_filters + 2));
  for (int i = 0; i < s.n_filters + 2; ++i) edge[i] = inv_mel(mel(s.fmin) + i * step);

  // Twiddles indexed by (k*n) mod N keep the explicit DFT accurate.
  std::vector<std::complex<double>> twiddle(static_cast<std::size_t>(s.fft_size));
  for (int i = 0; i < s.fft_size; ++i) twiddle[i] = std::polar(1.0, -2.0 * pi * i / s.fft_size);

  std::vector<std::vector<double>> out;
  for (int t = 0; t < s.n_frames; ++t) {
    std::vector<double> frame(static_cast<std::size_t>(s.frame_len));
    for (int n = 0; n < s.frame_len; ++n) {
      const double w = 0.5 * (1.0 - std::cos(2.0 * pi * n / s.frame_len));
      frame[n] = w * x[static_cast<std::size_t>(t * s.hop + n)];
    }
    std::vector<double> power(static_cast<std::size_t>(bins));
    for (int k = 0; k < bins; ++k) {
      std::complex<double> acc = 0.0;
      for (int n = 0; n < s.frame_len; ++n) {
        acc += frame[n] * twiddle[static_cast<std::size_t>((static_cast<long>(k) * n) % s.fft_size)];
      }
      power[k] = std::norm(acc);
    }
    std::vector<double> logmel(static_cast<std::size_t>(s.n_filters));
    for (int m = 0; m < s.n_filters; ++m) {
      double e = 0.0;
      for (int k = 0; k < bins; ++k) {
        e += triangle(k * s.rate / s.fft_size, edge[m], edge[m + 1], edge[m + 2]) * power[k];
      }
      logmel[m] = std::log(e > s.floor ? e : s.floor);
    }
    std::vector<double> c(static_cast<std::size_t>(s.n_coeffs));
    for (int k = 0; k < s.n_coeffs; ++k) {
      double acc = 0.0;
      for (int n = 0; n < s.n_filters; ++n) {
        acc += logmel[n] * std::cos(pi * k * (n + 0.5) / s.n_filters);
      }
      c[k] = acc * (k == 0 ? std::sqrt(1.0 / s.n_filters) : std::sqrt(2.0 / s.n_filters));
    }
    out.push_back(c);
  }
  return out;
}

}  // namespace reference

#endif
