#ifndef COOLKWS_TESTS_FIXTURES_HPP
#define COOLKWS_TESTS_FIXTURES_HPP

#include "coolkws/audio.hpp"
#include "coolkws/random.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <vector>
#include <numbers>
#include <string>

#include <unistd.h>

namespace fixtures {

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("coolkws_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline Eigen::VectorXf sine(Eigen::Index n, double hz, double amplitude, double rate = 16000.0) {
  Eigen::VectorXf x(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    x[i] = static_cast<float>(amplitude * std::sin(2.0 * std::numbers::pi * hz * i / rate));
  }
  return x;
}

inline Eigen::VectorXf white_noise(Eigen::Index n, double amplitude, std::uint64_t seed) {
  coolkws::Rng rng(seed);
  std::uniform_real_distribution<double> u(-amplitude, amplitude);
  Eigen::VectorXf x(n);
  for (Eigen::Index i = 0; i < n; ++i) x[i] = static_cast<float>(u(rng));
  return x;
}

/// A tone burst: `hz_a` for the first half of [begin, end), `hz_b` for the second,
/// with 5 ms raised-cosine ramps.
inline Eigen::VectorXf tone_word(Eigen::Index length, Eigen::Index begin, Eigen::Index end, double hz_a,
                                 double hz_b, double amplitude) {
  Eigen::VectorXf x = Eigen::VectorXf::Zero(length);
  const Eigen::Index mid = (begin + end) / 2;
  const Eigen::Index ramp = 80;
  double phase = 0.0;
  for (Eigen::Index i = begin; i < end; ++i) {
    const double hz = i < mid ? hz_a : hz_b;
    phase += 2.0 * std::numbers::pi * hz / 16000.0;
    double env = 1.0;
    if (i - begin < ramp) env = 0.5 - 0.5 * std::cos(std::numbers::pi * (i - begin) / ramp);
    if (end - 1 - i < ramp) env = 0.5 - 0.5 * std::cos(std::numbers::pi * (end - 1 - i) / ramp);
    x[i] = static_cast<float>(amplitude * env * std::sin(phase));
  }
  return x;
}

/// Writes a PCM WAV with arbitrary header fields (for rejection tests).
inline void write_raw_wav(const std::filesystem::path& path, int channels, int rate, int bits,
                          const std::vector<std::int16_t>& data) {
  std::ofstream out(path, std::ios::binary);
  auto u32 = [&](std::uint32_t v) { for (int i = 0; i < 4; ++i) out.put(static_cast<char>((v >> (8 * i)) & 0xFF)); };
  auto u16 = [&](std::uint16_t v) { out.put(static_cast<char>(v & 0xFF)); out.put(static_cast<char>(v >> 8)); };
  const auto bytes = static_cast<std::uint32_t>(data.size() * 2);
  out.write("RIFF", 4);
  u32(36 + bytes);
  out.write("WAVEfmt ", 8);
  u32(16);
  u16(1);
  u16(static_cast<std::uint16_t>(channels));
  u32(static_cast<std::uint32_t>(rate));
  u32(static_cast<std::uint32_t>(rate * channels * bits / 8));
  u16(static_cast<std::uint16_t>(channels * bits / 8));
  u16(static_cast<std::uint16_t>(bits));
  out.write("data", 4);
  u32(bytes);
  for (auto v : data) u16(static_cast<std::uint16_t>(v));
}

}  // namespace fixtures

#endif
