#include "coolkws/audio.hpp"

#include "coolkws/error.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstring>
#include <fstream>
#include <vector>

namespace coolkws {
namespace {

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

std::uint32_t le32(const unsigned char* p) {
  return std::uint32_t(p[0]) | (std::uint32_t(p[1]) << 8) | (std::uint32_t(p[2]) << 16) |
         (std::uint32_t(p[3]) << 24);
}

std::uint16_t le16(const unsigned char* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

void put32(std::ostream& out, std::uint32_t v) {
  const std::array<char, 4> b{char(v & 0xFF), char((v >> 8) & 0xFF), char((v >> 16) & 0xFF),
                              char((v >> 24) & 0xFF)};
  out.write(b.data(), 4);
}

void put16(std::ostream& out, std::uint16_t v) {
  const std::array<char, 2> b{char(v & 0xFF), char((v >> 8) & 0xFF)};
  out.write(b.data(), 2);
}

struct ParsedWav {
  WavInfo info;
  std::streamoff data_offset = 0;
  std::uint32_t data_bytes = 0;
};

ParsedWav parse_header(std::istream& in, const std::string& name) {
  unsigned char riff[12];
  if (!in.read(reinterpret_cast<char*>(riff), 12) || std::memcmp(riff, "RIFF", 4) != 0 ||
      std::memcmp(riff + 8, "WAVE", 4) != 0) {
    throw Error(Errc::format, name + ": not a RIFF/WAVE file");
  }
  ParsedWav parsed;
  bool have_fmt = false;
  unsigned char chunk[8];
  while (in.read(reinterpret_cast<char*>(chunk), 8)) {
    const std::uint32_t size = le32(chunk + 4);
    if (std::memcmp(chunk, "fmt ", 4) == 0) {
      if (size < 16) throw Error(Errc::format, name + ": short fmt chunk");
      std::vector<unsigned char> fmt(size);
      if (!in.read(reinterpret_cast<char*>(fmt.data()), size))
        throw Error(Errc::format, name + ": truncated fmt chunk");
      std::uint16_t tag = le16(fmt.data());
      if (tag == kFormatExtensible && size >= 26) tag = le16(fmt.data() + 24);
      if (tag != kFormatPcm) throw Error(Errc::format, name + ": not integer PCM");
      parsed.info.channels = le16(fmt.data() + 2);
      parsed.info.sample_rate_hz = static_cast<int>(le32(fmt.data() + 4));
      parsed.info.bits_per_sample = le16(fmt.data() + 14);
      have_fmt = true;
      if (size & 1u) in.ignore(1);
    } else if (std::memcmp(chunk, "data", 4) == 0) {
      if (!have_fmt) throw Error(Errc::format, name + ": data chunk before fmt chunk");
      parsed.data_offset = in.tellg();
      parsed.data_bytes = size;
      const int block = parsed.info.channels * parsed.info.bits_per_sample / 8;
      parsed.info.frames = block > 0 ? size / static_cast<std::uint32_t>(block) : 0;
      return parsed;
    } else {
      in.ignore(static_cast<std::streamsize>(size) + (size & 1u));
    }
  }
  throw Error(Errc::format, name + ": missing data chunk");
}

void require_supported(const WavInfo& info, const std::string& name) {
  if (info.channels != 1) throw Error(Errc::format, name + ": expected mono, got " +
                                                        std::to_string(info.channels) + " channels");
  if (info.bits_per_sample != 16)
    throw Error(Errc::format, name + ": expected 16-bit PCM, got " +
                                  std::to_string(info.bits_per_sample) + "-bit");
  if (info.sample_rate_hz != kSampleRate)
    throw Error(Errc::sample_rate, name + ": " + std::to_string(info.sample_rate_hz) + " Hz");
}

}  // namespace

WavInfo read_wav_info(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::io, "cannot open " + path.string());
  return parse_header(in, path.string()).info;
}

AudioClip read_wav(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::io, "cannot open " + path.string());
  const ParsedWav parsed = parse_header(in, path.string());
  require_supported(parsed.info, path.string());

  std::vector<unsigned char> raw(parsed.data_bytes);
  in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  const auto got = static_cast<std::size_t>(in.gcount());

  AudioClip clip;
  clip.sample_rate_hz = parsed.info.sample_rate_hz;
  clip.source_path = path.string();
  clip.samples.resize(static_cast<Eigen::Index>(got / 2));
  for (Eigen::Index i = 0; i < clip.samples.size(); ++i) {
    const auto v = static_cast<std::int16_t>(le16(raw.data() + 2 * i));
    clip.samples[i] = static_cast<float>(v) / 32768.0f;
  }
  return clip;
}

Eigen::VectorXf fit_to_length(const Eigen::VectorXf& samples, Eigen::Index length) {
  if (samples.size() == length) return samples;
  Eigen::VectorXf out = Eigen::VectorXf::Zero(length);
  if (samples.size() < length) {
    out.head(samples.size()) = samples;
  } else {
    out = samples.segment((samples.size() - length) / 2, length);
  }
  return out;
}

AudioClip load_clip(const std::filesystem::path& path) {
  AudioClip clip = read_wav(path);
  clip.samples = fit_to_length(clip.samples, kClipSamples);
  return clip;
}

void write_wav(const std::filesystem::path& path, const Eigen::VectorXf& samples,
               int sample_rate_hz) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Errc::io, "cannot write " + path.string());
  const auto data_bytes = static_cast<std::uint32_t>(samples.size() * 2);
  out.write("RIFF", 4);
  put32(out, 36 + data_bytes);
  out.write("WAVEfmt ", 8);
  put32(out, 16);
  put16(out, kFormatPcm);
  put16(out, 1);
  put32(out, static_cast<std::uint32_t>(sample_rate_hz));
  put32(out, static_cast<std::uint32_t>(sample_rate_hz * 2));
  put16(out, 2);
  put16(out, 16);
  out.write("data", 4);
  put32(out, data_bytes);
  std::vector<char> buf(data_bytes);
  for (Eigen::Index i = 0; i < samples.size(); ++i) {
    const double scaled = std::nearbyint(static_cast<double>(samples[i]) * 32768.0);
    const auto q = static_cast<std::int16_t>(std::clamp(scaled, -32768.0, 32767.0));
    const auto u = static_cast<std::uint16_t>(q);
    buf[2 * i] = static_cast<char>(u & 0xFF);
    buf[2 * i + 1] = static_cast<char>(u >> 8);
  }
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (!out) throw Error(Errc::io, "short write to " + path.string());
}

bool all_finite_in_range(const Eigen::VectorXf& samples) noexcept {
  for (float v : samples) {
    if (!std::isfinite(v) || v < -1.0f || v > 1.0f) return false;
  }
  return true;
}

}  // namespace coolkws
