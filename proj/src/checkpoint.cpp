#include "coolkws/model.hpp"

#include <zlib.h>

#include <bit>
#include <fstream>
#include <iterator>
#include <sstream>
#include <vector>

namespace coolkws {
namespace {

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

class Reader {
 public:
  explicit Reader(const std::string& bytes, std::size_t end) : bytes_(bytes), end_(end) {}

  std::uint32_t u32() {
    if (pos_ + 4 > end_) throw Error(Errc::corruption, "checkpoint truncated");
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) {
      v |= std::uint32_t(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
    }
    pos_ += 4;
    return v;
  }

  float f32() { return std::bit_cast<float>(u32()); }
  void skip(std::size_t n) { pos_ += n; }
  std::size_t position() const { return pos_; }

 private:
  const std::string& bytes_;
  std::size_t end_;
  std::size_t pos_ = 0;
};

std::vector<std::uint32_t> dims_of(const ModelParams<float>& p, int tensor) {
  const ModelShape& s = p.shape;
  auto u = [](auto v) { return static_cast<std::uint32_t>(v); };
  switch (tensor) {
    case 0: return {u(s.n_maps), 1, u(s.filter_coeffs), u(s.filter_frames)};
    case 1: return {u(s.n_maps)};
    case 2: return {u(p.lin_w.rows()), u(p.lin_w.cols())};
    case 3: return {u(p.dnn_w.rows()), u(p.dnn_w.cols())};
    case 4: return {u(p.dnn_b.size())};
    case 5: return {u(p.out_w.rows()), u(p.out_w.cols())};
    default: return {u(p.out_b.size())};
  }
}

}  // namespace

std::uint32_t crc32_of(const std::string& bytes) {
  return static_cast<std::uint32_t>(
      ::crc32(0L, reinterpret_cast<const Bytef*>(bytes.data()), static_cast<uInt>(bytes.size())));
}

std::string serialize_checkpoint(const ModelParams<float>& params) {
  std::string payload;
  int index = 0;
  params.for_each([&](const auto& t) {
    const auto dims = dims_of(params, index++);
    put_u32(payload, static_cast<std::uint32_t>(dims.size()));
    for (auto d : dims) put_u32(payload, d);
    for (Eigen::Index i = 0; i < t.size(); ++i) put_u32(payload, std::bit_cast<std::uint32_t>(t.data()[i]));
  });
  std::string out(kCheckpointMagic, sizeof(kCheckpointMagic));
  out += payload;
  put_u32(out, crc32_of(payload));
  return out;
}

ModelParams<float> deserialize_checkpoint(const std::string& bytes) {
  constexpr std::size_t magic = sizeof(kCheckpointMagic);
  if (bytes.size() < magic || bytes.compare(0, magic, kCheckpointMagic, magic) != 0) {
    throw Error(Errc::incompatible_checkpoint, "bad magic");
  }
  if (bytes.size() < magic + 4) throw Error(Errc::corruption, "checkpoint truncated");
  const std::size_t crc_at = bytes.size() - 4;
  const std::string payload = bytes.substr(magic, crc_at - magic);
  Reader tail(bytes, bytes.size());
  tail.skip(crc_at);
  if (tail.u32() != crc32_of(payload)) throw Error(Errc::corruption, "CRC mismatch");

  Reader in(payload, payload.size());
  std::vector<std::vector<std::uint32_t>> dims(7);
  std::vector<std::vector<float>> data(7);
  for (int t = 0; t < 7; ++t) {
    const std::uint32_t rank = in.u32();
    if (rank == 0 || rank > 4) throw Error(Errc::corruption, "implausible tensor rank");
    std::uint64_t count = 1;
    for (std::uint32_t r = 0; r < rank; ++r) {
      dims[t].push_back(in.u32());
      count *= dims[t].back();
    }
    if (count * 4 > payload.size()) throw Error(Errc::corruption, "tensor larger than file");
    data[t].resize(count);
    for (auto& v : data[t]) v = in.f32();
  }
  if (in.position() != payload.size()) throw Error(Errc::corruption, "trailing bytes");

  const auto& conv = dims[0];
  if (conv.size() != 4 || dims[1].size() != 1 || dims[2].size() != 2 || dims[3].size() != 2 ||
      dims[4].size() != 1 || dims[5].size() != 2 || dims[6].size() != 1) {
    throw Error(Errc::incompatible_checkpoint, "unexpected tensor ranks");
  }
  ModelShape shape;
  shape.n_maps = static_cast<int>(conv[0]);
  shape.filter_coeffs = static_cast<int>(conv[2]);
  shape.filter_frames = static_cast<int>(conv[3]);
  shape.input_frames = shape.filter_frames;
  shape.bottleneck = static_cast<int>(dims[2][1]);
  shape.dense = static_cast<int>(dims[3][1]);
  shape.classes = static_cast<int>(dims[5][1]);
  if (shape.n_maps == 0 || dims[2][0] % conv[0] != 0) {
    throw Error(Errc::incompatible_checkpoint, "bottleneck rows do not match feature maps");
  }
  const int positions = static_cast<int>(dims[2][0] / conv[0]);
  shape.input_coeffs = (positions - 1) * shape.stride + shape.filter_coeffs;

  ModelParams<float> p;
  try {
    p = ModelParams<float>::zeros(shape);
  } catch (const Error& e) {
    throw Error(Errc::incompatible_checkpoint, e.what());
  }
  int index = 0;
  bool consistent = true;
  p.for_each([&](auto& t) {
    consistent = consistent && dims_of(p, index) == dims[index] &&
                 static_cast<std::size_t>(t.size()) == data[index].size();
    if (consistent) std::copy(data[index].begin(), data[index].end(), t.data());
    ++index;
  });
  if (!consistent) throw Error(Errc::incompatible_checkpoint, "tensor shapes disagree");
  return p;
}

void save_checkpoint(const ModelParams<float>& params, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Errc::io, "cannot write " + path.string());
  const std::string bytes = serialize_checkpoint(params);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(Errc::io, "short write to " + path.string());
}

ModelParams<float> load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::io, "cannot open " + path.string());
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return deserialize_checkpoint(bytes);
}

}  // namespace coolkws
