#ifndef COOLKWS_MODEL_HPP
#define COOLKWS_MODEL_HPP

#include "coolkws/error.hpp"
#include "coolkws/random.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <string>

namespace coolkws {

/// Geometry of the one-layer frequency-strided CNN.
///
/// The convolution filter spans every input frame and slides along the
/// cepstral axis, so each feature map yields `positions()` activations.
struct ModelShape {
  int input_frames = 32;
  int input_coeffs = 40;
  int filter_frames = 32;
  int filter_coeffs = 8;
  int stride = 4;
  int n_maps = 186;
  int bottleneck = 32;
  int dense = 128;
  int classes = 2;

  int positions() const noexcept { return (input_coeffs - filter_coeffs) / stride + 1; }
  int patch_size() const noexcept { return filter_frames * filter_coeffs; }
  int conv_outputs() const noexcept { return n_maps * positions(); }

  void validate() const {
    if (filter_frames != input_frames) throw Error(Errc::config, "filter must span all frames");
    if (filter_coeffs > input_coeffs || stride < 1 || (input_coeffs - filter_coeffs) % stride)
      throw Error(Errc::config, "filter/stride do not tile the coefficient axis");
    if (n_maps < 1 || bottleneck < 1 || dense < 1 || classes != 2)
      throw Error(Errc::config, "invalid layer sizes");
  }

  /// Reduced variant used for finite-difference checks.
  static ModelShape shrunken() {
    ModelShape s;
    s.n_maps = 8;
    s.dense = 16;
    return s;
  }

  friend bool operator==(const ModelShape&, const ModelShape&) = default;
};

template <typename Scalar>
struct ModelParams {
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  ModelShape shape;
  Matrix conv_w;  // n_maps x patch_size, patch flattened frame-major (frame * filter_coeffs + coeff)
  Vector conv_b;  // n_maps
  Matrix lin_w;   // conv_outputs x bottleneck, row index map + n_maps * position
  Matrix dnn_w;   // bottleneck x dense
  Vector dnn_b;   // dense
  Matrix out_w;   // dense x classes
  Vector out_b;   // classes

  static ModelParams zeros(const ModelShape& shape) {
    shape.validate();
    ModelParams p;
    p.shape = shape;
    p.conv_w = Matrix::Zero(shape.n_maps, shape.patch_size());
    p.conv_b = Vector::Zero(shape.n_maps);
    p.lin_w = Matrix::Zero(shape.conv_outputs(), shape.bottleneck);
    p.dnn_w = Matrix::Zero(shape.bottleneck, shape.dense);
    p.dnn_b = Vector::Zero(shape.dense);
    p.out_w = Matrix::Zero(shape.dense, shape.classes);
    p.out_b = Vector::Zero(shape.classes);
    return p;
  }

  /// Visits every tensor in checkpoint order.
  template <typename F>
  void for_each(F&& f) {
    f(conv_w); f(conv_b); f(lin_w); f(dnn_w); f(dnn_b); f(out_w); f(out_b);
  }
  template <typename F>
  void for_each(F&& f) const {
    f(conv_w); f(conv_b); f(lin_w); f(dnn_w); f(dnn_b); f(out_w); f(out_b);
  }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for_each([&](const auto& t) { n += static_cast<std::size_t>(t.size()); });
    return n;
  }

  bool all_finite() const {
    bool ok = true;
    for_each([&](const auto& t) { ok = ok && t.allFinite(); });
    return ok;
  }

  Scalar squared_norm() const {
    Scalar s(0);
    for_each([&](const auto& t) { s += t.squaredNorm(); });
    return s;
  }

  template <typename Other>
  ModelParams<Other> cast() const {
    ModelParams<Other> p;
    p.shape = shape;
    p.conv_w = conv_w.template cast<Other>();
    p.conv_b = conv_b.template cast<Other>();
    p.lin_w = lin_w.template cast<Other>();
    p.dnn_w = dnn_w.template cast<Other>();
    p.dnn_b = dnn_b.template cast<Other>();
    p.out_w = out_w.template cast<Other>();
    p.out_b = out_b.template cast<Other>();
    return p;
  }

  bool same_shape(const ModelParams& o) const {
    return shape == o.shape && conv_w.rows() == o.conv_w.rows() &&
           conv_w.cols() == o.conv_w.cols() && lin_w.rows() == o.lin_w.rows();
  }

  /// Bitwise equality, so -0.0 != 0.0 and NaN payloads are compared too.
  bool bitwise_equal(const ModelParams& o) const;
};

/// Gradients live in the same tensor family as the parameters.
template <typename Scalar>
using Gradients = ModelParams<Scalar>;

/// Applies `f(a_tensor, b_tensor)` pairwise in checkpoint order.
template <typename A, typename B, typename F>
void zip_tensors(A&& a, B&& b, F&& f) {
  f(a.conv_w, b.conv_w); f(a.conv_b, b.conv_b); f(a.lin_w, b.lin_w);
  f(a.dnn_w, b.dnn_w); f(a.dnn_b, b.dnn_b); f(a.out_w, b.out_w); f(a.out_b, b.out_b);
}

template <typename Scalar>
bool ModelParams<Scalar>::bitwise_equal(const ModelParams& o) const {
  if (!same_shape(o)) return false;
  bool eq = true;
  zip_tensors(*this, o, [&](const auto& a, const auto& b) {
    eq = eq && a.size() == b.size() &&
         std::memcmp(a.data(), b.data(), sizeof(Scalar) * static_cast<std::size_t>(a.size())) == 0;
  });
  return eq;
}

/// theta - lr * grad, returned as a new parameter set.
template <typename Scalar>
ModelParams<Scalar> sgd_step(const ModelParams<Scalar>& params, const Gradients<Scalar>& grads,
                             double lr) {
  if (!params.same_shape(grads)) throw Error(Errc::shape, "gradient shape mismatch");
  ModelParams<Scalar> next = params;
  const auto step = static_cast<Scalar>(lr);
  zip_tensors(next, grads, [&](auto& p, const auto& g) { p -= step * g; });
  return next;
}

/// Glorot-uniform weights, zero biases.
template <typename Scalar>
ModelParams<Scalar> glorot_init(const ModelShape& shape, std::uint64_t seed) {
  auto p = ModelParams<Scalar>::zeros(shape);
  Rng rng = make_rng(seed, "model.init");
  auto fill = [&](auto& m, double fan_in, double fan_out) {
    const double limit = std::sqrt(6.0 / (fan_in + fan_out));
    std::uniform_real_distribution<double> dist(-limit, limit);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = static_cast<Scalar>(dist(rng));
  };
  const double receptive = shape.patch_size();
  fill(p.conv_w, receptive, receptive * shape.n_maps);
  fill(p.lin_w, shape.conv_outputs(), shape.bottleneck);
  fill(p.dnn_w, shape.bottleneck, shape.dense);
  fill(p.out_w, shape.dense, shape.classes);
  return p;
}

/// Activations cached by forward() for backward().
template <typename Scalar>
struct ForwardTrace {
  using Matrix = typename ModelParams<Scalar>::Matrix;
  using Vector = typename ModelParams<Scalar>::Vector;

  ModelShape shape;
  Matrix patches;    // patch_size x positions
  Matrix conv_pre;   // n_maps x positions
  Vector conv_act;   // conv_outputs, column-major flatten of relu(conv_pre)
  Vector bottleneck;
  Vector dense_pre;
  Vector dense_act;
  Vector logits;
};

template <typename Scalar>
struct ForwardResult {
  typename ModelParams<Scalar>::Vector probs;
  ForwardTrace<Scalar> trace;
};

template <typename Scalar>
typename ModelParams<Scalar>::Vector softmax(const typename ModelParams<Scalar>::Vector& logits) {
  const Scalar top = logits.maxCoeff();
  typename ModelParams<Scalar>::Vector e = (logits.array() - top).exp().matrix();
  return e / e.sum();
}

template <typename Scalar, typename Derived>
ForwardResult<Scalar> forward(const ModelParams<Scalar>& params,
                              const Eigen::MatrixBase<Derived>& input) {
  const ModelShape& s = params.shape;
  if (input.rows() != s.input_frames || input.cols() != s.input_coeffs) {
    throw Error(Errc::shape, "input is " + std::to_string(input.rows()) + "x" +
                                 std::to_string(input.cols()) + ", model expects " +
                                 std::to_string(s.input_frames) + "x" +
                                 std::to_string(s.input_coeffs));
  }
  using Matrix = typename ModelParams<Scalar>::Matrix;
  using Vector = typename ModelParams<Scalar>::Vector;
  const Matrix x = input.template cast<Scalar>();

  ForwardResult<Scalar> r;
  ForwardTrace<Scalar>& tr = r.trace;
  tr.shape = s;
  const int positions = s.positions();
  tr.patches.resize(s.patch_size(), positions);
  for (int p = 0; p < positions; ++p) {
    for (int t = 0; t < s.filter_frames; ++t) {
      tr.patches.col(p).segment(t * s.filter_coeffs, s.filter_coeffs) =
          x.row(t).segment(p * s.stride, s.filter_coeffs).transpose();
    }
  }
  tr.conv_pre.noalias() = params.conv_w * tr.patches;
  tr.conv_pre.colwise() += params.conv_b;
  const Matrix act = tr.conv_pre.cwiseMax(Scalar(0));
  tr.conv_act = Eigen::Map<const Vector>(act.data(), act.size());
  tr.bottleneck.noalias() = params.lin_w.transpose() * tr.conv_act;
  tr.dense_pre.noalias() = params.dnn_w.transpose() * tr.bottleneck;
  tr.dense_pre += params.dnn_b;
  tr.dense_act = tr.dense_pre.cwiseMax(Scalar(0));
  tr.logits.noalias() = params.out_w.transpose() * tr.dense_act;
  tr.logits += params.out_b;
  r.probs = softmax<Scalar>(tr.logits);
  return r;
}

template <typename Scalar, typename Derived>
typename ModelParams<Scalar>::Vector predict(const ModelParams<Scalar>& params,
                                             const Eigen::MatrixBase<Derived>& input) {
  return forward(params, input).probs;
}

/// Argmax with ties going to class 0.
template <typename Vec>
int argmax_class(const Vec& probs) {
  return probs[1] > probs[0] ? 1 : 0;
}

inline constexpr double kProbFloor = 1e-12;

template <typename Scalar>
struct BackwardResult {
  double loss = 0.0;
  Gradients<Scalar> grads;
};

/// Cross-entropy loss of one sample and its exact gradient.
template <typename Scalar>
BackwardResult<Scalar> backward(const ModelParams<Scalar>& params,
                                const ForwardTrace<Scalar>& trace, int target,
                                const typename ModelParams<Scalar>::Vector& probs) {
  const ModelShape& s = params.shape;
  if (!(trace.shape == s) || trace.conv_pre.rows() != s.n_maps ||
      trace.conv_pre.cols() != s.positions() || probs.size() != s.classes) {
    throw Error(Errc::stale_trace, "trace was produced for a different model");
  }
  if (target < 0 || target >= s.classes) throw Error(Errc::range, "class index out of range");
  using Matrix = typename ModelParams<Scalar>::Matrix;
  using Vector = typename ModelParams<Scalar>::Vector;

  BackwardResult<Scalar> r;
  r.loss = -std::log(std::max(static_cast<double>(probs[target]), kProbFloor));
  Gradients<Scalar>& g = r.grads;
  g.shape = s;

  Vector d_logits = probs;
  d_logits[target] -= Scalar(1);
  g.out_w.noalias() = trace.dense_act * d_logits.transpose();
  g.out_b = d_logits;

  Vector d_dense = params.out_w * d_logits;
  d_dense = (trace.dense_pre.array() > Scalar(0)).select(d_dense, Scalar(0));
  g.dnn_w.noalias() = trace.bottleneck * d_dense.transpose();
  g.dnn_b = d_dense;

  const Vector d_bottleneck = params.dnn_w * d_dense;
  g.lin_w.noalias() = trace.conv_act * d_bottleneck.transpose();

  const Vector d_act = params.lin_w * d_bottleneck;
  Matrix d_conv = Eigen::Map<const Matrix>(d_act.data(), s.n_maps, s.positions());
  d_conv = (trace.conv_pre.array() > Scalar(0)).select(d_conv, Scalar(0));
  g.conv_w.noalias() = d_conv * trace.patches.transpose();
  g.conv_b = d_conv.rowwise().sum();
  return r;
}

// Checkpoint: "COOLKWS1", then per tensor in for_each order a u32 rank, the
// u32 dims (first index fastest) and little-endian f32 data; conv_w is
// stored as rank 4 (n_maps, 1, filter_coeffs, filter_frames). A trailing
// CRC32 covers everything after the magic.
inline constexpr char kCheckpointMagic[8] = {'C', 'O', 'O', 'L', 'K', 'W', 'S', '1'};

std::string serialize_checkpoint(const ModelParams<float>& params);
ModelParams<float> deserialize_checkpoint(const std::string& bytes);
void save_checkpoint(const ModelParams<float>& params, const std::filesystem::path& path);
ModelParams<float> load_checkpoint(const std::filesystem::path& path);
std::uint32_t crc32_of(const std::string& bytes);

}  // namespace coolkws

#endif  // COOLKWS_MODEL_HPP
