#ifndef COOLKWS_TRAINER_HPP
#define COOLKWS_TRAINER_HPP

#include "coolkws/dataset.hpp"
#include "coolkws/dsp.hpp"
#include "coolkws/model.hpp"

#include <functional>
#include <optional>
#include <span>
#include <vector>

namespace coolkws {

struct TrainConfig {
  int epochs = 20;
  int batch_size = 64;
  double lr = 1e-3;
  int patience = 3;
  std::uint64_t seed = 0;
  int augment_shift_max = kMaxShift;

  void validate() const;
};

void to_json(nlohmann::json& j, const TrainConfig& c);
void from_json(const nlohmann::json& j, TrainConfig& c);

struct LabeledWindow {
  FeatureWindow x;
  BinaryLabel y = BinaryLabel::non_target;

  int target() const noexcept { return static_cast<int>(y); }
};

struct LabeledClip {
  AudioClip clip;
  BinaryLabel label = BinaryLabel::non_target;
};

struct EpochMetrics {
  int epoch = 0;  // 1-based
  double train_loss = 0.0;
  double val_loss = 0.0;
  double train_acc = 0.0;
  double val_acc = 0.0;
};

/// -log(max(p[target], 1e-12)).
template <typename Vec>
double cross_entropy(const Vec& probs, int target) {
  if (target < 0 || target >= probs.size()) throw Error(Errc::range, "class index out of range");
  return -std::log(std::max(static_cast<double>(probs[target]), kProbFloor));
}

struct Evaluation {
  double loss = 0.0;
  double accuracy = 0.0;
};

/// Mean cross-entropy and argmax accuracy (ties predict class 0). Losses are
/// summed in sample order, so the result is reproducible bit for bit.
template <typename Scalar>
Evaluation evaluate(const ModelParams<Scalar>& params, std::span<const LabeledWindow> data) {
  if (data.empty()) throw Error(Errc::config, "cannot evaluate an empty dataset");
  double loss = 0.0;
  std::size_t correct = 0;
  for (const auto& sample : data) {
    const auto probs = predict(params, sample.x.mfcc);
    loss += cross_entropy(probs, sample.target());
    correct += argmax_class(probs) == sample.target() ? 1 : 0;
  }
  const auto n = static_cast<double>(data.size());
  return {loss / n, static_cast<double>(correct) / n};
}

template <typename Scalar>
struct BatchGradient {
  double loss = 0.0;
  std::size_t correct = 0;
  Gradients<Scalar> grads;
};

/// Mean loss and mean gradient over a batch.
template <typename Scalar>
BatchGradient<Scalar> batch_gradient(const ModelParams<Scalar>& params,
                                     std::span<const LabeledWindow> batch) {
  if (batch.empty()) throw Error(Errc::config, "empty batch");
  BatchGradient<Scalar> out;
  out.grads = Gradients<Scalar>::zeros(params.shape);
  for (const auto& sample : batch) {
    const auto fwd = forward(params, sample.x.mfcc);
    auto back = backward(params, fwd.trace, sample.target(), fwd.probs);
    out.loss += back.loss;
    out.correct += argmax_class(fwd.probs) == sample.target() ? 1 : 0;
    zip_tensors(out.grads, back.grads, [](auto& acc, const auto& g) { acc += g; });
  }
  const auto scale = Scalar(1) / static_cast<Scalar>(batch.size());
  out.grads.for_each([&](auto& g) { g *= scale; });
  out.loss /= static_cast<double>(batch.size());
  return out;
}

template <typename Scalar>
struct AdamState {
  Gradients<Scalar> m;
  Gradients<Scalar> v;
  std::int64_t t = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  static AdamState zeros(const ModelShape& shape) {
    return {Gradients<Scalar>::zeros(shape), Gradients<Scalar>::zeros(shape)};
  }
};

template <typename Scalar>
struct AdamResult {
  ModelParams<Scalar> params;
  AdamState<Scalar> state;
};

/// One bias-corrected Adam update. Non-finite gradients are rejected.
template <typename Scalar>
AdamResult<Scalar> adam_step(const ModelParams<Scalar>& params, const Gradients<Scalar>& grads,
                             const AdamState<Scalar>& state, double lr) {
  if (!params.same_shape(grads) || !params.same_shape(state.m)) {
    throw Error(Errc::shape, "adam: parameter, gradient and moment shapes differ");
  }
  int tensor = 0;
  grads.for_each([&](const auto& g) {
    if (!g.allFinite()) {
      throw Error(Errc::non_finite, "adam: gradient tensor " + std::to_string(tensor) +
                                        " contains non-finite values; update rejected");
    }
    ++tensor;
  });

  AdamResult<Scalar> r{params, state};
  r.state.t += 1;
  const auto b1 = static_cast<Scalar>(state.beta1);
  const auto b2 = static_cast<Scalar>(state.beta2);
  const auto c1 = static_cast<Scalar>(1.0 - std::pow(state.beta1, static_cast<double>(r.state.t)));
  const auto c2 = static_cast<Scalar>(1.0 - std::pow(state.beta2, static_cast<double>(r.state.t)));
  const auto step = static_cast<Scalar>(lr);
  const auto eps = static_cast<Scalar>(state.eps);

  zip_tensors(r.state.m, grads, [&](auto& m, const auto& g) { m = b1 * m + (Scalar(1) - b1) * g; });
  zip_tensors(r.state.v, grads, [&](auto& v, const auto& g) {
    v = b2 * v + (Scalar(1) - b2) * g.cwiseProduct(g);
  });
  // params -= lr * mhat / (sqrt(vhat) + eps), tensor by tensor.
  auto update = [&](auto& p, const auto& m, const auto& v) {
    p.array() -= step * (m.array() / c1) / ((v.array() / c2).sqrt() + eps);
  };
  update(r.params.conv_w, r.state.m.conv_w, r.state.v.conv_w);
  update(r.params.conv_b, r.state.m.conv_b, r.state.v.conv_b);
  update(r.params.lin_w, r.state.m.lin_w, r.state.v.lin_w);
  update(r.params.dnn_w, r.state.m.dnn_w, r.state.v.dnn_w);
  update(r.params.dnn_b, r.state.m.dnn_b, r.state.v.dnn_b);
  update(r.params.out_w, r.state.m.out_w, r.state.v.out_w);
  update(r.params.out_b, r.state.m.out_b, r.state.v.out_b);
  return r;
}

/// Patience-based stopping on validation loss.
class EarlyStopping {
 public:
  explicit EarlyStopping(int patience) : patience_(patience) {}

  /// Records one epoch (1-based)'s validation loss; returns true when training should
  /// stop. An epoch only counts as an improvement if strictly better.
  bool update(int epoch, double val_loss) {
    if (best_ == 0 || val_loss < best_loss_) {
      best_ = epoch;
      best_loss_ = val_loss;
      stale_ = 0;
      return false;
    }
    return ++stale_ >= patience_;
  }

  bool improved_at(int epoch) const noexcept { return best_ != 0 && best_ == epoch; }
  /// 0 until the first update.
  int best_epoch() const noexcept { return best_; }
  double best_loss() const noexcept { return best_loss_; }

 private:
  int patience_;
  int stale_ = 0;
  int best_ = 0;
  double best_loss_ = 0.0;
};

struct TrainResult {
  ModelParams<float> params;  // from the best validation epoch
  std::vector<EpochMetrics> history;
  int best_epoch = 0;
};

using EpochData = std::function<std::vector<LabeledWindow>(int epoch)>;

/// Mini-batch Adam over features supplied per epoch, with early stopping
/// and best-epoch restoration.
TrainResult train_loop(ModelParams<float> init, const TrainConfig& cfg, const EpochData& train,
                       const EpochData& validation);

/// Extracts features for `clips`, each shifted by a uniform draw from
/// [-max_shift, max_shift] (0 disables the shift).
std::vector<LabeledWindow> extract_features(std::span<const LabeledClip> clips,
                                            const DspConfig& dsp, int max_shift, Rng& rng);

/// Offline pretraining from clips with fresh time shifts every training
/// epoch and a fixed validation shift draw.
TrainResult pretrain(std::span<const LabeledClip> train, std::span<const LabeledClip> validation,
                     const DspConfig& dsp, const TrainConfig& cfg, const ModelShape& shape);

std::vector<LabeledClip> load_task_clips(const TaskSpec& task, std::span<const TaskEntry> entries);

TrainResult pretrain(const TaskSpec& task, const DspConfig& dsp, const TrainConfig& cfg,
                     const ModelShape& shape);

void write_history_csv(const std::filesystem::path& path, std::span<const EpochMetrics> history);
std::vector<EpochMetrics> read_history_csv(const std::filesystem::path& path);

}  // namespace coolkws

#endif  // COOLKWS_TRAINER_HPP
