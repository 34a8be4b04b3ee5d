#include "coolkws/trainer.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <sstream>

namespace coolkws {

void TrainConfig::validate() const {
  if (epochs < 1) throw Error(Errc::config, "epochs must be >= 1");
  if (batch_size < 2 || batch_size % 2 != 0) throw Error(Errc::config, "batch_size must be even and >= 2");
  if (patience < 1) throw Error(Errc::config, "patience must be >= 1");
  if (!(lr > 0.0)) throw Error(Errc::config, "lr must be positive");
  if (augment_shift_max < 0 || augment_shift_max > kMaxShift)
    throw Error(Errc::config, "augment_shift_max out of range");
}

void to_json(nlohmann::json& j, const TrainConfig& c) {
  j = {{"epochs", c.epochs}, {"batch_size", c.batch_size}, {"lr", c.lr},
       {"patience", c.patience}, {"seed", c.seed}, {"augment_shift_max", c.augment_shift_max}};
}

void from_json(const nlohmann::json& j, TrainConfig& c) {
  TrainConfig d;
  c.epochs = j.value("epochs", d.epochs);
  c.batch_size = j.value("batch_size", d.batch_size);
  c.lr = j.value("lr", d.lr);
  c.patience = j.value("patience", d.patience);
  c.seed = j.value("seed", d.seed);
  c.augment_shift_max = j.value("augment_shift_max", d.augment_shift_max);
}

TrainResult train_loop(ModelParams<float> init, const TrainConfig& cfg, const EpochData& train,
                       const EpochData& validation) {
  cfg.validate();
  TrainResult result;
  result.params = init;
  ModelParams<float> params = std::move(init);
  auto adam = AdamState<float>::zeros(params.shape);
  EarlyStopping stopper(cfg.patience);

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const std::vector<LabeledWindow> data = train(epoch);
    const std::vector<LabeledWindow> val = validation(epoch);
    if (data.empty() || val.empty()) throw Error(Errc::config, "empty training or validation set");

    std::vector<std::size_t> order(data.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    auto rng = make_rng(cfg.seed, "train.shuffle", static_cast<std::uint64_t>(epoch));
    std::shuffle(order.begin(), order.end(), rng);

    double loss_sum = 0.0;
    std::size_t correct = 0;
    std::vector<LabeledWindow> batch;
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t stop = std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size));
      batch.clear();
      for (std::size_t i = start; i < stop; ++i) batch.push_back(data[order[i]]);
      const auto bg = batch_gradient(params, std::span<const LabeledWindow>(batch));
      loss_sum += bg.loss * static_cast<double>(batch.size());
      correct += bg.correct;
      auto stepped = adam_step(params, bg.grads, adam, cfg.lr);
      params = std::move(stepped.params);
      adam = std::move(stepped.state);
    }

    EpochMetrics m;
    m.epoch = epoch;
    m.train_loss = loss_sum / static_cast<double>(data.size());
    m.train_acc = static_cast<double>(correct) / static_cast<double>(data.size());
    const Evaluation v = evaluate(params, std::span<const LabeledWindow>(val));
    m.val_loss = v.loss;
    m.val_acc = v.accuracy;
    result.history.push_back(m);

    const bool stop = stopper.update(epoch, m.val_loss);
    if (stopper.improved_at(epoch)) {
      result.params = params;
      result.best_epoch = epoch;
    }
    if (stop) break;
  }
  return result;
}

std::vector<LabeledWindow> extract_features(std::span<const LabeledClip> clips,
                                            const DspConfig& dsp, int max_shift, Rng& rng) {
  std::uniform_int_distribution<int> shift(-max_shift, max_shift);
  std::vector<LabeledWindow> out;
  out.reserve(clips.size());
  for (const auto& c : clips) {
    const int s = max_shift > 0 ? shift(rng) : 0;
    const AudioClip shifted = s != 0 ? time_shift(c.clip, s) : c.clip;
    out.push_back({mfcc_window(shifted.samples, dsp), c.label});
  }
  return out;
}

TrainResult pretrain(std::span<const LabeledClip> train, std::span<const LabeledClip> validation,
                     const DspConfig& dsp, const TrainConfig& cfg, const ModelShape& shape) {
  cfg.validate();
  dsp.validate();
  if (train.empty() || validation.empty()) throw Error(Errc::config, "empty task partition");

  auto train_data = [&](int epoch) {
    auto rng = make_rng(cfg.seed, "train.shift", static_cast<std::uint64_t>(epoch));
    return extract_features(train, dsp, cfg.augment_shift_max, rng);
  };
  // One frozen validation draw keeps the per-epoch losses comparable.
  std::vector<LabeledWindow> val;
  {
    auto rng = make_rng(cfg.seed, "val.shift");
    val = extract_features(validation, dsp, cfg.augment_shift_max, rng);
  }
  auto val_data = [&](int) { return val; };
  return train_loop(glorot_init<float>(shape, derive_seed(cfg.seed, "pretrain")), cfg, train_data,
                    val_data);
}

std::vector<LabeledClip> load_task_clips(const TaskSpec& task, std::span<const TaskEntry> entries) {
  const std::filesystem::path root(task.corpus_root);
  std::vector<LabeledClip> out;
  out.reserve(entries.size());
  for (const auto& e : entries) out.push_back({load_clip(root / e.source_path), e.label});
  return out;
}

TrainResult pretrain(const TaskSpec& task, const DspConfig& dsp, const TrainConfig& cfg,
                     const ModelShape& shape) {
  const auto train = load_task_clips(task, task.train);
  const auto val = load_task_clips(task, task.validation);
  return pretrain(train, val, dsp, cfg, shape);
}

void write_history_csv(const std::filesystem::path& path, std::span<const EpochMetrics> history) {
  std::ofstream out(path);
  if (!out) throw Error(Errc::io, "cannot write " + path.string());
  out.precision(17);
  out << "epoch,train_loss,val_loss,train_acc,val_acc\n";
  for (const auto& m : history) {
    out << m.epoch << ',' << m.train_loss << ',' << m.val_loss << ',' << m.train_acc << ','
        << m.val_acc << '\n';
  }
}

std::vector<EpochMetrics> read_history_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::io, "cannot open " + path.string());
  std::string line;
  std::getline(in, line);
  if (line != "epoch,train_loss,val_loss,train_acc,val_acc")
    throw Error(Errc::format, path.string() + ": unexpected history header");
  std::vector<EpochMetrics> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    EpochMetrics m;
    char comma = 0;
    if (!(row >> m.epoch >> comma >> m.train_loss >> comma >> m.val_loss >> comma >> m.train_acc >>
          comma >> m.val_acc)) {
      throw Error(Errc::format, path.string() + ": malformed row '" + line + "'");
    }
    out.push_back(m);
  }
  return out;
}

}  // namespace coolkws
