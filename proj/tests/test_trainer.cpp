#include "coolkws/trainer.hpp"

#include "support/fixtures.hpp"

#include <doctest.h>

#include <cmath>
#include <cstring>

using namespace coolkws;

namespace {

/// Class-dependent offset pattern plus Gaussian noise; separable by a linear map.
std::vector<LabeledWindow> separable_windows(int n, std::uint64_t seed, double noise = 0.5) {
  Rng rng(seed);
  std::normal_distribution<double> g(0.0, noise);
  std::vector<LabeledWindow> out;
  for (int i = 0; i < n; ++i) {
    const bool target = i % 2 == 1;
    Eigen::MatrixXf x(32, 40);
    for (Eigen::Index c = 0; c < 40; ++c) {
      for (Eigen::Index r = 0; r < 32; ++r) {
        const double mean = (c < 20 ? 1.0 : -1.0) * (target ? 1.0 : -1.0);
        x(r, c) = static_cast<float>(mean + g(rng));
      }
    }
    out.push_back({{x, 0}, target ? BinaryLabel::target : BinaryLabel::non_target});
  }
  return out;
}

std::vector<LabeledClip> tone_clips(int n, std::uint64_t seed) {
  std::vector<LabeledClip> out;
  for (int i = 0; i < n; ++i) {
    AudioClip clip;
    const bool target = i % 2 == 0;
    clip.samples = target ? fixtures::tone_word(16000, 4000, 12000, 700, 1400, 0.3)
                          : fixtures::white_noise(16000, 0.05, seed + static_cast<std::uint64_t>(i));
    clip.sample_rate_hz = 16000;
    out.push_back({clip, target ? BinaryLabel::target : BinaryLabel::non_target});
  }
  return out;
}

ModelParams<double> filled(const ModelShape& s, double v) {
  auto p = ModelParams<double>::zeros(s);
  p.for_each([&](auto& t) { t.setConstant(v); });
  return p;
}

}  // namespace

TEST_CASE("cross_entropy") {
  const Eigen::Vector2d half(0.5, 0.5);
  CHECK(cross_entropy(half, 0) == doctest::Approx(std::log(2.0)).epsilon(1e-15));
  CHECK(cross_entropy(half, 1) == doctest::Approx(0.6931).epsilon(1e-4));
  CHECK(cross_entropy(Eigen::Vector2d(1.0, 0.0), 0) == 0.0);
  CHECK(cross_entropy(Eigen::Vector2d(1.0, 0.0), 1) == doctest::Approx(-std::log(1e-12)));
  CHECK_THROWS_AS(cross_entropy(half, 2), Error);
  CHECK_THROWS_AS(cross_entropy(half, -1), Error);
}

TEST_CASE("batch loss is the mean of separately computed per-sample losses") {
  const auto data = separable_windows(10, 3, 2.0);
  const auto p = glorot_init<float>(ModelShape::shrunken(), 4);
  double sum = 0.0;
  for (const auto& w : data) {
    const auto probs = predict(p, w.x.mfcc);
    sum += -std::log(std::max(static_cast<double>(probs[w.target()]), 1e-12));
  }
  const auto bg = batch_gradient(p, std::span<const LabeledWindow>(data));
  CHECK(bg.loss == doctest::Approx(sum / 10.0).epsilon(1e-12));
  CHECK(evaluate(p, std::span<const LabeledWindow>(data)).loss == doctest::Approx(sum / 10.0).epsilon(1e-12));
}

TEST_CASE("adam_step") {
  const auto shape = ModelShape::shrunken();

  SUBCASE("first step with unit gradient moves by about -lr") {
    const auto r = adam_step(filled(shape, 0.0), filled(shape, 1.0), AdamState<double>::zeros(shape), 1e-3);
    CHECK(r.state.t == 1);
    r.params.for_each([](const auto& t) {
      CHECK(t.maxCoeff() == doctest::Approx(-1e-3 / (1.0 + 1e-8)).epsilon(1e-12));
      CHECK(t.minCoeff() == doctest::Approx(-1e-3).epsilon(1e-6));
    });
  }
  SUBCASE("zero gradient leaves parameters and second moment unchanged") {
    const auto start = glorot_init<double>(shape, 1);
    auto params = start;
    auto state = AdamState<double>::zeros(shape);
    for (int i = 0; i < 4; ++i) {
      auto r = adam_step(params, filled(shape, 0.0), state, 1e-3);
      params = r.params;
      state = r.state;
    }
    CHECK(params.bitwise_equal(start));
    CHECK(state.v.squared_norm() == 0.0);
    CHECK(state.t == 4);
  }
  SUBCASE("five constant-gradient steps follow the scalar recurrence") {
    const double lr = 1e-3, b1 = 0.9, b2 = 0.999, eps = 1e-8, g = 0.5;
    double theta = 0.25, m = 0.0, v = 0.0;
    auto params = filled(shape, 0.25);
    auto state = AdamState<double>::zeros(shape);
    for (int t = 1; t <= 5; ++t) {
      m = b1 * m + (1 - b1) * g;
      v = b2 * v + (1 - b2) * g * g;
      const double mhat = m / (1 - std::pow(b1, t));
      const double vhat = v / (1 - std::pow(b2, t));
      theta -= lr * mhat / (std::sqrt(vhat) + eps);
      auto r = adam_step(params, filled(shape, g), state, lr);
      params = r.params;
      state = r.state;
    }
    params.for_each([&](const auto& t) {
      CHECK((t.array() - theta).abs().maxCoeff() <= 1e-12);
    });
    state.v.for_each([](const auto& t) { CHECK(t.minCoeff() >= 0.0); });
  }
  SUBCASE("non-finite gradients are rejected") {
    auto grads = filled(shape, 0.1);
    grads.dnn_b[3] = std::numeric_limits<double>::quiet_NaN();
    try {
      adam_step(filled(shape, 0.0), grads, AdamState<double>::zeros(shape), 1e-3);
      FAIL("expected rejection");
    } catch (const Error& e) {
      CHECK(e.code() == Errc::non_finite);
      CHECK(std::string(e.what()).find("tensor 4") != std::string::npos);
    }
  }
}

TEST_CASE("one small Adam step decreases the batch loss") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto p = glorot_init<float>(ModelShape::shrunken(), seed).cast<double>();
    std::vector<LabeledWindow> batch = separable_windows(4, 100 + seed, 3.0);
    for (auto& w : batch) {
      if (seed % 3 == 0) w.y = BinaryLabel::target;
    }
    const auto bg = batch_gradient(p, std::span<const LabeledWindow>(batch));
    const auto next = adam_step(p, bg.grads, AdamState<double>::zeros(p.shape), 1e-5);
    const double after = evaluate(next.params, std::span<const LabeledWindow>(batch)).loss;
    CHECK((after < bg.loss || std::sqrt(bg.grads.squared_norm()) < 1e-8));
  }
}

TEST_CASE("EarlyStopping: patience semantics") {
  EarlyStopping s(3);
  CHECK_FALSE(s.update(1, 0.5));
  CHECK_FALSE(s.update(2, 0.6));
  CHECK_FALSE(s.update(3, 0.6));
  CHECK(s.update(4, 0.6));
  CHECK(s.best_epoch() == 1);

  EarlyStopping equal(2);
  CHECK_FALSE(equal.update(1, 0.4));
  CHECK_FALSE(equal.update(2, 0.4));  // equal is not an improvement
  CHECK(equal.update(3, 0.4));
  CHECK(equal.best_epoch() == 1);
}

TEST_CASE("train_loop restores the epoch-1 parameters when validation only worsens") {
  // Validation labels are the negation of the training labels, so learning
  // the training task drives validation loss up from the first epoch.
  const auto train = separable_windows(64, 5);
  auto flipped = train;
  for (auto& w : flipped) w.y = w.target() ? BinaryLabel::non_target : BinaryLabel::target;

  TrainConfig cfg;
  cfg.epochs = 20;
  cfg.batch_size = 16;
  cfg.patience = 3;
  const auto init = glorot_init<float>(ModelShape::shrunken(), 8);

  const auto r = train_loop(init, cfg, [&](int) { return train; }, [&](int) { return flipped; });
  REQUIRE(r.history.size() == 4);
  CHECK(r.best_epoch == 1);
  for (std::size_t i = 1; i < r.history.size(); ++i) CHECK(r.history[i].val_loss > r.history[0].val_loss);
  CHECK(evaluate(r.params, std::span<const LabeledWindow>(flipped)).loss == r.history[0].val_loss);
}

TEST_CASE("train_loop learns a linearly separable task") {
  const auto train = separable_windows(128, 11);
  const auto val = separable_windows(32, 12);
  TrainConfig cfg;
  cfg.batch_size = 16;
  cfg.seed = 21;
  const auto r = train_loop(glorot_init<float>(ModelShape{}, 3), cfg, [&](int) { return train; },
                            [&](int) { return val; });
  REQUIRE_FALSE(r.history.empty());
  CHECK(r.history.size() <= 20);
  CHECK(r.history.back().train_acc >= 0.95);
  CHECK(evaluate(r.params, std::span<const LabeledWindow>(train)).accuracy >= 0.95);

  // The returned parameters score the best validation loss seen.
  double best = r.history.front().val_loss;
  for (const auto& m : r.history) {
    best = std::min(best, m.val_loss);
    CHECK(m.train_loss >= 0.0);
    CHECK(m.train_acc >= 0.0);
    CHECK(m.train_acc <= 1.0);
  }
  CHECK(evaluate(r.params, std::span<const LabeledWindow>(val)).loss == best);
}

TEST_CASE("evaluate") {
  SUBCASE("zero model on a balanced set") {
    const auto data = separable_windows(10, 1);
    const auto e = evaluate(ModelParams<float>::zeros(ModelShape::shrunken()), std::span<const LabeledWindow>(data));
    CHECK(e.loss == doctest::Approx(std::log(2.0)).epsilon(1e-7));
    CHECK(e.accuracy == 0.5);  // ties predict class 0
  }
  SUBCASE("single confident correct sample") {
    auto p = ModelParams<float>::zeros(ModelShape::shrunken());
    p.out_b[1] = 20.0f;
    std::vector<LabeledWindow> one{{{Eigen::MatrixXf::Zero(32, 40), 0}, BinaryLabel::target}};
    CHECK(evaluate(p, std::span<const LabeledWindow>(one)).accuracy == 1.0);
  }
  SUBCASE("accuracy matches a manual count") {
    const auto data = separable_windows(10, 77, 3.0);
    const auto p = glorot_init<float>(ModelShape::shrunken(), 78);
    int correct = 0;
    for (const auto& w : data) {
      const auto probs = predict(p, w.x.mfcc);
      const int predicted = probs[1] > probs[0] ? 1 : 0;
      correct += predicted == w.target();
    }
    CHECK(evaluate(p, std::span<const LabeledWindow>(data)).accuracy == correct / 10.0);
  }
  SUBCASE("empty dataset") {
    try {
      evaluate(ModelParams<float>::zeros(ModelShape::shrunken()), std::span<const LabeledWindow>());
      FAIL("expected config error");
    } catch (const Error& e) {
      CHECK(e.code() == Errc::config);
    }
  }
}

TEST_CASE("pretrain") {
  const auto train = tone_clips(16, 1);
  const auto val = tone_clips(8, 100);
  TrainConfig cfg;
  cfg.epochs = 2;
  cfg.batch_size = 8;
  cfg.seed = 5;
  const DspConfig dsp;

  SUBCASE("is deterministic down to the checkpoint bytes") {
    const auto a = pretrain(train, val, dsp, cfg, ModelShape::shrunken());
    const auto b = pretrain(train, val, dsp, cfg, ModelShape::shrunken());
    CHECK(serialize_checkpoint(a.params) == serialize_checkpoint(b.params));
    CHECK(a.history.size() == b.history.size());
    cfg.seed = 6;
    const auto c = pretrain(train, val, dsp, cfg, ModelShape::shrunken());
    CHECK(serialize_checkpoint(a.params) != serialize_checkpoint(c.params));
  }
  SUBCASE("empty partitions are config errors") {
    try {
      pretrain(std::span<const LabeledClip>(), val, dsp, cfg, ModelShape::shrunken());
      FAIL("expected config error");
    } catch (const Error& e) {
      CHECK(e.code() == Errc::config);
    }
  }
  SUBCASE("invalid configuration") {
    cfg.batch_size = 7;
    CHECK_THROWS_AS(pretrain(train, val, dsp, cfg, ModelShape::shrunken()), Error);
  }
}

TEST_CASE("history CSV round trip") {
  fixtures::TempDir dir("history");
  const std::vector<EpochMetrics> h{{1, 0.69314718055994529, 0.7, 0.5, 0.25}, {2, 0.1, 1.0 / 3.0, 1.0, 0.75}};
  write_history_csv(dir / "h.csv", h);
  std::ifstream in(dir / "h.csv");
  std::string header;
  std::getline(in, header);
  CHECK(header == "epoch,train_loss,val_loss,train_acc,val_acc");
  const auto back = read_history_csv(dir / "h.csv");
  REQUIRE(back.size() == 2);
  CHECK(back[1].val_loss == h[1].val_loss);
  CHECK(back[0].train_loss == h[0].train_loss);
  CHECK(back[1].epoch == 2);
}
