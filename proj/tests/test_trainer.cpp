#include <doctest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "d2nn/dataio.hpp"
#include "d2nn/error.hpp"
#include "d2nn/gradients.hpp"
#include "d2nn/trainer.hpp"
#include "helpers.hpp"

using namespace d2nn;

namespace {

std::vector<LabeledImage> synthetic_set(int count, std::uint64_t seed) {
  std::vector<LabeledImage> out;
  for (int i = 0; i < count; ++i) out.push_back(testing::random_digit(seed + i, i % 10));
  return out;
}

TrainConfig quick_config() {
  TrainConfig tc;
  tc.epochs = 2;
  tc.batch_size = 4;
  tc.seed = 17;
  tc.learning_rate = 30.0;
  return tc;
}

}  // namespace

TEST_SUITE("trainer") {

TEST_CASE("config validation") {
  TrainConfig tc;
  CHECK_NOTHROW(tc.validate());
  auto bad = tc;
  bad.epochs = 0;
  CHECK_THROWS_AS(bad.validate(), Error);
  bad = tc;
  bad.batch_size = 0;
  CHECK_THROWS_AS(bad.validate(), Error);
  bad = tc;
  bad.noise_std = -0.1;
  CHECK_THROWS_AS(bad.validate(), Error);
  bad = tc;
  bad.learning_rate = -1.0;
  CHECK_THROWS_AS(bad.validate(), Error);
  bad = tc;
  bad.learning_rate = NAN;
  CHECK_THROWS_AS(bad.validate(), Error);
}

TEST_CASE("init_model") {
  const OpticalConfig cfg;  // grid 100, 5 layers
  const Model a = init_model(cfg, 42), b = init_model(cfg, 42), c = init_model(cfg, 43);
  CHECK(a.masks() == b.masks());
  REQUIRE(a.masks().size() == 5);
  std::size_t differ = 0, total = 0;
  for (int l = 0; l < 5; ++l) {
    CHECK(a.masks()[l].grid_n() == 100);
    for (std::size_t k = 0; k < a.masks()[l].values().size(); ++k) {
      const double v = a.masks()[l][k];
      CHECK((std::isfinite(v) && v >= 0.0 && v < testing::kTwoPi));
      differ += v != c.masks()[l][k];
      ++total;
    }
  }
  CHECK(double(differ) >= 0.99 * double(total));
}

TEST_CASE("weight noise") {
  const Model m = init_model(OpticalConfig{}, 1);
  Rng rng(5);
  for (const auto& grid : sample_weight_noise(m, 0.0, rng))
    for (double v : grid.values()) CHECK(v == 0.0);

  const double sigma = 0.3;
  double sum = 0.0, sq = 0.0;
  std::size_t count = 0;
  std::vector<PhaseMask> previous;
  while (count < 1000000) {
    auto noise = sample_weight_noise(m, sigma, rng);
    if (!previous.empty()) CHECK(noise != previous);
    for (const auto& grid : noise)
      for (double v : grid.values()) {
        sum += v;
        sq += v * v;
        ++count;
      }
    previous = std::move(noise);
  }
  const double mean = sum / count;
  const double sd = std::sqrt((sq - count * mean * mean) / (count - 1));
  CHECK(std::abs(mean) <= 4 * sigma / std::sqrt(double(count)));
  CHECK(std::abs(sd - sigma) <= 0.01 * sigma);
}

TEST_CASE("zero learning rate never moves the weights") {
  const auto cfg = OpticalConfig::uniform(16, 2, 0.03);
  const Model m = init_model(cfg, 3);
  std::vector<Sample> batch{{prepare_input(testing::random_digit(1), cfg), 3},
                            {prepare_input(testing::random_digit(2), cfg), 8}};
  for (double sigma : {0.0, 0.5}) {
    TrainConfig tc;
    tc.learning_rate = 0.0;
    tc.noise_std = sigma;
    Rng rng(9);
    CHECK(train_step(m, batch, tc, rng).model.masks() == m.masks());
  }

  auto data = synthetic_set(10, 50);
  TrainConfig tc = quick_config();
  tc.learning_rate = 0.0;
  tc.noise_std = 0.4;
  CHECK(train(m, data, {}, tc).model.masks() == m.masks());
}

TEST_CASE("single step applies the exact gradient") {
  const auto cfg = OpticalConfig::uniform(32, 3, 0.03);
  const Model m = init_model(cfg, 8);
  const auto u = prepare_input(testing::random_digit(4), cfg);
  const std::vector<Sample> batch{{u, 7}};
  TrainConfig tc;
  tc.learning_rate = 0.5;
  Rng rng(1);
  const auto step = train_step(m, batch, tc, rng);
  const auto g = backward(m, u, 7);
  for (int l = 0; l < 3; ++l)
    for (std::size_t k = 0; k < m.masks()[l].values().size(); ++k)
      CHECK(step.model.masks()[l][k] == m.masks()[l][k] - tc.learning_rate * g.grad.layers[l][k]);
  CHECK(step.loss == g.loss);

  std::vector<MaskEntry> entries;
  for (int i = 0; i < 10; ++i) entries.push_back({i % 3, 3 * i, 31 - 2 * i});
  CHECK(fd_check(m, u, one_hot(7), entries, 1e-6) <= 1e-5);
}

TEST_CASE("small steps decrease the loss") {
  const auto cfg = OpticalConfig::uniform(32, 3, 0.03);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    CAPTURE(seed);
    const Model m = init_model(cfg, 1000 + seed);
    const int label = int(seed % 10);
    const auto u = prepare_input(testing::random_digit(seed, label), cfg);
    TrainConfig tc;
    tc.learning_rate = 1e-3;
    Rng rng(seed);
    const auto step = train_step(m, std::vector<Sample>{{u, label}}, tc, rng);
    CHECK(forward_loss(step.model, u, one_hot(label)) < forward_loss(m, u, one_hot(label)));
  }
}

TEST_CASE("non-finite loss aborts") {
  const auto cfg = OpticalConfig::uniform(16, 1, 0.03);
  const Model m = init_model(cfg, 1);
  // Finite but so bright that the detector intensities overflow.
  ComplexField poisoned(16, cfg.pixel_pitch);
  for (auto& v : poisoned.values()) v = 1e200;
  TrainConfig tc;
  Rng rng(0);
  try {
    train_step(m, std::vector<Sample>{{poisoned, 0}}, tc, rng);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Numeric);
  }
  CHECK_THROWS_AS(train_step(m, std::vector<Sample>{}, tc, rng), Error);
}

TEST_CASE("bookkeeping") {
  const Model m = init_model(OpticalConfig::uniform(16, 1, 0.03), 2);
  const auto data = synthetic_set(8, 0);
  for (int batch : {1, 3, 8, 32}) {
    CAPTURE(batch);
    TrainConfig tc = quick_config();
    tc.epochs = 1;
    tc.batch_size = batch;
    const auto r = train(m, data, {}, tc);
    REQUIRE(r.history.size() == 1);
    CHECK(r.history[0].epoch == 1);
    CHECK(r.history[0].steps == (8 + batch - 1) / batch);
    CHECK_FALSE(r.history[0].test_acc.has_value());
  }
  TrainConfig tc = quick_config();
  tc.epochs = 3;
  tc.eval_every = 2;
  const auto r = train(m, data, data, tc);
  REQUIRE(r.history.size() == 3);
  CHECK(r.history[1].test_acc.has_value());
  CHECK(r.history[2].test_acc.has_value());  // final epoch is always evaluated
  CHECK_FALSE(r.history[0].test_acc.has_value());
  for (std::size_t i = 1; i < r.history.size(); ++i)
    CHECK(r.history[i].epoch == r.history[i - 1].epoch + 1);

  CHECK_THROWS_AS(train(m, {}, {}, tc), Error);
}

TEST_CASE("training is deterministic regardless of workers") {
  const auto cfg = OpticalConfig::uniform(16, 2, 0.03);
  const Model m = init_model(cfg, 6);
  const auto data = synthetic_set(20, 300);
  for (bool per_sample : {false, true}) {
    TrainConfig tc = quick_config();
    tc.noise_std = 0.3;
    tc.per_sample_noise = per_sample;
    tc.workers = 1;
    const auto a = train(m, data, data, tc);
    const auto b = train(m, data, data, tc);
    tc.workers = 3;
    const auto c = train(m, data, data, tc);
    CHECK(a.model.masks() == b.model.masks());
    CHECK(a.model.masks() == c.model.masks());
    REQUIRE(a.history.size() == c.history.size());
    for (std::size_t i = 0; i < a.history.size(); ++i) {
      CHECK(a.history[i].train_loss == c.history[i].train_loss);
      CHECK(a.history[i].train_acc == c.history[i].train_acc);
      CHECK(a.history[i].test_acc == c.history[i].test_acc);
    }
  }
}

TEST_CASE("noise mode matters") {
  const auto cfg = OpticalConfig::uniform(16, 2, 0.03);
  const Model m = init_model(cfg, 6);
  const auto data = synthetic_set(8, 30);
  TrainConfig tc = quick_config();
  tc.noise_std = 0.3;
  const auto shared = train(m, data, {}, tc);
  tc.per_sample_noise = true;
  const auto fresh = train(m, data, {}, tc);
  CHECK(shared.model.masks() != fresh.model.masks());
}

TEST_CASE("evaluate") {
  const auto cfg = OpticalConfig::uniform(32, 2, 0.03);
  const Model m = init_model(cfg, 4);
  auto one = synthetic_set(1, 77);
  one[0].label = predict(m, prepare_input(one[0], cfg)).predicted_class;
  const auto r = evaluate(m, one);
  CHECK(r.accuracy == 1.0);
  CHECK(r.confusion[one[0].label][one[0].label] == 1);

  const auto data = synthetic_set(30, 500);
  const auto a = evaluate(m, data), b = evaluate(m, data, {}, 3);
  CHECK(a.accuracy == b.accuracy);
  CHECK(a.mean_loss == b.mean_loss);
  CHECK(a.confusion == b.confusion);
  int total = 0;
  for (const auto& row : a.confusion)
    for (int v : row) total += v;
  CHECK(total == 30);

  auto doubled = data;
  doubled.insert(doubled.end(), data.begin(), data.end());
  CHECK(evaluate(m, doubled).accuracy == a.accuracy);
  CHECK_THROWS_AS(evaluate(m, {}), Error);
}

TEST_CASE("untrained flat masks classify near chance") {
  if (!testing::have_mnist()) {
    MESSAGE("MNIST not found; skipped");
    return;
  }
  const auto test = load_mnist(testing::mnist_dir() / "t10k-images-idx3-ubyte",
                               testing::mnist_dir() / "t10k-labels-idx1-ubyte", 500);
  const OpticalConfig cfg;
  const Model m(cfg, std::vector<PhaseMask>(5, PhaseMask(100, 0.0)),
                DetectorLayout::default_for(100));
  const double acc = evaluate(m, test).accuracy;
  MESSAGE("flat-mask accuracy " << acc);
  CHECK(acc >= 0.0);
  CHECK(acc <= 0.35);
}

}
