#include "d2nn/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numbers>
#include <numeric>
#include <string>

#include "d2nn/error.hpp"
#include "d2nn/parallel.hpp"
#include "d2nn/seeds.hpp"

namespace d2nn {

void TrainConfig::validate() const {
  require(std::isfinite(learning_rate) && learning_rate >= 0,
          "learning rate must be >= 0");
  require(epochs >= 1, "epochs must be >= 1");
  require(batch_size >= 1, "batch size must be >= 1");
  require(std::isfinite(noise_std) && noise_std >= 0,
          "noise std must be >= 0");
  require(eval_every >= 1, "eval_every must be >= 1");
}

Model init_model(const OpticalConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  Rng rng(seed);
  std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
  std::vector<PhaseMask> masks;
  for (int l = 0; l < cfg.layer_count; ++l) {
    PhaseMask mask(cfg.grid_n);
    for (double& v : mask.values()) v = phase(rng);
    masks.push_back(std::move(mask));
  }
  return Model(cfg, std::move(masks), DetectorLayout::default_for(cfg.grid_n));
}

std::vector<PhaseMask> sample_weight_noise(const Model& model, double sigma,
                                           Rng& rng) {
  require(sigma >= 0, "noise std must be >= 0");
  const int n = model.config().grid_n;
  std::vector<PhaseMask> noise(model.masks().size(), PhaseMask(n));
  if (sigma == 0.0) return noise;
  std::normal_distribution<double> gauss(0.0, sigma);
  for (PhaseMask& grid : noise)
    for (double& v : grid.values()) v = gauss(rng);
  return noise;
}

namespace {

std::vector<PhaseMask> add(const std::vector<PhaseMask>& a,
                           const std::vector<PhaseMask>& b) {
  std::vector<PhaseMask> out = a;
  for (std::size_t l = 0; l < out.size(); ++l)
    for (std::size_t k = 0; k < out[l].size(); ++k) out[l][k] += b[l][k];
  return out;
}

}  // namespace

StepResult train_step(const Model& model, std::span<const Sample> batch,
                      const TrainConfig& cfg, Rng& noise_rng) {
  require(!batch.empty(), "training batch is empty");
  const std::size_t count = batch.size();

  // Noise is drawn up front, in sample order, so threads never touch the rng.
  std::vector<Model> noisy;
  if (cfg.noise_std == 0.0) {
    noisy.push_back(model);
  } else if (!cfg.per_sample_noise) {
    noisy.push_back(model.with_masks(
        add(model.masks(), sample_weight_noise(model, cfg.noise_std, noise_rng))));
  } else {
    for (std::size_t i = 0; i < count; ++i)
      noisy.push_back(model.with_masks(add(
          model.masks(), sample_weight_noise(model, cfg.noise_std, noise_rng))));
  }

  std::vector<BackwardResult> results(count);
  parallel_for(count, cfg.workers, [&](std::size_t i) {
    const Model& m = noisy[noisy.size() == 1 ? 0 : i];
    results[i] = backward(m, batch[i].input, batch[i].label);
  });

  // Fixed-order reduction.
  double loss_sum = 0.0;
  int correct = 0;
  std::vector<PhaseMask> grad_sum(model.masks().size(),
                                  PhaseMask(model.config().grid_n));
  for (std::size_t i = 0; i < count; ++i) {
    const BackwardResult& r = results[i];
    if (!std::isfinite(r.loss))
      fail(ErrorKind::Numeric, "non-finite training loss on batch sample " +
                                   std::to_string(i) + " (label " +
                                   std::to_string(batch[i].label) + ")");
    loss_sum += r.loss;
    correct += r.prediction.predicted_class == batch[i].label;
    for (std::size_t l = 0; l < grad_sum.size(); ++l)
      for (std::size_t k = 0; k < grad_sum[l].size(); ++k)
        grad_sum[l][k] += r.grad.layers[l][k];
  }

  const double scale = cfg.learning_rate / double(count);
  std::vector<PhaseMask> updated = model.masks();
  for (std::size_t l = 0; l < updated.size(); ++l)
    for (std::size_t k = 0; k < updated[l].size(); ++k)
      updated[l][k] -= scale * grad_sum[l][k];

  return StepResult{model.with_masks(std::move(updated)),
                    loss_sum / double(count), correct};
}

TrainResult train(const Model& initial, std::span<const LabeledImage> train_set,
                  std::span<const LabeledImage> test_set,
                  const TrainConfig& cfg, const EpochCallback& on_epoch) {
  cfg.validate();
  require(!train_set.empty(), "training set is empty");

  // Independent streams: data order does not depend on the noise level.
  Rng shuffle_rng(derive_seed(cfg.seed, {1}));
  Rng noise_rng(derive_seed(cfg.seed, {2}));

  Model model = initial;
  TrainHistory history;
  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  const OpticalConfig& optics = model.config();

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const auto start = std::chrono::steady_clock::now();
    if (cfg.shuffle) std::shuffle(order.begin(), order.end(), shuffle_rng);

    EpochRecord rec;
    rec.epoch = epoch;
    double loss_sum = 0.0;
    long correct = 0;
    for (std::size_t first = 0; first < order.size();
         first += std::size_t(cfg.batch_size)) {
      const std::size_t last =
          std::min(order.size(), first + std::size_t(cfg.batch_size));
      std::vector<Sample> batch(last - first);
      parallel_for(batch.size(), cfg.workers, [&](std::size_t i) {
        const LabeledImage& img = train_set[order[first + i]];
        batch[i] = Sample{prepare_input(img, optics, cfg.illumination), img.label};
      });
      StepResult step = train_step(model, batch, cfg, noise_rng);
      model = std::move(step.model);
      loss_sum += step.loss * double(batch.size());
      correct += step.correct;
      ++rec.steps;
    }
    rec.train_loss = loss_sum / double(order.size());
    rec.train_acc = double(correct) / double(order.size());
    if (!test_set.empty() &&
        (epoch % cfg.eval_every == 0 || epoch == cfg.epochs))
      rec.test_acc =
          evaluate(model, test_set, cfg.illumination, cfg.workers).accuracy;
    rec.wall_seconds = std::chrono::duration<double>(
                           std::chrono::steady_clock::now() - start)
                           .count();
    history.push_back(rec);
    if (on_epoch) on_epoch(rec);
  }
  return TrainResult{std::move(model), std::move(history)};
}

EvalResult evaluate(const Model& model, std::span<const LabeledImage> dataset,
                    const Illumination& illum, int workers) {
  require(!dataset.empty(), "evaluation set is empty");
  std::vector<Prediction> preds(dataset.size());
  parallel_for(dataset.size(), workers, [&](std::size_t i) {
    preds[i] = predict(model, prepare_input(dataset[i], model.config(), illum));
  });

  EvalResult result;
  long correct = 0;
  double loss_sum = 0.0;
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    const int truth = dataset[i].label;
    const int guess = preds[i].predicted_class;
    correct += truth == guess;
    loss_sum += loss(one_hot(truth), preds[i].q);
    ++result.confusion[truth][guess];
  }
  result.accuracy = double(correct) / double(dataset.size());
  result.mean_loss = loss_sum / double(dataset.size());
  return result;
}

}  // namespace d2nn
