#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include "d2nn/dataio.hpp"
#include "d2nn/gradients.hpp"
#include "d2nn/network.hpp"

namespace d2nn {

using Rng = std::mt19937_64;

struct TrainConfig {
  double learning_rate = 30.0;
  int epochs = 20;
  int batch_size = 32;
  double noise_std = 0.0;  // 0 trains a plain network
  std::uint64_t seed = 0;
  bool shuffle = true;
  int eval_every = 1;              // epochs between test evaluations
  bool per_sample_noise = false;   // one noise draw per sample, not per step
  int workers = 1;
  Illumination illumination{};

  void validate() const;
};

struct EpochRecord {
  int epoch = 0;        // 1-based
  int steps = 0;
  double train_loss = 0.0;  // mean loss at the injected (noisy) weights
  double train_acc = 0.0;   // running accuracy at the injected weights
  std::optional<double> test_acc;  // clean weights
  double wall_seconds = 0.0;
};

using TrainHistory = std::vector<EpochRecord>;

struct Sample {
  ComplexField input;
  int label = 0;
};

/// Masks i.i.d. uniform on [0, 2*pi), default detector layout.
Model init_model(const OpticalConfig& cfg, std::uint64_t seed);

/// One N(0, sigma^2) grid per layer; all zeros (and no draws) when sigma = 0.
std::vector<PhaseMask> sample_weight_noise(const Model& model, double sigma,
                                           Rng& rng);

struct StepResult {
  Model model;
  double loss = 0.0;  // mean over the batch, measured at phi + noise
  int correct = 0;    // at phi + noise
};

/// phi <- phi - lr * mean_batch(dL/dphi evaluated at phi + noise).
StepResult train_step(const Model& model, std::span<const Sample> batch,
                      const TrainConfig& cfg, Rng& noise_rng);

struct TrainResult {
  Model model;
  TrainHistory history;
};

using EpochCallback = std::function<void(const EpochRecord&)>;

TrainResult train(const Model& model, std::span<const LabeledImage> train_set,
                  std::span<const LabeledImage> test_set,
                  const TrainConfig& cfg, const EpochCallback& on_epoch = {});

struct EvalResult {
  double accuracy = 0.0;
  double mean_loss = 0.0;
  std::array<std::array<int, kClassCount>, kClassCount> confusion{};  // [true][pred]
};

/// Clean-weight evaluation.
EvalResult evaluate(const Model& model, std::span<const LabeledImage> dataset,
                    const Illumination& illum = {}, int workers = 1);

}  // namespace d2nn
