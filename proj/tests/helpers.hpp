#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <filesystem>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "d2nn/dataio.hpp"
#include "d2nn/network.hpp"
#include "d2nn/optics.hpp"

namespace testing {

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

inline d2nn::ComplexField random_field(int n, double pitch, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  d2nn::ComplexField f(n, pitch);
  for (auto& v : f.values()) v = {g(rng), g(rng)};
  return f;
}

inline d2nn::PhaseMask random_mask(int n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, kTwoPi);
  std::vector<double> v(std::size_t(n) * n);
  for (auto& x : v) x = u(rng);
  return d2nn::PhaseMask(n, std::move(v));
}

inline d2nn::Model random_model(const d2nn::OpticalConfig& cfg, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<d2nn::PhaseMask> masks;
  for (int l = 0; l < cfg.layer_count; ++l) masks.push_back(random_mask(cfg.grid_n, rng));
  return d2nn::Model(cfg, std::move(masks), d2nn::DetectorLayout::default_for(cfg.grid_n));
}

inline d2nn::LabeledImage random_digit(std::uint64_t seed, int label = 0) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> u(0, 255);
  d2nn::LabeledImage img;
  for (auto& p : img.pixels) p = std::uint8_t(u(rng) > 180 ? u(rng) : 0);
  img.label = label;
  return img;
}

// Max-norm relative difference.
inline double rel_diff(const d2nn::ComplexField& a, const d2nn::ComplexField& b) {
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    num = std::max(num, std::abs(a.values()[i] - b.values()[i]));
    den = std::max(den, std::abs(b.values()[i]));
  }
  return den > 0 ? num / den : num;
}

inline bool bitwise_equal(const d2nn::Model& a, const d2nn::Model& b) {
  return a.masks() == b.masks();
}

inline std::filesystem::path mnist_dir() { return D2NN_MNIST_DIR; }

inline bool have_mnist() {
  return std::filesystem::exists(mnist_dir() / "t10k-images-idx3-ubyte") &&
         std::filesystem::exists(mnist_dir() / "t10k-labels-idx1-ubyte");
}

inline std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("d2nn_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace testing
