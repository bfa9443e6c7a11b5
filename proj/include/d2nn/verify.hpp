#pragma once

#include <cstdint>
#include <vector>

#include "d2nn/gradients.hpp"
#include "d2nn/optics.hpp"

namespace d2nn {

inline constexpr double kGradcheckTolerance = 1e-5;
inline constexpr double kOracleTolerance = 0.05;

/// exp(-rho^2 / waist^2) centered on the grid, unnormalized.
ComplexField gaussian_beam(int grid_n, double pitch, double waist);

/// sqrt(sum |a - ref|^2 / sum |ref|^2).
double relative_rms(const ComplexField& a, const ComplexField& ref);

struct OracleOptions {
  int grid_n = 64;
  double pixel_pitch = 0.4e-3;
  double frequency = 400e9;
  double distance = 0.03;
  double waist = 6.4e-3;
  int pad_factor = 2;
};

/// Relative RMS between the angular-spectrum propagator and direct
/// Rayleigh-Sommerfeld summation for a Gaussian beam.
double run_oracle_check(const OracleOptions& opts);

struct GradcheckOptions {
  int grid_n = 32;
  int layers = 3;
  int entries = 20;
  double step = 1e-6;
  std::uint64_t seed = 1;
  double pixel_pitch = 0.4e-3;
  double spacing = 0.03;
  double frequency = 400e9;
  /// 28x28 digit; empty selects a seeded synthetic stroke image.
  std::vector<std::uint8_t> pixels;
};

/// Random model + input, `entries` random mask entries, central differences.
double run_gradcheck(const GradcheckOptions& opts);

}  // namespace d2nn
