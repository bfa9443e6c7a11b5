#pragma once

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "d2nn/network.hpp"

namespace d2nn {

struct PhaseGaussian {
  double sigma = 0.0;  // rad
  std::uint64_t seed = 0;
};

struct ZQuantize {
  double step = 0.0;  // m
};

struct UniformRange {
  double lo = 0.0;  // m
  double hi = 0.0;
  std::uint64_t seed = 0;
};

struct SpacingSpec {
  std::variant<std::vector<double>, UniformRange> values;
};

struct FrequencyShift {
  double frequency = 0.0;  // Hz
};

using ErrorSpec = std::variant<PhaseGaussian, ZQuantize, SpacingSpec, FrequencyShift>;

/// Printed relief for one mask, meters, on a single 2*pi branch.
struct HeightMap {
  int grid_n = 0;
  std::vector<double> heights;
};

/// phi mod 2*pi in [0, 2*pi).
double wrap_phase(double phi);

/// Height per unit of wrapped phase: lambda / (2*pi*(n-1)).
double height_per_radian(double wavelength, double material_index);

HeightMap phase_to_height(const PhaseMask& mask, double wavelength,
                          double material_index);
PhaseMask height_to_phase(const HeightMap& heights, double wavelength,
                          double material_index);

/// Each mask entry += N(0, sigma^2), fresh draws per layer.
Model perturb_phase_gaussian(const Model& model, double sigma,
                             std::uint64_t seed);

/// Rounds printed heights to multiples of `step`. The lattice is taken
/// modulo the full 2*pi height, so a height that rounds to (or past) the top
/// of the branch prints as 0.
Model quantize_height(const Model& model, double step);

OpticalConfig perturb_spacing(const OpticalConfig& cfg, const SpacingSpec& spec);

/// Fixed printed heights under a new source frequency: phases scale by
/// f_new / f and propagation is rebuilt at the new wavelength.
Model shift_frequency(const Model& model, double frequency);

Model apply_error(const Model& model, const ErrorSpec& spec);

}  // namespace d2nn
