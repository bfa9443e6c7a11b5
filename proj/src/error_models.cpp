#include "d2nn/error_models.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <string>

#include "d2nn/error.hpp"

namespace d2nn {

using std::numbers::pi;

double wrap_phase(double phi) {
  double w = std::fmod(phi, 2.0 * pi);
  if (w < 0) w += 2.0 * pi;
  if (w >= 2.0 * pi) w = 0.0;  // fmod rounding at -tiny
  return w;
}

double height_per_radian(double wavelength, double material_index) {
  require(material_index > 1, "material index must be > 1");
  require(wavelength > 0, "wavelength must be > 0");
  return wavelength / (2.0 * pi * (material_index - 1.0));
}

HeightMap phase_to_height(const PhaseMask& mask, double wavelength,
                          double material_index) {
  const double scale = height_per_radian(wavelength, material_index);
  HeightMap out{mask.grid_n(), std::vector<double>(mask.size())};
  for (std::size_t k = 0; k < mask.size(); ++k)
    out.heights[k] = wrap_phase(mask[k]) * scale;
  return out;
}

PhaseMask height_to_phase(const HeightMap& heights, double wavelength,
                          double material_index) {
  const double scale = height_per_radian(wavelength, material_index);
  std::vector<double> phases(heights.heights.size());
  for (std::size_t k = 0; k < phases.size(); ++k)
    phases[k] = heights.heights[k] / scale;
  return PhaseMask(heights.grid_n, std::move(phases));
}

Model perturb_phase_gaussian(const Model& model, double sigma,
                             std::uint64_t seed) {
  require(std::isfinite(sigma) && sigma >= 0, "phase noise sigma must be >= 0");
  if (sigma == 0.0) return model;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, sigma);
  std::vector<PhaseMask> masks = model.masks();
  for (PhaseMask& mask : masks)
    for (double& v : mask.values()) v += gauss(rng);
  return model.with_masks(std::move(masks));
}

Model quantize_height(const Model& model, double step) {
  require(std::isfinite(step) && step > 0, "height step must be > 0");
  const OpticalConfig& cfg = model.config();
  const double scale = height_per_radian(cfg.wavelength(), cfg.material_index);
  const double full = 2.0 * pi * scale;

  std::vector<PhaseMask> masks;
  for (const PhaseMask& mask : model.masks()) {
    const HeightMap h = phase_to_height(mask, cfg.wavelength(), cfg.material_index);
    std::vector<double> phases(mask.size());
    for (std::size_t k = 0; k < phases.size(); ++k) {
      double q = std::round(h.heights[k] / step) * step;  // half away from zero
      if (q >= full) q = 0.0;
      phases[k] = q / scale;
    }
    masks.emplace_back(mask.grid_n(), std::move(phases));
  }
  return model.with_masks(std::move(masks));
}

OpticalConfig perturb_spacing(const OpticalConfig& cfg, const SpacingSpec& spec) {
  OpticalConfig out = cfg;
  const std::size_t slots = cfg.spacings.size();
  if (const auto* fixed = std::get_if<std::vector<double>>(&spec.values)) {
    require(fixed->size() == slots,
            "spacing perturbation needs " + std::to_string(slots) +
                " values, got " + std::to_string(fixed->size()));
    for (double v : *fixed)
      require(std::isfinite(v) && v > 0, "spacings must be > 0");
    out.spacings = *fixed;
  } else {
    const auto& range = std::get<UniformRange>(spec.values);
    require(range.lo > 0 && range.lo < range.hi,
            "spacing range needs 0 < lo < hi");
    std::mt19937_64 rng(range.seed);
    std::uniform_real_distribution<double> draw(range.lo, range.hi);
    for (double& s : out.spacings) s = draw(rng);
  }
  out.validate();
  return out;
}

Model shift_frequency(const Model& model, double frequency) {
  require(std::isfinite(frequency) && frequency > 0,
          "frequency must be > 0");
  const OpticalConfig& cfg = model.config();
  if (frequency == cfg.frequency) return model;
  const double ratio = frequency / cfg.frequency;
  std::vector<PhaseMask> masks = model.masks();
  for (PhaseMask& mask : masks)
    for (double& v : mask.values()) v = wrap_phase(v) * ratio;
  OpticalConfig shifted = cfg;
  shifted.frequency = frequency;
  return Model(std::move(shifted), std::move(masks), model.layout(),
               model.readout());
}

Model apply_error(const Model& model, const ErrorSpec& spec) {
  struct Visitor {
    const Model& model;
    Model operator()(const PhaseGaussian& e) const {
      return perturb_phase_gaussian(model, e.sigma, e.seed);
    }
    Model operator()(const ZQuantize& e) const {
      return quantize_height(model, e.step);
    }
    Model operator()(const SpacingSpec& e) const {
      return model.with_config(perturb_spacing(model.config(), e));
    }
    Model operator()(const FrequencyShift& e) const {
      return shift_frequency(model, e.frequency);
    }
  };
  return std::visit(Visitor{model}, spec);
}

}  // namespace d2nn
