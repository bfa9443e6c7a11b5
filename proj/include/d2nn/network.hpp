#pragma once

#include <array>
#include <memory>
#include <span>
#include <vector>

#include "d2nn/optics.hpp"
#include "d2nn/phase_mask.hpp"

namespace d2nn {

inline constexpr int kClassCount = 10;

using ClassVector = std::array<double, kClassCount>;

/// Axis-aligned detector rectangle in grid coordinates.
struct Region {
  int row = 0;
  int col = 0;
  int height = 0;
  int width = 0;

  bool contains(int r, int c) const {
    return r >= row && r < row + height && c >= col && c < col + width;
  }
  bool operator==(const Region&) const = default;
};

struct DetectorLayout {
  std::array<Region, kClassCount> regions{};

  /// 2 x 5 grid of square regions with one-width gaps, centered; classes 0-4
  /// on the top row.
  static DetectorLayout default_for(int grid_n);

  /// Throws InvalidArgument unless regions are non-empty, in-grid and
  /// pairwise disjoint.
  void validate(int grid_n) const;

  bool operator==(const DetectorLayout&) const = default;
};

enum class ReadoutKind { Intensity, Softmax };

struct ReadoutConfig {
  ReadoutKind kind = ReadoutKind::Intensity;
  double temperature = 1.0;  // softmax only
  bool operator==(const ReadoutConfig&) const = default;
};

inline constexpr double kReadoutEpsilon = 1e-12;
inline constexpr double kLossClip = 1e-9;

struct Prediction {
  ClassVector intensities{};
  ClassVector q{};
  int predicted_class = 0;
};

/// Optical config + trainable masks + detectors. Transfer functions and mask
/// modulations exp(i*phi) are built at construction; a Model is immutable
/// afterwards and safe to share between threads.
class Model {
 public:
  Model(OpticalConfig cfg, std::vector<PhaseMask> masks,
        DetectorLayout layout, ReadoutConfig readout = {});

  const OpticalConfig& config() const { return cfg_; }
  const std::vector<PhaseMask>& masks() const { return masks_; }
  const DetectorLayout& layout() const { return layout_; }
  const ReadoutConfig& readout() const { return readout_; }

  /// Propagator in front of plane `slot + 1` (slot in [0, layer_count]).
  const TransferFunction& transfer(int slot) const { return *transfers_[slot]; }
  std::span<const cplx> modulation(int layer) const { return modulations_[layer]; }

  /// Same geometry, new masks. Transfer functions are shared, not rebuilt.
  Model with_masks(std::vector<PhaseMask> masks) const;

  /// New geometry, same masks; transfer functions are rebuilt.
  Model with_config(OpticalConfig cfg) const;

 private:
  Model(OpticalConfig cfg, std::vector<PhaseMask> masks, DetectorLayout layout,
        ReadoutConfig readout,
        std::vector<std::shared_ptr<const TransferFunction>> transfers);
  void build_modulations();

  OpticalConfig cfg_;
  std::vector<PhaseMask> masks_;
  DetectorLayout layout_;
  ReadoutConfig readout_;
  std::vector<std::shared_ptr<const TransferFunction>> transfers_;
  std::vector<std::vector<cplx>> modulations_;
};

struct ForwardResult {
  Prediction prediction;
  /// When requested: the field after each mask (layer_count entries)
  /// followed by the detector-plane field.
  std::vector<ComplexField> planes;
};

ForwardResult forward(const Model& model, const ComplexField& input,
                      bool keep_intermediates = false);

/// Convenience: forward(...).prediction.
Prediction predict(const Model& model, const ComplexField& input);

ClassVector detect(const ComplexField& field, const DetectorLayout& layout);

ClassVector readout(const ClassVector& intensities,
                    const ReadoutConfig& cfg = {});

/// Index of the largest entry; ties go to the lowest index.
int argmax(const ClassVector& v);

/// Per-class binary cross-entropy summed over classes, on q clipped to
/// [kLossClip, 1 - kLossClip]. `p` must be one-hot.
double loss(const ClassVector& p, const ClassVector& q);

ClassVector one_hot(int label);

}  // namespace d2nn
