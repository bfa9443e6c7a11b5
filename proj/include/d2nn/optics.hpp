#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

#include "d2nn/phase_mask.hpp"

namespace d2nn {

using cplx = std::complex<double>;

inline constexpr double kSpeedOfLight = 299792458.0;  // m/s

/// Geometry and source of a diffractive stack. Planes are: input, layer 1 ..
/// layer N, detector; `spacings[i]` is the gap in front of plane i+1.
struct OpticalConfig {
  double frequency = 400e9;     // Hz
  int grid_n = 100;             // samples per side
  double pixel_pitch = 0.4e-3;  // m
  int layer_count = 5;
  std::vector<double> spacings = std::vector<double>(6, 0.03);  // m
  double material_index = 1.7;
  int pad_factor = 2;

  double wavelength() const { return kSpeedOfLight / frequency; }
  int padded_n() const { return grid_n * pad_factor; }

  /// Throws d2nn::Error(InvalidArgument) on any violated invariant.
  void validate() const;

  static OpticalConfig uniform(int grid_n, int layer_count, double spacing,
                               double frequency = 400e9,
                               double pixel_pitch = 0.4e-3);

  bool operator==(const OpticalConfig&) const = default;
};

/// Square sampled scalar wavefront, row-major.
class ComplexField {
 public:
  ComplexField() = default;
  ComplexField(int grid_n, double pitch);
  ComplexField(int grid_n, double pitch, std::vector<cplx> values);

  int grid_n() const { return n_; }
  double pitch() const { return pitch_; }
  std::size_t size() const { return values_.size(); }

  cplx& at(int row, int col) { return values_[std::size_t(row) * n_ + col]; }
  const cplx& at(int row, int col) const {
    return values_[std::size_t(row) * n_ + col];
  }

  std::span<cplx> values() { return values_; }
  std::span<const cplx> values() const { return values_; }

  bool all_finite() const;

 private:
  int n_ = 0;
  double pitch_ = 0.0;
  std::vector<cplx> values_;
};

/// Angular-spectrum propagator for one (distance, wavelength) on the padded
/// grid. Spectrum is stored in unshifted FFT order.
struct TransferFunction {
  int grid_n = 0;      // unpadded grid it applies to
  int padded_n = 0;
  double pitch = 0.0;
  double distance = 0.0;
  double wavelength = 0.0;
  double band_limit = 0.0;  // cycles/m, per axis
  std::vector<cplx> spectrum;
};

/// Spatial frequency (cycles/m) of FFT bin k on an m-point grid.
double fft_frequency(int k, int m, double pitch);

TransferFunction make_transfer_function(const OpticalConfig& cfg,
                                        double distance, double wavelength);

/// crop(IDFT(DFT(zeropad(field)) * H)).
ComplexField propagate(const ComplexField& field, const TransferFunction& tf);

/// Adjoint of propagate: same pipeline with the conjugated spectrum.
ComplexField propagate_adjoint(const ComplexField& field,
                               const TransferFunction& tf);

/// Zero-pads to tf.padded_n (signal in the top-left block) and back.
ComplexField zero_pad(const ComplexField& field, int padded_n);
ComplexField crop(const ComplexField& field, int grid_n);

/// Filters an already padded field without cropping. `conjugate` selects the
/// adjoint (backward) filter.
ComplexField propagate_padded(const ComplexField& padded,
                              const TransferFunction& tf,
                              bool conjugate = false);

/// Direct O(N^4) Rayleigh-Sommerfeld summation. Reference oracle only.
ComplexField rs_direct(const ComplexField& field, double distance,
                       double wavelength);

inline constexpr int kRsDirectMaxGrid = 128;

/// out_k = in_k * exp(i*phi_k).
ComplexField apply_phase(const ComplexField& field, const PhaseMask& mask);

double power(const ComplexField& field);

}  // namespace d2nn
