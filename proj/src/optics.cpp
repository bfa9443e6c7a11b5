#include "d2nn/optics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "d2nn/error.hpp"
#include "fft.hpp"

namespace d2nn {

using std::numbers::pi;

void OpticalConfig::validate() const {
  require(std::isfinite(frequency) && frequency > 0, "frequency must be > 0");
  require(grid_n >= 8 && grid_n % 2 == 0, "grid_n must be even and >= 8");
  require(std::isfinite(pixel_pitch) && pixel_pitch > 0,
          "pixel_pitch must be > 0");
  require(layer_count >= 0, "layer_count must be >= 0");
  require(spacings.size() == std::size_t(layer_count) + 1,
          "expected " + std::to_string(layer_count + 1) + " spacings, got " +
              std::to_string(spacings.size()));
  for (double s : spacings)
    require(std::isfinite(s) && s > 0, "all spacings must be > 0");
  require(std::isfinite(material_index) && material_index > 1,
          "material_index must be > 1");
  require(pad_factor == 1 || pad_factor == 2, "pad_factor must be 1 or 2");
}

OpticalConfig OpticalConfig::uniform(int grid_n, int layer_count,
                                     double spacing, double frequency,
                                     double pixel_pitch) {
  OpticalConfig cfg;
  cfg.grid_n = grid_n;
  cfg.layer_count = layer_count;
  cfg.spacings.assign(std::size_t(std::max(layer_count, 0)) + 1, spacing);
  cfg.frequency = frequency;
  cfg.pixel_pitch = pixel_pitch;
  return cfg;
}

ComplexField::ComplexField(int grid_n, double pitch)
    : n_(grid_n), pitch_(pitch), values_(std::size_t(grid_n) * grid_n) {
  require(grid_n > 0, "field grid must be positive");
  require(pitch > 0, "field pitch must be positive");
}

ComplexField::ComplexField(int grid_n, double pitch, std::vector<cplx> values)
    : n_(grid_n), pitch_(pitch), values_(std::move(values)) {
  require(grid_n > 0, "field grid must be positive");
  require(pitch > 0, "field pitch must be positive");
  require(values_.size() == std::size_t(grid_n) * grid_n,
          "field value count does not match grid");
}

bool ComplexField::all_finite() const {
  return std::all_of(values_.begin(), values_.end(), [](const cplx& v) {
    return std::isfinite(v.real()) && std::isfinite(v.imag());
  });
}

PhaseMask::PhaseMask(int grid_n, std::vector<double> phases)
    : n_(grid_n), phases_(std::move(phases)) {
  require(phases_.size() == std::size_t(grid_n) * grid_n,
          "mask value count does not match grid");
}

double fft_frequency(int k, int m, double pitch) {
  const int signed_k = k < (m + 1) / 2 ? k : k - m;
  return signed_k / (m * pitch);
}

TransferFunction make_transfer_function(const OpticalConfig& cfg,
                                        double distance, double wavelength) {
  require(std::isfinite(distance) && distance > 0,
          "propagation distance must be > 0");
  require(std::isfinite(wavelength) && wavelength > 0,
          "wavelength must be > 0");
  require(cfg.grid_n > 0 && cfg.pixel_pitch > 0 && cfg.pad_factor >= 1,
          "invalid grid for transfer function");

  TransferFunction tf;
  tf.grid_n = cfg.grid_n;
  tf.padded_n = cfg.padded_n();
  tf.pitch = cfg.pixel_pitch;
  tf.distance = distance;
  tf.wavelength = wavelength;

  const int m = tf.padded_n;
  const double aperture = m * tf.pitch;
  const double ratio = 2.0 * distance / aperture;
  tf.band_limit = 1.0 / (wavelength * std::sqrt(ratio * ratio + 1.0));

  const double inv_lambda_sq = 1.0 / (wavelength * wavelength);
  tf.spectrum.assign(std::size_t(m) * m, cplx{});
  for (int r = 0; r < m; ++r) {
    const double fy = fft_frequency(r, m, tf.pitch);
    if (std::abs(fy) > tf.band_limit) continue;
    for (int c = 0; c < m; ++c) {
      const double fx = fft_frequency(c, m, tf.pitch);
      if (std::abs(fx) > tf.band_limit) continue;
      const double arg = inv_lambda_sq - fx * fx - fy * fy;
      if (arg < 0) continue;  // evanescent
      const double phase = 2.0 * pi * distance * std::sqrt(arg);
      tf.spectrum[std::size_t(r) * m + c] = std::polar(1.0, phase);
    }
  }
  return tf;
}

namespace {

void check_compatible(const ComplexField& field, const TransferFunction& tf,
                      int expected_grid) {
  require(field.grid_n() == expected_grid,
          "field grid " + std::to_string(field.grid_n()) +
              " does not match transfer function grid " +
              std::to_string(expected_grid));
  require(std::abs(field.pitch() - tf.pitch) <= 1e-12 * tf.pitch,
          "field pitch does not match transfer function pitch");
}

// Filters `rows` leading rows of the workspace in place; rows below are zero
// on entry. Only the first `rows` rows are valid on exit.
void filter(std::span<cplx> ws, const TransferFunction& tf, int rows,
            bool conjugate) {
  const int m = tf.padded_n;
  detail::fft2_forward(ws, m, rows);
  const double scale = 1.0 / (double(m) * m);
  const cplx* h = tf.spectrum.data();
  if (conjugate) {
    for (std::size_t k = 0; k < ws.size(); ++k)
      ws[k] *= std::conj(h[k]) * scale;
  } else {
    for (std::size_t k = 0; k < ws.size(); ++k) ws[k] *= h[k] * scale;
  }
  detail::fft2_inverse(ws, m, rows);
}

ComplexField propagate_impl(const ComplexField& field,
                            const TransferFunction& tf, bool conjugate) {
  check_compatible(field, tf, tf.grid_n);
  const int n = tf.grid_n;
  const int m = tf.padded_n;
  auto ws = detail::fft_workspace(m);
  std::fill(ws.begin(), ws.end(), cplx{});
  for (int r = 0; r < n; ++r)
    std::copy_n(&field.at(r, 0), n, ws.begin() + std::size_t(r) * m);

  filter(ws, tf, n, conjugate);

  ComplexField out(n, field.pitch());
  for (int r = 0; r < n; ++r)
    std::copy_n(ws.begin() + std::size_t(r) * m, n, &out.at(r, 0));
  return out;
}

}  // namespace

ComplexField propagate(const ComplexField& field, const TransferFunction& tf) {
  return propagate_impl(field, tf, false);
}

ComplexField propagate_adjoint(const ComplexField& field,
                               const TransferFunction& tf) {
  return propagate_impl(field, tf, true);
}

ComplexField propagate_padded(const ComplexField& padded,
                              const TransferFunction& tf, bool conjugate) {
  check_compatible(padded, tf, tf.padded_n);
  const int m = tf.padded_n;
  auto ws = detail::fft_workspace(m);
  std::copy(padded.values().begin(), padded.values().end(), ws.begin());
  filter(ws, tf, m, conjugate);
  return ComplexField(m, padded.pitch(), std::vector<cplx>(ws.begin(), ws.end()));
}

ComplexField zero_pad(const ComplexField& field, int padded_n) {
  const int n = field.grid_n();
  require(padded_n >= n, "padded grid smaller than field");
  ComplexField out(padded_n, field.pitch());
  for (int r = 0; r < n; ++r)
    std::copy_n(&field.at(r, 0), n, &out.at(r, 0));
  return out;
}

ComplexField crop(const ComplexField& field, int grid_n) {
  require(grid_n <= field.grid_n(), "crop larger than field");
  ComplexField out(grid_n, field.pitch());
  for (int r = 0; r < grid_n; ++r)
    std::copy_n(&field.at(r, 0), grid_n, &out.at(r, 0));
  return out;
}

ComplexField rs_direct(const ComplexField& field, double distance,
                       double wavelength) {
  const int n = field.grid_n();
  require(n <= kRsDirectMaxGrid,
          "rs_direct is limited to grids of " +
              std::to_string(kRsDirectMaxGrid) + " samples per side");
  require(distance > 0, "propagation distance must be > 0");
  require(wavelength > 0, "wavelength must be > 0");

  // The kernel depends only on the sample offset; tabulate it once.
  const double pitch = field.pitch();
  const int span = 2 * n - 1;
  std::vector<cplx> kernel(std::size_t(span) * span);
  const double area = pitch * pitch;
  for (int dy = -(n - 1); dy <= n - 1; ++dy) {
    for (int dx = -(n - 1); dx <= n - 1; ++dx) {
      const double x = dx * pitch;
      const double y = dy * pitch;
      const double r = std::sqrt(x * x + y * y + distance * distance);
      const cplx obliquity =
          (distance / (r * r)) *
          cplx(1.0 / (2.0 * pi * r), -1.0 / wavelength);
      kernel[std::size_t(dy + n - 1) * span + (dx + n - 1)] =
          obliquity * std::polar(1.0, 2.0 * pi * r / wavelength) * area;
    }
  }

  ComplexField out(n, pitch);
  for (int oy = 0; oy < n; ++oy) {
    for (int ox = 0; ox < n; ++ox) {
      cplx acc{};
      for (int iy = 0; iy < n; ++iy) {
        const cplx* krow =
            &kernel[std::size_t(oy - iy + n - 1) * span + (ox + n - 1)];
        const cplx* in = &field.at(iy, 0);
        for (int ix = 0; ix < n; ++ix) {
          if (in[ix] != cplx{}) acc += in[ix] * krow[-ix];
        }
      }
      out.at(oy, ox) = acc;
    }
  }
  return out;
}

ComplexField apply_phase(const ComplexField& field, const PhaseMask& mask) {
  require(mask.grid_n() == field.grid_n(),
          "mask grid does not match field grid");
  ComplexField out(field.grid_n(), field.pitch());
  auto in = field.values();
  auto dst = out.values();
  for (std::size_t k = 0; k < in.size(); ++k)
    dst[k] = in[k] * std::polar(1.0, mask[k]);
  return out;
}

double power(const ComplexField& field) {
  double acc = 0.0;
  for (const cplx& v : field.values()) acc += std::norm(v);
  return acc;
}

}  // namespace d2nn
