#include "d2nn/verify.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "d2nn/dataio.hpp"
#include "d2nn/error.hpp"
#include "d2nn/seeds.hpp"
#include "d2nn/trainer.hpp"

namespace d2nn {

ComplexField gaussian_beam(int grid_n, double pitch, double waist) {
  require(waist > 0, "beam waist must be > 0");
  ComplexField beam(grid_n, pitch);
  const double center = (grid_n - 1) / 2.0;
  for (int r = 0; r < grid_n; ++r) {
    for (int c = 0; c < grid_n; ++c) {
      const double y = (r - center) * pitch;
      const double x = (c - center) * pitch;
      beam.at(r, c) = std::exp(-(x * x + y * y) / (waist * waist));
    }
  }
  return beam;
}

double relative_rms(const ComplexField& a, const ComplexField& ref) {
  require(a.size() == ref.size(), "field sizes differ");
  double num = 0.0, den = 0.0;
  auto av = a.values();
  auto rv = ref.values();
  for (std::size_t k = 0; k < av.size(); ++k) {
    num += std::norm(av[k] - rv[k]);
    den += std::norm(rv[k]);
  }
  require(den > 0, "reference field is zero");
  return std::sqrt(num / den);
}

double run_oracle_check(const OracleOptions& opts) {
  OpticalConfig cfg = OpticalConfig::uniform(opts.grid_n, 0, opts.distance,
                                             opts.frequency, opts.pixel_pitch);
  cfg.pad_factor = opts.pad_factor;
  cfg.validate();
  const ComplexField beam = gaussian_beam(opts.grid_n, opts.pixel_pitch, opts.waist);
  const TransferFunction tf =
      make_transfer_function(cfg, opts.distance, cfg.wavelength());
  return relative_rms(propagate(beam, tf),
                      rs_direct(beam, opts.distance, cfg.wavelength()));
}

namespace {

// A thick random stroke walk: enough structure to look like a digit.
LabeledImage synthetic_digit(std::uint64_t seed) {
  LabeledImage img;
  Rng rng(seed);
  std::uniform_int_distribution<int> pos(8, 19);
  std::uniform_int_distribution<int> turn(-1, 1);
  int r = pos(rng), c = pos(rng);
  for (int s = 0; s < 40; ++s) {
    for (int dr = -1; dr <= 1; ++dr)
      for (int dc = -1; dc <= 1; ++dc) {
        const int rr = std::clamp(r + dr, 0, kImageSide - 1);
        const int cc = std::clamp(c + dc, 0, kImageSide - 1);
        img.pixels[std::size_t(rr) * kImageSide + cc] = 255;
      }
    r = std::clamp(r + turn(rng), 4, 23);
    c = std::clamp(c + turn(rng), 4, 23);
  }
  img.label = int(seed % kClassCount);
  return img;
}

}  // namespace

double run_gradcheck(const GradcheckOptions& opts) {
  require(opts.entries >= 0, "entry count must be >= 0");
  require(opts.layers >= 1, "gradcheck needs at least one layer");
  const OpticalConfig cfg = OpticalConfig::uniform(
      opts.grid_n, opts.layers, opts.spacing, opts.frequency, opts.pixel_pitch);
  cfg.validate();
  const Model model = init_model(cfg, derive_seed(opts.seed, {0}));

  LabeledImage img;
  if (opts.pixels.empty()) {
    img = synthetic_digit(derive_seed(opts.seed, {1}));
  } else {
    require(opts.pixels.size() == img.pixels.size(),
            "gradcheck image must be 28x28");
    std::copy(opts.pixels.begin(), opts.pixels.end(), img.pixels.begin());
  }
  const ComplexField input = prepare_input(img, cfg);

  Rng rng(derive_seed(opts.seed, {2}));
  std::uniform_int_distribution<int> layer(0, opts.layers - 1);
  std::uniform_int_distribution<int> coord(0, opts.grid_n - 1);
  std::vector<MaskEntry> entries;
  for (int i = 0; i < opts.entries; ++i) {
    MaskEntry e;
    e.layer = layer(rng);
    e.row = coord(rng);
    e.col = coord(rng);
    entries.push_back(e);
  }
  return fd_check(model, input, one_hot(img.label), entries, opts.step);
}

}  // namespace d2nn
