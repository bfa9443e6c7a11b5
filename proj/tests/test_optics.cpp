#include <doctest.h>

#include <cmath>
#include <complex>
#include <numbers>

#include "d2nn/error.hpp"
#include "d2nn/optics.hpp"
#include "d2nn/verify.hpp"
#include "helpers.hpp"

using namespace d2nn;
using testing::kTwoPi;
using testing::random_field;
using testing::rel_diff;

namespace {

OpticalConfig small_config(int n = 64) {
  return OpticalConfig::uniform(n, 1, 0.03);
}

// Field with no energy outside the propagating band of `tf`.
ComplexField band_limited_padded(const TransferFunction& tf, std::uint64_t seed) {
  ComplexField raw = random_field(tf.padded_n, tf.pitch, seed);
  return propagate_padded(raw, tf);
}

}  // namespace

TEST_SUITE("optics") {

TEST_CASE("config validation") {
  OpticalConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  CHECK(cfg.wavelength() == kSpeedOfLight / cfg.frequency);
  CHECK(cfg.padded_n() == 200);

  auto bad = cfg;
  bad.grid_n = 7;
  CHECK_THROWS_AS(bad.validate(), Error);
  bad = cfg;
  bad.grid_n = 101;
  CHECK_THROWS_AS(bad.validate(), Error);
  bad = cfg;
  bad.spacings.pop_back();
  CHECK_THROWS_AS(bad.validate(), Error);
  bad = cfg;
  bad.spacings[2] = 0.0;
  CHECK_THROWS_AS(bad.validate(), Error);
  bad = cfg;
  bad.material_index = 1.0;
  CHECK_THROWS_AS(bad.validate(), Error);
  bad = cfg;
  bad.pad_factor = 3;
  CHECK_THROWS_AS(bad.validate(), Error);
  bad = cfg;
  bad.frequency = -1.0;
  CHECK_THROWS_AS(bad.validate(), Error);
  bad = cfg;
  bad.pixel_pitch = 0.0;
  CHECK_THROWS_AS(bad.validate(), Error);
}

TEST_CASE("transfer function DC term is the plane-wave phase") {
  const auto cfg = small_config();
  const double d = 0.03;
  const auto tf = make_transfer_function(cfg, d, cfg.wavelength());
  const cplx expected = std::polar(1.0, kTwoPi * d / cfg.wavelength());
  CHECK(std::abs(tf.spectrum[0] - expected) < 1e-12);
}

TEST_CASE("evanescent components are zero") {
  // Fine pitch so that f_x = 2/lambda is representable on the grid.
  const double lambda = kSpeedOfLight / 400e9;
  auto cfg = OpticalConfig::uniform(64, 1, 1e-3, 400e9, lambda / 8);
  const auto tf = make_transfer_function(cfg, 1e-3, lambda);
  const int m = tf.padded_n;
  int k = 0;
  while (fft_frequency(k, m, cfg.pixel_pitch) < 2.0 / lambda) ++k;
  CHECK(fft_frequency(k, m, cfg.pixel_pitch) < 2.2 / lambda);
  CHECK(tf.spectrum[std::size_t(k)] == cplx(0.0, 0.0));  // row 0, column k
  CHECK(tf.spectrum[std::size_t(k) * m] == cplx(0.0, 0.0));
}

TEST_CASE("transfer function is a pure phase filter where nonzero") {
  const auto cfg = small_config();
  const auto tf = make_transfer_function(cfg, 0.03, cfg.wavelength());
  int nonzero = 0;
  for (const cplx& h : tf.spectrum) {
    if (h == cplx(0.0, 0.0)) continue;
    ++nonzero;
    CHECK(std::abs(std::abs(h) - 1.0) < 1e-12);
  }
  CHECK(nonzero > 0);
  // Entries outside the band limit are exactly zero.
  const int m = tf.padded_n;
  for (int r = 0; r < m; ++r)
    for (int c = 0; c < m; ++c) {
      const double fx = std::abs(fft_frequency(c, m, tf.pitch));
      const double fy = std::abs(fft_frequency(r, m, tf.pitch));
      if (fx > tf.band_limit || fy > tf.band_limit)
        CHECK(tf.spectrum[std::size_t(r) * m + c] == cplx(0.0, 0.0));
    }
}

TEST_CASE("all-ones transfer function is the identity") {
  const auto cfg = small_config(32);
  TransferFunction tf = make_transfer_function(cfg, 0.03, cfg.wavelength());
  std::fill(tf.spectrum.begin(), tf.spectrum.end(), cplx(1.0, 0.0));
  const auto u = random_field(32, cfg.pixel_pitch, 3);
  CHECK(rel_diff(propagate(u, tf), u) <= 1e-12);
}

TEST_CASE("propagation is linear") {
  const auto cfg = small_config();
  const auto tf = make_transfer_function(cfg, 0.03, cfg.wavelength());
  const auto u = random_field(64, cfg.pixel_pitch, 1);
  const auto v = random_field(64, cfg.pixel_pitch, 2);
  const cplx a(0.7, -1.3), b(-2.1, 0.4);
  ComplexField mix(64, cfg.pixel_pitch);
  for (std::size_t i = 0; i < mix.size(); ++i)
    mix.values()[i] = a * u.values()[i] + b * v.values()[i];
  const auto pu = propagate(u, tf), pv = propagate(v, tf), pm = propagate(mix, tf);
  ComplexField expect(64, cfg.pixel_pitch);
  for (std::size_t i = 0; i < expect.size(); ++i)
    expect.values()[i] = a * pu.values()[i] + b * pv.values()[i];
  CHECK(rel_diff(pm, expect) <= 1e-12);
}

TEST_CASE("padded propagation conserves power and is reversible") {
  for (double d : {0.005, 0.03, 0.1}) {
    CAPTURE(d);
    const auto cfg = small_config();
    const auto tf = make_transfer_function(cfg, d, cfg.wavelength());
    const auto v = band_limited_padded(tf, 11);
    const auto w = propagate_padded(v, tf);
    CHECK(std::abs(power(w) - power(v)) <= 1e-9 * power(v));

    const auto back = propagate_padded(w, tf, /*conjugate=*/true);
    CHECK(rel_diff(back, v) <= 1e-9);
  }
}

TEST_CASE("cropping never gains power") {
  const auto cfg = small_config();
  const auto tf = make_transfer_function(cfg, 0.03, cfg.wavelength());
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto u = random_field(64, cfg.pixel_pitch, seed);
    CHECK(power(propagate(u, tf)) <= power(u) * (1 + 1e-9));
  }
}

TEST_CASE("adjoint satisfies the inner-product identity") {
  const auto cfg = small_config();
  const auto tf = make_transfer_function(cfg, 0.03, cfg.wavelength());
  for (std::uint64_t seed = 0; seed < 4; ++seed) {
    const auto u = random_field(64, cfg.pixel_pitch, 100 + seed);
    const auto v = random_field(64, cfg.pixel_pitch, 200 + seed);
    const auto pu = propagate(u, tf);
    const auto av = propagate_adjoint(v, tf);
    cplx lhs = 0.0, rhs = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) {
      lhs += pu.values()[i] * std::conj(v.values()[i]);
      rhs += u.values()[i] * std::conj(av.values()[i]);
    }
    CHECK(std::abs(lhs - rhs) <= 1e-10 * std::abs(lhs));
  }
}

TEST_CASE("padding and cropping") {
  const auto u = random_field(16, 1e-3, 5);
  const auto p = zero_pad(u, 32);
  CHECK(p.grid_n() == 32);
  CHECK(power(p) == doctest::Approx(power(u)).epsilon(1e-15));
  CHECK(p.at(0, 0) == u.at(0, 0));
  CHECK(p.at(15, 15) == u.at(15, 15));
  CHECK(p.at(16, 0) == cplx(0.0, 0.0));
  CHECK(p.at(31, 31) == cplx(0.0, 0.0));
  const auto c = crop(p, 16);
  CHECK(rel_diff(c, u) == 0.0);
}

TEST_CASE("rs_direct single sample matches the kernel") {
  const double pitch = 0.4e-3, d = 0.03, lambda = kSpeedOfLight / 400e9;
  ComplexField u(16, pitch);
  u.at(8, 8) = 1.0;
  const auto out = rs_direct(u, d, lambda);
  const double r = d;
  const cplx j(0.0, 1.0);
  const cplx expected = (d / (r * r)) * (1.0 / (kTwoPi * r) + 1.0 / (j * lambda)) *
                        std::exp(j * kTwoPi * r / lambda) * pitch * pitch;
  CHECK(std::abs(out.at(8, 8) - expected) <= 1e-12 * std::abs(expected));
}

TEST_CASE("rs_direct of zero is zero and is size-limited") {
  ComplexField zero(16, 0.4e-3);
  const auto out = rs_direct(zero, 0.03, 0.75e-3);
  CHECK(power(out) == 0.0);
  ComplexField big(kRsDirectMaxGrid + 2, 0.4e-3);
  CHECK_THROWS_AS(rs_direct(big, 0.03, 0.75e-3), Error);
}

TEST_CASE("angular spectrum agrees with direct Rayleigh-Sommerfeld") {
  const double rms = run_oracle_check(OracleOptions{});
  MESSAGE("relative RMS " << rms);
  CHECK(rms <= kOracleTolerance);
}

TEST_CASE("apply_phase") {
  const auto u = random_field(32, 1e-3, 9);
  CHECK(rel_diff(apply_phase(u, PhaseMask(32, 0.0)), u) == 0.0);

  ComplexField ones(32, 1e-3);
  for (auto& v : ones.values()) v = 1.0;
  const auto flipped = apply_phase(ones, PhaseMask(32, std::numbers::pi));
  for (const cplx& v : flipped.values()) CHECK(std::abs(v - cplx(-1.0, 0.0)) < 1e-15);

  std::mt19937_64 rng(4);
  const auto mask = testing::random_mask(32, rng);
  CHECK(std::abs(power(apply_phase(u, mask)) - power(u)) <= 1e-12 * power(u));

  CHECK_THROWS_AS(apply_phase(u, PhaseMask(16, 0.0)), Error);
}

TEST_CASE("power") {
  ComplexField f(8, 1e-3);
  CHECK(power(f) == 0.0);
  f.at(3, 4) = 1.0;
  CHECK(power(f) == 1.0);
  const auto u = random_field(8, 1e-3, 2);
  ComplexField doubled = u;
  for (auto& v : doubled.values()) v *= 2.0;
  CHECK(power(doubled) == doctest::Approx(4.0 * power(u)).epsilon(1e-15));
}

TEST_CASE("finite check") {
  auto f = random_field(8, 1e-3, 1);
  CHECK(f.all_finite());
  f.at(2, 2) = cplx(std::nan(""), 0.0);
  CHECK_FALSE(f.all_finite());
}

}
