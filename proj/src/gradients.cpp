#include "d2nn/gradients.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <fftw3.h>

#include <complex>
#include <mutex>

#include "d2nn/error.hpp"

namespace d2nn {
namespace {

using lcplx = std::complex<long double>;

// Full forward pipeline in long double with one mask entry offset by `delta`.
// Separate from the production path (own FFTs, own readout and loss) and
// accurate enough that central differences at step ~1e-6 are not dominated
// by rounding in the loss.
long double extended_loss(const Model& model, const ComplexField& input,
                          const ClassVector& target, const MaskEntry& entry,
                          long double delta) {
  const OpticalConfig& cfg = model.config();
  const int n = cfg.grid_n;
  const int m = cfg.padded_n();
  const std::size_t mm = std::size_t(m) * m;

  auto* buf = fftwl_alloc_complex(mm);
  fftwl_plan fwd, inv;
  {
    static std::mutex planner;
    std::lock_guard lock(planner);
    fwd = fftwl_plan_dft_2d(m, m, buf, buf, FFTW_FORWARD, FFTW_ESTIMATE);
    inv = fftwl_plan_dft_2d(m, m, buf, buf, FFTW_BACKWARD, FFTW_ESTIMATE);
  }
  auto* data = reinterpret_cast<lcplx*>(buf);

  std::vector<lcplx> field(std::size_t(n) * n);
  for (std::size_t k = 0; k < field.size(); ++k)
    field[k] = lcplx(input.values()[k].real(), input.values()[k].imag());

  auto hop = [&](int slot) {
    const TransferFunction& tf = model.transfer(slot);
    std::fill(data, data + mm, lcplx{});
    for (int r = 0; r < n; ++r)
      for (int c = 0; c < n; ++c)
        data[std::size_t(r) * m + c] = field[std::size_t(r) * n + c];
    fftwl_execute(fwd);
    const long double scale = 1.0L / (static_cast<long double>(m) * m);
    for (std::size_t k = 0; k < mm; ++k) {
      const cplx h = tf.spectrum[k];
      data[k] *= lcplx(h.real(), h.imag()) * scale;
    }
    fftwl_execute(inv);
    for (int r = 0; r < n; ++r)
      for (int c = 0; c < n; ++c)
        field[std::size_t(r) * n + c] = data[std::size_t(r) * m + c];
  };

  for (int l = 0; l < cfg.layer_count; ++l) {
    hop(l);
    const PhaseMask& mask = model.masks()[l];
    for (int r = 0; r < n; ++r) {
      for (int c = 0; c < n; ++c) {
        long double phi = mask.at(r, c);
        if (l == entry.layer && r == entry.row && c == entry.col) phi += delta;
        field[std::size_t(r) * n + c] *= std::polar(1.0L, phi);
      }
    }
  }
  hop(cfg.layer_count);

  {
    static std::mutex planner;
    std::lock_guard lock(planner);
    fftwl_destroy_plan(fwd);
    fftwl_destroy_plan(inv);
    fftwl_free(buf);
  }

  std::array<long double, kClassCount> intensity{};
  long double total = 0;
  for (int cls = 0; cls < kClassCount; ++cls) {
    const Region& reg = model.layout().regions[cls];
    for (int r = reg.row; r < reg.row + reg.height; ++r)
      for (int c = reg.col; c < reg.col + reg.width; ++c)
        intensity[cls] += std::norm(field[std::size_t(r) * n + c]);
    total += intensity[cls] + static_cast<long double>(kReadoutEpsilon);
  }

  std::array<long double, kClassCount> q{};
  const ReadoutConfig& ro = model.readout();
  if (ro.kind == ReadoutKind::Intensity) {
    for (int c = 0; c < kClassCount; ++c)
      q[c] = (intensity[c] + static_cast<long double>(kReadoutEpsilon)) / total;
  } else {
    long double zmax = -1e300L, sum = 0;
    std::array<long double, kClassCount> z{};
    for (int c = 0; c < kClassCount; ++c) {
      z[c] = intensity[c] / (total * ro.temperature);
      zmax = std::max(zmax, z[c]);
    }
    for (int c = 0; c < kClassCount; ++c) sum += (q[c] = std::exp(z[c] - zmax));
    for (auto& v : q) v /= sum;
  }

  long double acc = 0;
  const long double lo = kLossClip;
  for (int c = 0; c < kClassCount; ++c) {
    const long double qc = std::clamp(q[c], lo, 1.0L - lo);
    acc -= target[c] * std::log(qc) + (1.0L - target[c]) * std::log(1.0L - qc);
  }
  return acc;
}

// dL/dq for the clipped per-class cross-entropy. Clipped entries have zero
// derivative.
ClassVector loss_grad_q(const ClassVector& p, const ClassVector& q) {
  ClassVector g{};
  for (int c = 0; c < kClassCount; ++c) {
    if (q[c] < kLossClip || q[c] > 1.0 - kLossClip) continue;
    g[c] = -p[c] / q[c] + (1.0 - p[c]) / (1.0 - q[c]);
  }
  return g;
}

// dL/dI given dL/dq.
ClassVector readout_grad(const ClassVector& intensities, const ClassVector& q,
                         const ClassVector& gq, const ReadoutConfig& cfg) {
  double total = 0.0;
  for (double v : intensities) total += v + kReadoutEpsilon;
  ClassVector gi{};
  if (cfg.kind == ReadoutKind::Intensity) {
    double mix = 0.0;
    for (int c = 0; c < kClassCount; ++c) mix += gq[c] * q[c];
    for (int c = 0; c < kClassCount; ++c) gi[c] = (gq[c] - mix) / total;
    return gi;
  }
  // z_c = I_c / (total * T), q = softmax(z)
  double mix = 0.0;
  for (int c = 0; c < kClassCount; ++c) mix += gq[c] * q[c];
  ClassVector gz{};
  double zsum = 0.0;
  for (int c = 0; c < kClassCount; ++c) {
    gz[c] = q[c] * (gq[c] - mix);
    zsum += gz[c] * intensities[c];
  }
  const double t = cfg.temperature;
  for (int c = 0; c < kClassCount; ++c)
    gi[c] = gz[c] / (t * total) - zsum / (t * total * total);
  return gi;
}

}  // namespace

double forward_loss(const Model& model, const ComplexField& input,
                    const ClassVector& target) {
  return loss(target, predict(model, input).q);
}

BackwardResult backward(const Model& model, const ComplexField& input,
                        const ClassVector& target) {
  const int layers = model.config().layer_count;
  ForwardResult fwd = forward(model, input, true);

  BackwardResult result;
  result.prediction = fwd.prediction;
  result.loss = loss(target, fwd.prediction.q);

  const ClassVector gq = loss_grad_q(target, fwd.prediction.q);
  const ClassVector gi = readout_grad(fwd.prediction.intensities,
                                      fwd.prediction.q, gq, model.readout());

  // Cogradient G with dL = Re(sum conj(G) du). For I = |u|^2 it is 2 dL/dI u.
  const ComplexField& out = fwd.planes.back();
  ComplexField cograd(out.grid_n(), out.pitch());
  const DetectorLayout& layout = model.layout();
  for (int c = 0; c < kClassCount; ++c) {
    const Region& r = layout.regions[c];
    for (int row = r.row; row < r.row + r.height; ++row)
      for (int col = r.col; col < r.col + r.width; ++col)
        cograd.at(row, col) = 2.0 * gi[c] * out.at(row, col);
  }

  result.grad.layers.assign(std::size_t(layers), PhaseMask{});
  for (int l = layers - 1; l >= 0; --l) {
    cograd = propagate_adjoint(cograd, model.transfer(l + 1));
    // w = v exp(i phi): dL/dphi = Re(conj(G) i w) = Im(G conj(w))
    const ComplexField& after = fwd.planes[l];
    auto g = cograd.values();
    auto w = after.values();
    PhaseMask grad(after.grid_n());
    for (std::size_t k = 0; k < g.size(); ++k)
      grad[k] = g[k].imag() * w[k].real() - g[k].real() * w[k].imag();
    result.grad.layers[l] = std::move(grad);
    if (l == 0) break;
    auto mod = model.modulation(l);
    for (std::size_t k = 0; k < g.size(); ++k) g[k] *= std::conj(mod[k]);
  }
  return result;
}

BackwardResult backward(const Model& model, const ComplexField& input,
                        int label) {
  return backward(model, input, one_hot(label));
}

double fd_check(const Model& model, const ComplexField& input,
                const ClassVector& target, std::span<const MaskEntry> entries,
                double step) {
  require(step > 0 && std::isfinite(step), "finite-difference step must be > 0");
  const OpticalConfig& cfg = model.config();
  for (const MaskEntry& e : entries) {
    require(e.layer >= 0 && e.layer < cfg.layer_count && e.row >= 0 &&
                e.row < cfg.grid_n && e.col >= 0 && e.col < cfg.grid_n,
            "mask entry (" + std::to_string(e.layer) + ", " +
                std::to_string(e.row) + ", " + std::to_string(e.col) +
                ") is out of range");
  }
  if (entries.empty()) return 0.0;

  const BackwardResult analytic = backward(model, input, target);
  double worst = 0.0;
  for (const MaskEntry& e : entries) {
    const long double up = extended_loss(model, input, target, e, step);
    const long double down = extended_loss(model, input, target, e, -step);
    const double numeric = double((up - down) / (2.0L * step));
    const double exact = analytic.grad.layers[e.layer].at(e.row, e.col);
    const double denom =
        std::max({std::abs(exact), std::abs(numeric), 1e-12});
    worst = std::max(worst, std::abs(exact - numeric) / denom);
  }
  return worst;
}

}  // namespace d2nn
