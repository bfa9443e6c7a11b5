#include "d2nn/network.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <utility>

#include "d2nn/error.hpp"

namespace d2nn {

DetectorLayout DetectorLayout::default_for(int grid_n) {
  const int w = std::max(1, grid_n / 10);
  const int gap = std::min(w, std::max(0, (grid_n - 5 * w) / 4));
  const int total_w = 5 * w + 4 * gap;
  const int total_h = 2 * w + gap;
  const int col0 = (grid_n - total_w) / 2;
  const int row0 = (grid_n - total_h) / 2;
  DetectorLayout layout;
  for (int c = 0; c < kClassCount; ++c) {
    const int row = c / 5;
    const int col = c % 5;
    layout.regions[c] = Region{row0 + row * (w + gap), col0 + col * (w + gap),
                               w, w};
  }
  return layout;
}

void DetectorLayout::validate(int grid_n) const {
  for (int c = 0; c < kClassCount; ++c) {
    const Region& r = regions[c];
    require(r.height > 0 && r.width > 0,
            "detector region " + std::to_string(c) + " is empty");
    require(r.row >= 0 && r.col >= 0 && r.row + r.height <= grid_n &&
                r.col + r.width <= grid_n,
            "detector region " + std::to_string(c) + " leaves the grid");
    for (int o = 0; o < c; ++o) {
      const Region& s = regions[o];
      const bool overlap = r.row < s.row + s.height && s.row < r.row + r.height &&
                           r.col < s.col + s.width && s.col < r.col + r.width;
      require(!overlap, "detector regions " + std::to_string(o) + " and " +
                            std::to_string(c) + " overlap");
    }
  }
}

Model::Model(OpticalConfig cfg, std::vector<PhaseMask> masks,
             DetectorLayout layout, ReadoutConfig readout)
    : cfg_(std::move(cfg)),
      masks_(std::move(masks)),
      layout_(layout),
      readout_(readout) {
  cfg_.validate();
  layout_.validate(cfg_.grid_n);
  require(masks_.size() == std::size_t(cfg_.layer_count),
          "model needs " + std::to_string(cfg_.layer_count) + " masks, got " +
              std::to_string(masks_.size()));
  require(readout_.kind == ReadoutKind::Intensity || readout_.temperature > 0,
          "softmax temperature must be > 0");

  std::map<std::pair<double, double>, std::shared_ptr<const TransferFunction>>
      cache;
  const double lambda = cfg_.wavelength();
  for (double d : cfg_.spacings) {
    auto& slot = cache[{d, lambda}];
    if (!slot)
      slot = std::make_shared<const TransferFunction>(
          make_transfer_function(cfg_, d, lambda));
    transfers_.push_back(slot);
  }
  build_modulations();
}

Model::Model(OpticalConfig cfg, std::vector<PhaseMask> masks,
             DetectorLayout layout, ReadoutConfig readout,
             std::vector<std::shared_ptr<const TransferFunction>> transfers)
    : cfg_(std::move(cfg)),
      masks_(std::move(masks)),
      layout_(layout),
      readout_(readout),
      transfers_(std::move(transfers)) {
  build_modulations();
}

void Model::build_modulations() {
  modulations_.clear();
  modulations_.reserve(masks_.size());
  for (const PhaseMask& mask : masks_) {
    require(mask.grid_n() == cfg_.grid_n, "mask grid does not match config");
    std::vector<cplx> m(mask.size());
    for (std::size_t k = 0; k < m.size(); ++k) {
      require(std::isfinite(mask[k]), "mask phases must be finite");
      m[k] = std::polar(1.0, mask[k]);
    }
    modulations_.push_back(std::move(m));
  }
}

Model Model::with_masks(std::vector<PhaseMask> masks) const {
  require(masks.size() == masks_.size(), "mask count mismatch");
  return Model(cfg_, std::move(masks), layout_, readout_, transfers_);
}

Model Model::with_config(OpticalConfig cfg) const {
  return Model(std::move(cfg), masks_, layout_, readout_);
}

ForwardResult forward(const Model& model, const ComplexField& input,
                      bool keep_intermediates) {
  const OpticalConfig& cfg = model.config();
  require(input.grid_n() == cfg.grid_n,
          "input grid " + std::to_string(input.grid_n()) +
              " does not match model grid " + std::to_string(cfg.grid_n));

  ForwardResult result;
  ComplexField field = input;
  for (int l = 0; l < cfg.layer_count; ++l) {
    field = propagate(field, model.transfer(l));
    auto mod = model.modulation(l);
    auto values = field.values();
    for (std::size_t k = 0; k < values.size(); ++k) values[k] *= mod[k];
    if (keep_intermediates) result.planes.push_back(field);
  }
  field = propagate(field, model.transfer(cfg.layer_count));

  Prediction& pred = result.prediction;
  pred.intensities = detect(field, model.layout());
  pred.q = readout(pred.intensities, model.readout());
  pred.predicted_class = argmax(pred.q);
  if (keep_intermediates) result.planes.push_back(std::move(field));
  return result;
}

Prediction predict(const Model& model, const ComplexField& input) {
  return forward(model, input, false).prediction;
}

ClassVector detect(const ComplexField& field, const DetectorLayout& layout) {
  ClassVector out{};
  for (int c = 0; c < kClassCount; ++c) {
    const Region& r = layout.regions[c];
    double acc = 0.0;
    for (int row = r.row; row < r.row + r.height; ++row)
      for (int col = r.col; col < r.col + r.width; ++col)
        acc += std::norm(field.at(row, col));
    out[c] = acc;
  }
  return out;
}

ClassVector readout(const ClassVector& intensities, const ReadoutConfig& cfg) {
  ClassVector q{};
  double total = 0.0;
  for (int c = 0; c < kClassCount; ++c) {
    require(intensities[c] >= 0, "detector intensities must be >= 0");
    total += intensities[c] + kReadoutEpsilon;
  }
  if (cfg.kind == ReadoutKind::Intensity) {
    for (int c = 0; c < kClassCount; ++c)
      q[c] = (intensities[c] + kReadoutEpsilon) / total;
    return q;
  }
  // Softmax over normalized intensities / T.
  require(cfg.temperature > 0, "softmax temperature must be > 0");
  ClassVector z{};
  for (int c = 0; c < kClassCount; ++c)
    z[c] = intensities[c] / (total * cfg.temperature);
  const double zmax = *std::max_element(z.begin(), z.end());
  double sum = 0.0;
  for (int c = 0; c < kClassCount; ++c) {
    q[c] = std::exp(z[c] - zmax);
    sum += q[c];
  }
  for (double& v : q) v /= sum;
  return q;
}

int argmax(const ClassVector& v) {
  int best = 0;
  for (int c = 1; c < kClassCount; ++c)
    if (v[c] > v[best]) best = c;
  return best;
}

double loss(const ClassVector& p, const ClassVector& q) {
  int ones = 0;
  for (double v : p) {
    require(v == 0.0 || v == 1.0, "target must be one-hot");
    ones += v == 1.0;
  }
  require(ones == 1, "target must be one-hot");
  double acc = 0.0;
  for (int c = 0; c < kClassCount; ++c) {
    const double qc = std::clamp(q[c], kLossClip, 1.0 - kLossClip);
    acc -= p[c] * std::log(qc) + (1.0 - p[c]) * std::log(1.0 - qc);
  }
  return acc;
}

ClassVector one_hot(int label) {
  require(label >= 0 && label < kClassCount, "label out of range");
  ClassVector p{};
  p[label] = 1.0;
  return p;
}

}  // namespace d2nn
