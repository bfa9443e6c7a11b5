#pragma once

#include <span>
#include <vector>

namespace d2nn {

/// Per-neuron phase (radians, unwrapped) of one diffraction layer.
class PhaseMask {
 public:
  PhaseMask() = default;
  explicit PhaseMask(int grid_n, double value = 0.0)
      : n_(grid_n), phases_(std::size_t(grid_n) * grid_n, value) {}
  PhaseMask(int grid_n, std::vector<double> phases);

  int grid_n() const { return n_; }
  std::size_t size() const { return phases_.size(); }

  double& at(int row, int col) { return phases_[std::size_t(row) * n_ + col]; }
  double at(int row, int col) const {
    return phases_[std::size_t(row) * n_ + col];
  }
  double& operator[](std::size_t k) { return phases_[k]; }
  double operator[](std::size_t k) const { return phases_[k]; }

  std::span<double> values() { return phases_; }
  std::span<const double> values() const { return phases_; }

  bool operator==(const PhaseMask&) const = default;

 private:
  int n_ = 0;
  std::vector<double> phases_;
};

}  // namespace d2nn
