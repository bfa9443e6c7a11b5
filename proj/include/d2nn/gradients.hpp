#pragma once

#include <span>
#include <vector>

#include "d2nn/network.hpp"

namespace d2nn {

/// dL/dphi for every mask entry, shaped like Model::masks().
struct Gradient {
  std::vector<PhaseMask> layers;
};

struct BackwardResult {
  double loss = 0.0;
  Prediction prediction;
  Gradient grad;
};

/// Loss of forward+readout against `target` and its exact gradient with
/// respect to every mask phase, by a reverse sweep through the conjugate
/// transfer filters.
BackwardResult backward(const Model& model, const ComplexField& input,
                        const ClassVector& target);

BackwardResult backward(const Model& model, const ComplexField& input,
                        int label);

/// Loss of the full forward pipeline only.
double forward_loss(const Model& model, const ComplexField& input,
                    const ClassVector& target);

struct MaskEntry {
  int layer = 0;
  int row = 0;
  int col = 0;
};

/// Largest relative gap between backward() and central differences over
/// `entries`; denominator max(|analytic|, |numeric|, 1e-12).
double fd_check(const Model& model, const ComplexField& input,
                const ClassVector& target, std::span<const MaskEntry> entries,
                double step);

}  // namespace d2nn
