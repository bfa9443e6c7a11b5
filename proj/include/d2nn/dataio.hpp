#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "d2nn/network.hpp"

namespace d2nn {

inline constexpr int kImageSide = 28;

struct LabeledImage {
  std::array<std::uint8_t, kImageSide * kImageSide> pixels{};
  int label = 0;
};

/// Reads an IDX image/label file pair (magic 2051 / 2049, big-endian).
/// `limit` > 0 keeps only the first `limit` samples. Throws Error(Data) with
/// a specific message for wrong magic, truncation, count mismatch, or
/// non-28x28 images; Error(Io) if a file cannot be opened.
std::vector<LabeledImage> load_mnist(const std::filesystem::path& images,
                                     const std::filesystem::path& labels,
                                     std::size_t limit = 0);

enum class BeamKind { Gaussian, Uniform };
enum class Resample { Bilinear, Nearest };

struct Illumination {
  BeamKind beam = BeamKind::Gaussian;
  double waist = 0.0;  // m; 0 selects grid_n * pitch / 2
  Resample resample = Resample::Bilinear;
};

/// Digit as amplitude mask under the illumination beam, resampled to the
/// grid and normalized to unit power. All-dark images map to a uniform
/// field of unit power.
ComplexField prepare_input(const LabeledImage& img, const OpticalConfig& cfg,
                           const Illumination& illum = {});

struct TrainingMetadata {
  std::uint64_t seed = 0;
  double noise_std = 0.0;
  int epochs_completed = 0;
  double learning_rate = 0.0;
  bool operator==(const TrainingMetadata&) const = default;
};

struct Checkpoint {
  Model model;
  TrainingMetadata metadata;
};

inline constexpr int kCheckpointVersion = 1;

/// JSON header line, then layer-major, row-major little-endian float64
/// phases.
std::string serialize_checkpoint(const Model& model,
                                 const TrainingMetadata& metadata);
Checkpoint parse_checkpoint(const std::string& bytes);

void save_checkpoint(const Model& model, const TrainingMetadata& metadata,
                     const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const std::string& bytes);

}  // namespace d2nn
