#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "d2nn/dataio.hpp"
#include "d2nn/error_models.hpp"
#include "d2nn/trainer.hpp"

namespace d2nn {

enum class SweepKind { PhaseNoise, ZQuant, Frequency, Spacing };

std::string to_string(SweepKind kind);
SweepKind parse_sweep_kind(const std::string& name);

/// One x-axis value of a sweep. Units on the command line: phase-noise in
/// rad, zquant in mm, frequency in GHz, spacing in m. A spacing point may be
/// "random:lo:hi" (all slots drawn i.i.d. from [lo, hi]).
struct SweepPoint {
  std::string param;  // as written in the report
  double value = 0.0;
  std::optional<std::pair<double, double>> range;
};

SweepPoint parse_sweep_point(SweepKind kind, const std::string& token);

struct SweepSpec {
  SweepKind kind = SweepKind::PhaseNoise;
  std::vector<SweepPoint> points;
  int repeats = 12;
  std::uint64_t seed = 0;
  int workers = 1;
  Illumination illumination{};
};

/// True when the perturbation draws random numbers; otherwise each point is
/// evaluated once. The repeat count is shared by every point of a report.
bool sweep_is_random(const SweepSpec& spec);

/// Seed used for (value index, repeat index). Shared by every model so all
/// networks see the same perturbation draws.
std::uint64_t sweep_seed(std::uint64_t master, std::size_t value_index,
                         std::size_t repeat);

ErrorSpec make_error_spec(SweepKind kind, const SweepPoint& point,
                          std::uint64_t seed);

struct SweepRow {
  std::string kind;
  std::string param;
  std::string model;
  int repeat = 0;
  std::uint64_t seed = 0;
  double accuracy = 0.0;
  double mean_loss = 0.0;
};

struct SweepAggregate {
  std::string kind;
  std::string param;
  std::string model;
  double mean_acc = 0.0;
  double std_acc = 0.0;  // sample std, 0 for a single repeat
};

struct SweepReport {
  std::vector<SweepRow> rows;
  std::vector<SweepAggregate> aggregates;
};

struct NamedModel {
  std::string name;
  Model model;
};

using SweepProgress = std::function<void(const SweepRow&)>;

/// Rows are ordered model, value, repeat regardless of execution order.
SweepReport run_sweep(std::span<const NamedModel> models, const SweepSpec& spec,
                      std::span<const LabeledImage> test_set,
                      const SweepProgress& progress = {});

/// Recomputes aggregates (mean, sample std per model/param) from rows.
std::vector<SweepAggregate> aggregate_rows(std::span<const SweepRow> rows);

std::string report_to_csv(const SweepReport& report);
SweepReport report_from_csv(const std::string& text);

/// Line chart: one series per model, mean accuracy vs param, std error bars.
std::string render_chart_svg(const SweepReport& report);

std::string history_to_csv(const TrainHistory& history);

/// One row per grid row, millimeters, shortest round-trip precision.
std::string height_map_to_csv(const HeightMap& heights);

struct HistogramBin {
  double lo_mm = 0.0;
  double hi_mm = 0.0;
  long count = 0;
};

/// `bins` equal bins over [0, full_height) pooled across all maps.
std::vector<HistogramBin> height_histogram(std::span<const HeightMap> maps,
                                           double full_height_m, int bins = 64);
std::string histogram_to_csv(std::span<const HistogramBin> bins);

/// Writes layer_<i>_heights.csv for each mask and heights_histogram.csv.
void export_heights(const Model& model, const std::filesystem::path& dir);

}  // namespace d2nn
