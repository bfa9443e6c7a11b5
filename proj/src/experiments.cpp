#include "d2nn/experiments.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <sstream>

#include "d2nn/error.hpp"
#include "d2nn/seeds.hpp"

namespace d2nn {
namespace fs = std::filesystem;

std::string to_string(SweepKind kind) {
  switch (kind) {
    case SweepKind::PhaseNoise: return "phase-noise";
    case SweepKind::ZQuant: return "zquant";
    case SweepKind::Frequency: return "frequency";
    case SweepKind::Spacing: return "spacing";
  }
  return "?";
}

SweepKind parse_sweep_kind(const std::string& name) {
  if (name == "phase-noise") return SweepKind::PhaseNoise;
  if (name == "zquant") return SweepKind::ZQuant;
  if (name == "frequency") return SweepKind::Frequency;
  if (name == "spacing") return SweepKind::Spacing;
  fail(ErrorKind::InvalidArgument,
       "unknown sweep kind '" + name +
           "' (expected phase-noise, zquant, frequency or spacing)");
}

namespace {

double parse_number(const std::string& text, const std::string& what) {
  try {
    std::size_t used = 0;
    const double v = std::stod(text, &used);
    if (used != text.size() || !std::isfinite(v)) throw std::invalid_argument(text);
    return v;
  } catch (const std::exception&) {
    fail(ErrorKind::InvalidArgument, "invalid " + what + " '" + text + "'");
  }
}

std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : text) {
    if (ch == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(ch);
    }
  }
  out.push_back(cur);
  return out;
}

}  // namespace

SweepPoint parse_sweep_point(SweepKind kind, const std::string& token) {
  SweepPoint p;
  p.param = token;
  if (token.rfind("random:", 0) == 0) {
    require(kind == SweepKind::Spacing,
            "random:lo:hi values are only valid for spacing sweeps");
    const auto parts = split(token, ':');
    require(parts.size() == 3, "expected random:lo:hi, got '" + token + "'");
    const double lo = parse_number(parts[1], "spacing bound");
    const double hi = parse_number(parts[2], "spacing bound");
    require(lo > 0 && lo < hi, "spacing range needs 0 < lo < hi");
    p.range = std::make_pair(lo, hi);
    p.value = 0.5 * (lo + hi);
    return p;
  }
  p.value = parse_number(token, "sweep value");
  switch (kind) {
    case SweepKind::PhaseNoise:
      require(p.value >= 0, "phase noise sigma must be >= 0");
      break;
    default:
      require(p.value > 0, "sweep value must be > 0");
  }
  return p;
}

bool sweep_is_random(const SweepSpec& spec) {
  if (spec.kind == SweepKind::PhaseNoise) return true;
  if (spec.kind == SweepKind::Spacing)
    return std::any_of(spec.points.begin(), spec.points.end(),
                       [](const SweepPoint& p) { return p.range.has_value(); });
  return false;
}

std::uint64_t sweep_seed(std::uint64_t master, std::size_t value_index,
                         std::size_t repeat) {
  return derive_seed(master, {value_index, repeat});
}

ErrorSpec make_error_spec(SweepKind kind, const SweepPoint& point,
                          std::uint64_t seed) {
  switch (kind) {
    case SweepKind::PhaseNoise:
      return PhaseGaussian{point.value, seed};
    case SweepKind::ZQuant:
      return ZQuantize{point.value * 1e-3};
    case SweepKind::Frequency:
      return FrequencyShift{point.value * 1e9};
    case SweepKind::Spacing:
      break;
  }
  if (point.range) return SpacingSpec{UniformRange{point.range->first, point.range->second, seed}};
  return SpacingSpec{std::vector<double>{point.value}};  // expanded in run_sweep
}

std::vector<SweepAggregate> aggregate_rows(std::span<const SweepRow> rows) {
  std::vector<SweepAggregate> out;
  std::size_t i = 0;
  while (i < rows.size()) {
    std::size_t j = i;
    while (j < rows.size() && rows[j].model == rows[i].model &&
           rows[j].param == rows[i].param && rows[j].kind == rows[i].kind)
      ++j;
    const double n = double(j - i);
    double mean = 0.0;
    for (std::size_t k = i; k < j; ++k) mean += rows[k].accuracy;
    mean /= n;
    double var = 0.0;
    for (std::size_t k = i; k < j; ++k)
      var += (rows[k].accuracy - mean) * (rows[k].accuracy - mean);
    const double sd = n > 1 ? std::sqrt(var / (n - 1)) : 0.0;
    out.push_back({rows[i].kind, rows[i].param, rows[i].model, mean, sd});
    i = j;
  }
  return out;
}

SweepReport run_sweep(std::span<const NamedModel> models, const SweepSpec& spec,
                      std::span<const LabeledImage> test_set,
                      const SweepProgress& progress) {
  require(!models.empty(), "sweep needs at least one model");
  require(!spec.points.empty(), "sweep needs at least one value");
  require(spec.repeats >= 1, "repeats must be >= 1");
  require(!test_set.empty(), "sweep test set is empty");

  const int repeats = sweep_is_random(spec) ? spec.repeats : 1;
  const std::string kind = to_string(spec.kind);
  SweepReport report;
  for (const NamedModel& nm : models) {
    for (std::size_t v = 0; v < spec.points.size(); ++v) {
      const SweepPoint& point = spec.points[v];
      for (int r = 0; r < repeats; ++r) {
        const std::uint64_t seed = sweep_seed(spec.seed, v, std::size_t(r));
        ErrorSpec err = make_error_spec(spec.kind, point, seed);
        if (auto* s = std::get_if<SpacingSpec>(&err)) {
          if (auto* fixed = std::get_if<std::vector<double>>(&s->values))
            fixed->assign(nm.model.config().spacings.size(), point.value);
        }
        const Model perturbed = apply_error(nm.model, err);
        const EvalResult eval =
            evaluate(perturbed, test_set, spec.illumination, spec.workers);
        SweepRow row{kind, point.param, nm.name, r, seed, eval.accuracy,
                     eval.mean_loss};
        if (progress) progress(row);
        report.rows.push_back(std::move(row));
      }
    }
  }
  report.aggregates = aggregate_rows(report.rows);
  return report;
}

// ---------------------------------------------------------------- CSV ----

namespace {
constexpr const char* kReportHeader = "kind,param,model,repeat,seed,accuracy,mean_loss";
}

std::string report_to_csv(const SweepReport& report) {
  std::string out = std::string(kReportHeader) + "\n";
  for (const SweepRow& r : report.rows)
    out += fmt::format("{},{},{},{},{},{:.17g},{:.17g}\n", r.kind, r.param,
                       r.model, r.repeat, r.seed, r.accuracy, r.mean_loss);
  for (const SweepAggregate& a : report.aggregates)
    out += fmt::format("{},{},{},AGG,,{:.17g},{:.17g}\n", a.kind, a.param,
                       a.model, a.mean_acc, a.std_acc);
  return out;
}

SweepReport report_from_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != kReportHeader)
    fail(ErrorKind::Data, "sweep report: missing or unexpected header");
  SweepReport report;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto f = split(line, ',');
    const std::string where = "sweep report line " + std::to_string(lineno);
    if (f.size() != 7) fail(ErrorKind::Data, where + ": expected 7 fields");
    try {
      if (f[3] == "AGG") {
        report.aggregates.push_back(
            {f[0], f[1], f[2], std::stod(f[5]), std::stod(f[6])});
      } else {
        report.rows.push_back({f[0], f[1], f[2], std::stoi(f[3]),
                               std::stoull(f[4]), std::stod(f[5]),
                               std::stod(f[6])});
      }
    } catch (const std::exception&) {
      fail(ErrorKind::Data, where + ": malformed number");
    }
  }
  if (report.aggregates.empty())
    fail(ErrorKind::Data, "sweep report: no aggregate rows");
  return report;
}

std::string history_to_csv(const TrainHistory& history) {
  std::string out = "epoch,train_loss,train_acc,test_acc\n";
  for (const EpochRecord& r : history) {
    out += fmt::format("{},{:.17g},{:.17g},", r.epoch, r.train_loss, r.train_acc);
    if (r.test_acc) out += fmt::format("{:.17g}", *r.test_acc);
    out += "\n";
  }
  return out;
}

// -------------------------------------------------------------- chart ----

namespace {

std::string xml_escape(const std::string& text) {
  std::string out;
  for (char ch : text) {
    switch (ch) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out.push_back(ch);
    }
  }
  return out;
}

}  // namespace

std::string render_chart_svg(const SweepReport& report) {
  require(!report.aggregates.empty(), "nothing to plot");

  // Series in order of first appearance; x positions by param.
  std::vector<std::string> models;
  std::vector<std::string> params;
  for (const auto& a : report.aggregates) {
    if (std::find(models.begin(), models.end(), a.model) == models.end())
      models.push_back(a.model);
    if (std::find(params.begin(), params.end(), a.param) == params.end())
      params.push_back(a.param);
  }
  // Numeric params are placed by value, anything else evenly by order.
  bool numeric = true;
  std::vector<double> xs(params.size());
  for (std::size_t i = 0; i < params.size(); ++i) {
    try {
      std::size_t used = 0;
      xs[i] = std::stod(params[i], &used);
      if (used != params[i].size()) numeric = false;
    } catch (const std::exception&) {
      numeric = false;
    }
  }
  if (!numeric)
    for (std::size_t i = 0; i < params.size(); ++i) xs[i] = double(i);

  double xmin = *std::min_element(xs.begin(), xs.end());
  double xmax = *std::max_element(xs.begin(), xs.end());
  if (xmax - xmin <= 0) {
    xmin -= 0.5;
    xmax += 0.5;
  }
  const double width = 640, height = 420;
  const double left = 70, right = 170, top = 30, bottom = 60;
  const double pw = width - left - right, ph = height - top - bottom;
  auto sx = [&](double x) { return left + (x - xmin) / (xmax - xmin) * pw; };
  auto sy = [&](double y) { return top + (1.0 - std::clamp(y, 0.0, 1.0)) * ph; };
  auto x_of = [&](const std::string& p) {
    return xs[std::size_t(std::find(params.begin(), params.end(), p) - params.begin())];
  };

  static const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                  "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"};
  std::string svg = fmt::format(
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{:.0f}\" "
      "height=\"{:.0f}\" viewBox=\"0 0 {:.0f} {:.0f}\" font-family=\"sans-serif\" "
      "font-size=\"12\">\n",
      width, height, width, height);
  svg += fmt::format(
      "<rect x=\"{:.1f}\" y=\"{:.1f}\" width=\"{:.1f}\" height=\"{:.1f}\" "
      "fill=\"none\" stroke=\"#000\"/>\n",
      left, top, pw, ph);
  for (int t = 0; t <= 10; t += 2) {
    const double y = sy(t / 10.0);
    svg += fmt::format(
        "<line x1=\"{:.1f}\" y1=\"{:.1f}\" x2=\"{:.1f}\" y2=\"{:.1f}\" "
        "stroke=\"#ddd\"/><text x=\"{:.1f}\" y=\"{:.1f}\" "
        "text-anchor=\"end\">{:.1f}</text>\n",
        left, y, left + pw, y, left - 6, y + 4, t / 10.0);
  }
  for (std::size_t i = 0; i < params.size(); ++i)
    svg += fmt::format(
        "<text x=\"{:.1f}\" y=\"{:.1f}\" text-anchor=\"middle\">{}</text>\n",
        sx(xs[i]), top + ph + 18, xml_escape(params[i]));
  svg += fmt::format(
      "<text x=\"{:.1f}\" y=\"{:.1f}\" text-anchor=\"middle\">{}</text>\n",
      left + pw / 2, height - 15, xml_escape(report.aggregates.front().kind));
  svg += fmt::format(
      "<text x=\"18\" y=\"{:.1f}\" text-anchor=\"middle\" "
      "transform=\"rotate(-90 18 {:.1f})\">mean accuracy</text>\n",
      top + ph / 2, top + ph / 2);

  for (std::size_t m = 0; m < models.size(); ++m) {
    const char* color = palette[m % std::size(palette)];
    std::vector<const SweepAggregate*> pts;
    for (const auto& a : report.aggregates)
      if (a.model == models[m]) pts.push_back(&a);
    std::stable_sort(pts.begin(), pts.end(), [&](auto* a, auto* b) {
      return x_of(a->param) < x_of(b->param);
    });
    std::string line;
    for (const auto* a : pts) {
      const double x = sx(x_of(a->param));
      line += fmt::format("{}{:.1f},{:.1f}", line.empty() ? "" : " ", x,
                          sy(a->mean_acc));
      svg += fmt::format(
          "<line x1=\"{:.1f}\" y1=\"{:.1f}\" x2=\"{:.1f}\" y2=\"{:.1f}\" "
          "stroke=\"{}\"/>\n",
          x, sy(a->mean_acc - a->std_acc), x, sy(a->mean_acc + a->std_acc),
          color);
      svg += fmt::format(
          "<circle cx=\"{:.1f}\" cy=\"{:.1f}\" r=\"3\" fill=\"{}\"/>\n", x,
          sy(a->mean_acc), color);
    }
    svg += fmt::format(
        "<polyline points=\"{}\" fill=\"none\" stroke=\"{}\" "
        "stroke-width=\"1.5\"/>\n",
        line, color);
    const double ly = top + 10 + 18.0 * double(m);
    svg += fmt::format(
        "<line x1=\"{:.1f}\" y1=\"{:.1f}\" x2=\"{:.1f}\" y2=\"{:.1f}\" "
        "stroke=\"{}\" stroke-width=\"2\"/><text x=\"{:.1f}\" "
        "y=\"{:.1f}\">{}</text>\n",
        left + pw + 12, ly, left + pw + 32, ly, color, left + pw + 38, ly + 4,
        xml_escape(models[m]));
  }
  svg += "</svg>\n";
  return svg;
}

// ------------------------------------------------------------ heights ----

std::string height_map_to_csv(const HeightMap& heights) {
  std::string out;
  const int n = heights.grid_n;
  for (int r = 0; r < n; ++r) {
    for (int c = 0; c < n; ++c) {
      if (c) out.push_back(',');
      out += fmt::format("{}", heights.heights[std::size_t(r) * n + c] * 1e3);
    }
    out.push_back('\n');
  }
  return out;
}

std::vector<HistogramBin> height_histogram(std::span<const HeightMap> maps,
                                           double full_height_m, int bins) {
  require(full_height_m > 0 && bins > 0, "invalid histogram range");
  std::vector<HistogramBin> out(static_cast<std::size_t>(bins));
  const double width = full_height_m / bins;
  for (int b = 0; b < bins; ++b) {
    out[b].lo_mm = b * width * 1e3;
    out[b].hi_mm = (b + 1) * width * 1e3;
  }
  for (const HeightMap& m : maps) {
    for (double h : m.heights) {
      int b = int(std::floor(h / width));
      out[std::size_t(std::clamp(b, 0, bins - 1))].count++;
    }
  }
  return out;
}

std::string histogram_to_csv(std::span<const HistogramBin> bins) {
  std::string out = "bin_lo_mm,bin_hi_mm,count\n";
  for (const HistogramBin& b : bins)
    out += fmt::format("{:.6f},{:.6f},{}\n", b.lo_mm, b.hi_mm, b.count);
  return out;
}

void export_heights(const Model& model, const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) fail(ErrorKind::Io, "cannot create " + dir.string() + ": " + ec.message());
  const OpticalConfig& cfg = model.config();
  std::vector<HeightMap> maps;
  for (std::size_t l = 0; l < model.masks().size(); ++l) {
    maps.push_back(
        phase_to_height(model.masks()[l], cfg.wavelength(), cfg.material_index));
    write_file(dir / fmt::format("layer_{}_heights.csv", l + 1),
               height_map_to_csv(maps.back()));
  }
  const double full =
      2.0 * std::numbers::pi * height_per_radian(cfg.wavelength(), cfg.material_index);
  write_file(dir / "heights_histogram.csv",
             histogram_to_csv(height_histogram(maps, full)));
}

}  // namespace d2nn
