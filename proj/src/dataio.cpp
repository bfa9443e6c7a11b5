#include "d2nn/dataio.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>

#include <json.hpp>

#include "d2nn/error.hpp"

namespace d2nn {
namespace fs = std::filesystem;
using nlohmann::json;

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::Io, "cannot open " + path.string());
  return std::string(std::istreambuf_iterator<char>(in), {});
}

void write_file(const fs::path& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorKind::Io, "cannot write " + path.string());
  out.write(bytes.data(), std::streamsize(bytes.size()));
  if (!out) fail(ErrorKind::Io, "write failed for " + path.string());
}

// ---------------------------------------------------------------- IDX ----

namespace {

std::uint32_t read_be32(const std::string& bytes, std::size_t offset) {
  return (std::uint32_t(std::uint8_t(bytes[offset])) << 24) |
         (std::uint32_t(std::uint8_t(bytes[offset + 1])) << 16) |
         (std::uint32_t(std::uint8_t(bytes[offset + 2])) << 8) |
         std::uint32_t(std::uint8_t(bytes[offset + 3]));
}

constexpr std::uint32_t kImageMagic = 2051;
constexpr std::uint32_t kLabelMagic = 2049;

}  // namespace

std::vector<LabeledImage> load_mnist(const fs::path& images_path,
                                     const fs::path& labels_path,
                                     std::size_t limit) {
  const std::string images = read_file(images_path);
  const std::string labels = read_file(labels_path);

  const std::string img_name = images_path.filename().string();
  const std::string lbl_name = labels_path.filename().string();
  if (images.size() < 4 || labels.size() < 4)
    fail(ErrorKind::Data, (images.size() < 4 ? img_name : lbl_name) + ": truncated header");
  const std::uint32_t img_magic = read_be32(images, 0);
  if (img_magic != kImageMagic)
    fail(ErrorKind::Data, img_name + ": wrong magic " +
                              std::to_string(img_magic) + " (expected 2051)");
  const std::uint32_t lbl_magic = read_be32(labels, 0);
  if (lbl_magic != kLabelMagic)
    fail(ErrorKind::Data, lbl_name + ": wrong magic " +
                              std::to_string(lbl_magic) + " (expected 2049)");
  if (images.size() < 16)
    fail(ErrorKind::Data, img_name + ": truncated header");
  if (labels.size() < 8)
    fail(ErrorKind::Data, lbl_name + ": truncated header");

  const std::uint32_t count = read_be32(images, 4);
  const std::uint32_t rows = read_be32(images, 8);
  const std::uint32_t cols = read_be32(images, 12);
  if (rows != kImageSide || cols != kImageSide)
    fail(ErrorKind::Data, img_name + ": image dims " + std::to_string(rows) +
                              "x" + std::to_string(cols) + " are not 28x28");
  const std::uint32_t label_count = read_be32(labels, 4);
  if (label_count != count)
    fail(ErrorKind::Data, "count mismatch: " + std::to_string(count) +
                              " images vs " + std::to_string(label_count) +
                              " labels");

  const std::size_t pixels = std::size_t(kImageSide) * kImageSide;
  if (images.size() < 16 + std::size_t(count) * pixels)
    fail(ErrorKind::Data, img_name + ": truncated payload");
  if (labels.size() < 8 + std::size_t(count))
    fail(ErrorKind::Data, lbl_name + ": truncated payload");

  std::size_t n = count;
  if (limit > 0) n = std::min(n, limit);
  std::vector<LabeledImage> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    const int label = std::uint8_t(labels[8 + i]);
    if (label > 9)
      fail(ErrorKind::Data, lbl_name + ": label " + std::to_string(label) +
                                " out of range at index " + std::to_string(i));
    out[i].label = label;
    std::memcpy(out[i].pixels.data(), images.data() + 16 + i * pixels, pixels);
  }
  return out;
}

// -------------------------------------------------------------- input ----

ComplexField prepare_input(const LabeledImage& img, const OpticalConfig& cfg,
                           const Illumination& illum) {
  const int n = cfg.grid_n;
  const double pitch = cfg.pixel_pitch;
  const double waist = illum.waist > 0 ? illum.waist : n * pitch / 2.0;
  const double scale = double(kImageSide) / n;
  const double center = (n - 1) / 2.0;

  auto pixel = [&](int r, int c) {
    return img.pixels[std::size_t(r) * kImageSide + c] / 255.0;
  };
  auto sample = [&](int r, int c) {
    const double y = std::clamp((r + 0.5) * scale - 0.5, 0.0, kImageSide - 1.0);
    const double x = std::clamp((c + 0.5) * scale - 0.5, 0.0, kImageSide - 1.0);
    if (illum.resample == Resample::Nearest)
      return pixel(int(std::lround(y)), int(std::lround(x)));
    const int y0 = int(std::floor(y));
    const int x0 = int(std::floor(x));
    const int y1 = std::min(y0 + 1, kImageSide - 1);
    const int x1 = std::min(x0 + 1, kImageSide - 1);
    const double ty = y - y0;
    const double tx = x - x0;
    const double top = pixel(y0, x0) * (1 - tx) + pixel(y0, x1) * tx;
    const double bottom = pixel(y1, x0) * (1 - tx) + pixel(y1, x1) * tx;
    return top * (1 - ty) + bottom * ty;
  };

  ComplexField field(n, pitch);
  double total = 0.0;
  for (int r = 0; r < n; ++r) {
    for (int c = 0; c < n; ++c) {
      double amp = sample(r, c);
      if (illum.beam == BeamKind::Gaussian) {
        const double dy = (r - center) * pitch;
        const double dx = (c - center) * pitch;
        amp *= std::exp(-(dx * dx + dy * dy) / (waist * waist));
      }
      field.at(r, c) = amp;
      total += amp * amp;
    }
  }

  if (total <= 0.0) {
    const double v = 1.0 / n;
    for (cplx& u : field.values()) u = v;
    return field;
  }
  const double norm = std::sqrt(total);
  for (cplx& u : field.values()) u /= norm;
  return field;
}

// --------------------------------------------------------- checkpoint ----

namespace {

json config_to_json(const OpticalConfig& cfg) {
  return json{{"frequency", cfg.frequency},
              {"grid_n", cfg.grid_n},
              {"pixel_pitch", cfg.pixel_pitch},
              {"layer_count", cfg.layer_count},
              {"spacings", cfg.spacings},
              {"material_index", cfg.material_index},
              {"pad_factor", cfg.pad_factor}};
}

OpticalConfig config_from_json(const json& j) {
  OpticalConfig cfg;
  cfg.frequency = j.at("frequency").get<double>();
  cfg.grid_n = j.at("grid_n").get<int>();
  cfg.pixel_pitch = j.at("pixel_pitch").get<double>();
  cfg.layer_count = j.at("layer_count").get<int>();
  cfg.spacings = j.at("spacings").get<std::vector<double>>();
  cfg.material_index = j.at("material_index").get<double>();
  cfg.pad_factor = j.at("pad_factor").get<int>();
  return cfg;
}

void put_le64(std::string& out, double v) {
  auto bits = std::bit_cast<std::uint64_t>(v);
  for (int b = 0; b < 8; ++b) out.push_back(char((bits >> (8 * b)) & 0xff));
}

double get_le64(const char* p) {
  std::uint64_t bits = 0;
  for (int b = 0; b < 8; ++b)
    bits |= std::uint64_t(std::uint8_t(p[b])) << (8 * b);
  return std::bit_cast<double>(bits);
}

}  // namespace

std::string serialize_checkpoint(const Model& model,
                                 const TrainingMetadata& metadata) {
  const OpticalConfig& cfg = model.config();
  json layout = json::array();
  for (const Region& r : model.layout().regions)
    layout.push_back({r.row, r.col, r.height, r.width});

  const std::size_t payload =
      std::size_t(cfg.layer_count) * cfg.grid_n * cfg.grid_n * 8;
  json header{
      {"version", kCheckpointVersion},
      {"config", config_to_json(cfg)},
      {"layout", layout},
      {"readout",
       {{"kind", model.readout().kind == ReadoutKind::Softmax ? "softmax"
                                                              : "intensity"},
        {"temperature", model.readout().temperature}}},
      {"metadata",
       {{"seed", metadata.seed},
        {"noise_std", metadata.noise_std},
        {"epochs_completed", metadata.epochs_completed},
        {"learning_rate", metadata.learning_rate}}},
      {"payload_bytes", payload}};

  std::string out = header.dump();
  out.push_back('\n');
  out.reserve(out.size() + payload);
  for (const PhaseMask& mask : model.masks())
    for (double v : mask.values()) put_le64(out, v);
  return out;
}

Checkpoint parse_checkpoint(const std::string& bytes) {
  const std::size_t eol = bytes.find('\n');
  if (eol == std::string::npos)
    fail(ErrorKind::Data, "malformed checkpoint header: no header line");

  json header;
  try {
    header = json::parse(bytes.substr(0, eol));
  } catch (const json::exception& e) {
    fail(ErrorKind::Data, std::string("malformed checkpoint header: ") + e.what());
  }

  try {
    const int version = header.at("version").get<int>();
    if (version != kCheckpointVersion)
      fail(ErrorKind::Data, "unsupported checkpoint version " +
                                std::to_string(version) + " (expected " +
                                std::to_string(kCheckpointVersion) + ")");

    OpticalConfig cfg = config_from_json(header.at("config"));
    try {
      cfg.validate();
    } catch (const Error& e) {
      fail(ErrorKind::Data, std::string("invalid checkpoint config: ") + e.what());
    }

    DetectorLayout layout;
    const json& regions = header.at("layout");
    if (!regions.is_array() || regions.size() != kClassCount)
      fail(ErrorKind::Data, "checkpoint layout must list 10 regions");
    for (int c = 0; c < kClassCount; ++c) {
      const auto v = regions[c].get<std::vector<int>>();
      if (v.size() != 4)
        fail(ErrorKind::Data, "checkpoint layout region needs 4 integers");
      layout.regions[c] = Region{v[0], v[1], v[2], v[3]};
    }

    ReadoutConfig readout;
    if (header.contains("readout")) {
      const json& r = header.at("readout");
      readout.kind = r.at("kind").get<std::string>() == "softmax"
                         ? ReadoutKind::Softmax
                         : ReadoutKind::Intensity;
      readout.temperature = r.at("temperature").get<double>();
    }

    TrainingMetadata meta;
    const json& m = header.at("metadata");
    meta.seed = m.at("seed").get<std::uint64_t>();
    meta.noise_std = m.at("noise_std").get<double>();
    meta.epochs_completed = m.at("epochs_completed").get<int>();
    meta.learning_rate = m.value("learning_rate", 0.0);

    const std::size_t per_mask = std::size_t(cfg.grid_n) * cfg.grid_n;
    const std::size_t expected = std::size_t(cfg.layer_count) * per_mask * 8;
    const std::size_t declared = header.at("payload_bytes").get<std::size_t>();
    const std::size_t actual = bytes.size() - eol - 1;
    if (declared != expected)
      fail(ErrorKind::Data, "payload length mismatch: header declares " +
                                std::to_string(declared) +
                                " bytes, config implies " +
                                std::to_string(expected));
    if (actual != expected)
      fail(ErrorKind::Data, "payload length mismatch: expected " +
                                std::to_string(expected) + " bytes, found " +
                                std::to_string(actual));

    std::vector<PhaseMask> masks;
    const char* p = bytes.data() + eol + 1;
    for (int l = 0; l < cfg.layer_count; ++l) {
      std::vector<double> phases(per_mask);
      for (double& v : phases) {
        v = get_le64(p);
        p += 8;
      }
      masks.emplace_back(cfg.grid_n, std::move(phases));
    }

    try {
      return Checkpoint{Model(std::move(cfg), std::move(masks), layout, readout),
                        meta};
    } catch (const Error& e) {
      fail(ErrorKind::Data, std::string("invalid checkpoint: ") + e.what());
    }
  } catch (const json::exception& e) {
    fail(ErrorKind::Data, std::string("malformed checkpoint header: ") + e.what());
  }
}

void save_checkpoint(const Model& model, const TrainingMetadata& metadata,
                     const fs::path& path) {
  write_file(path, serialize_checkpoint(model, metadata));
}

Checkpoint load_checkpoint(const fs::path& path) {
  return parse_checkpoint(read_file(path));
}

}  // namespace d2nn
