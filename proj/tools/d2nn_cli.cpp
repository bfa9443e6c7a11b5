// d2nn command-line harness. Talks to the library only through d2nn.h.
//
//   d2nn train      train a network (plain or with weight-noise injection)
//   d2nn evaluate   clean accuracy of a checkpoint
//   d2nn sweep      robustness sweep under one hardware-error model
//   d2nn gradcheck  analytic vs finite-difference gradients
//   d2nn oracle     angular spectrum vs direct Rayleigh-Sommerfeld
//   d2nn export     printed height maps and height histogram
//   d2nn plot       SVG line chart from a sweep report
//
// Exit codes: 0 ok, 2 usage, 3 data, 4 tolerance.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "d2nn/d2nn.h"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitData = 3;
constexpr int kExitTolerance = 4;

struct Failure {
  int code;
};

void check(d2nn_status status) {
  if (status == D2NN_OK) return;
  std::fprintf(stderr, "error: %s\n", d2nn_last_error());
  throw Failure{status == D2NN_ERR_INVALID_ARGUMENT ? kExitUsage : kExitData};
}

[[noreturn]] void usage_error(const std::string& what) {
  std::fprintf(stderr, "error: %s\n", what.c_str());
  throw Failure{kExitUsage};
}

struct ModelDeleter {
  void operator()(d2nn_model* m) const { d2nn_model_free(m); }
};
struct DatasetDeleter {
  void operator()(d2nn_dataset* d) const { d2nn_dataset_free(d); }
};
using ModelPtr = std::unique_ptr<d2nn_model, ModelDeleter>;
using DatasetPtr = std::unique_ptr<d2nn_dataset, DatasetDeleter>;

ModelPtr load_model(const std::string& path) {
  d2nn_model* m = nullptr;
  check(d2nn_model_load(path.c_str(), &m));
  return ModelPtr(m);
}

DatasetPtr load_dataset(const std::string& images, const std::string& labels,
                        std::size_t limit) {
  d2nn_dataset* d = nullptr;
  check(d2nn_dataset_load_mnist(images.c_str(), labels.c_str(), limit, &d));
  return DatasetPtr(d);
}

std::string default_data(const char* file) {
  const char* dir = std::getenv("D2NN_MNIST_DIR");
  return (std::filesystem::path(dir ? dir : "data/mnist") / file).string();
}

struct DataFlags {
  std::string train_images = default_data("train-images-idx3-ubyte");
  std::string train_labels = default_data("train-labels-idx1-ubyte");
  std::string test_images = default_data("t10k-images-idx3-ubyte");
  std::string test_labels = default_data("t10k-labels-idx1-ubyte");
  std::size_t train_limit = 0;
  std::size_t test_limit = 0;
};

struct IlluminationFlags {
  bool uniform = false;
  bool nearest = false;
  double waist = 0.0;

  d2nn_illumination get() const {
    d2nn_illumination illum;
    d2nn_illumination_default(&illum);
    illum.beam = uniform ? D2NN_BEAM_UNIFORM : D2NN_BEAM_GAUSSIAN;
    illum.resample = nearest ? D2NN_RESAMPLE_NEAREST : D2NN_RESAMPLE_BILINEAR;
    illum.waist_m = waist;
    return illum;
  }
};

void add_test_flags(CLI::App* cmd, DataFlags& data) {
  cmd->add_option("--test-idx", data.test_images, "Test images (IDX)");
  cmd->add_option("--test-label-idx", data.test_labels, "Test labels (IDX)");
  cmd->add_option("--test-limit", data.test_limit, "Use only the first N test samples (0 = all)");
}

void add_illumination_flags(CLI::App* cmd, IlluminationFlags& illum) {
  cmd->add_flag("--uniform-beam", illum.uniform, "Uniform instead of Gaussian illumination");
  cmd->add_flag("--nearest", illum.nearest, "Nearest-neighbour digit resampling");
  cmd->add_option("--waist", illum.waist, "Gaussian waist in m (0 = half aperture)");
}

// ---- train ---------------------------------------------------------------

struct TrainArgs {
  d2nn_optical_config optics{};
  d2nn_train_config train{};
  DataFlags data;
  IlluminationFlags illum;
  std::string out = "run";
  bool quiet = false;
};

void epoch_printer(const d2nn_epoch_record* r, void* user) {
  if (*static_cast<bool*>(user)) return;
  std::fprintf(stderr, "epoch %d  steps %d  loss %.5f  train_acc %.4f", r->epoch,
               r->steps, r->train_loss, r->train_acc);
  if (r->has_test_acc) std::fprintf(stderr, "  test_acc %.4f", r->test_acc);
  std::fprintf(stderr, "  (%.1fs)\n", r->wall_seconds);
}

int run_train(TrainArgs& a) {
  a.train.illumination = a.illum.get();
  check(d2nn_optical_config_validate(&a.optics));
  check(d2nn_train_config_validate(&a.train));
  d2nn_model* raw = nullptr;
  check(d2nn_model_create(&a.optics, a.train.seed, &raw));
  ModelPtr model(raw);

  DatasetPtr train = load_dataset(a.data.train_images, a.data.train_labels, a.data.train_limit);
  DatasetPtr test = load_dataset(a.data.test_images, a.data.test_labels, a.data.test_limit);

  std::error_code ec;
  std::filesystem::create_directories(a.out, ec);
  if (ec) {
    std::fprintf(stderr, "error: cannot create %s: %s\n", a.out.c_str(), ec.message().c_str());
    throw Failure{kExitData};
  }
  const auto dir = std::filesystem::path(a.out);
  const std::string history = (dir / "history.csv").string();
  const std::string ckpt = (dir / "model.d2nn").string();
  check(d2nn_train(model.get(), train.get(), test.get(), &a.train, history.c_str(),
                   epoch_printer, &a.quiet));
  check(d2nn_model_save(model.get(), ckpt.c_str()));
  std::printf("%s\n%s\n", ckpt.c_str(), history.c_str());
  return kExitOk;
}

// ---- evaluate ------------------------------------------------------------

struct EvalArgs {
  std::string model;
  DataFlags data;
  IlluminationFlags illum;
  int workers = 1;
};

int run_evaluate(EvalArgs& a) {
  ModelPtr model = load_model(a.model);
  DatasetPtr test = load_dataset(a.data.test_images, a.data.test_labels, a.data.test_limit);
  const d2nn_illumination illum = a.illum.get();
  d2nn_eval_result r{};
  check(d2nn_evaluate(model.get(), test.get(), &illum, a.workers, &r));
  std::printf("accuracy,%.17g\nmean_loss,%.17g\n", r.accuracy, r.mean_loss);
  return kExitOk;
}

// ---- sweep ---------------------------------------------------------------

struct SweepArgs {
  std::string kind;
  std::vector<std::string> models;
  std::vector<std::string> names;
  std::vector<std::string> values;
  int repeats = 12;
  std::uint64_t seed = 0;
  int workers = 1;
  DataFlags data;
  IlluminationFlags illum;
  std::string out = "sweep.csv";
  std::string chart;
  bool quiet = false;
};

void sweep_printer(const char* model, const char* param, int32_t repeat,
                   double accuracy, void* user) {
  if (*static_cast<bool*>(user)) return;
  std::fprintf(stderr, "%s  %s  #%d  acc %.4f\n", model, param, repeat, accuracy);
}

int run_sweep(SweepArgs& a) {
  if (a.models.empty()) usage_error("sweep needs at least one --model");
  if (!a.names.empty() && a.names.size() != a.models.size())
    usage_error("--name must be given once per --model");
  if (a.values.empty()) usage_error("sweep needs --values");

  std::vector<const char*> value_ptrs;
  for (const auto& v : a.values) value_ptrs.push_back(v.c_str());
  d2nn_sweep_options opts{};
  opts.kind = a.kind.c_str();
  opts.values = value_ptrs.data();
  opts.value_count = value_ptrs.size();
  opts.repeats = a.repeats;
  opts.seed = a.seed;
  opts.workers = a.workers;
  opts.illumination = a.illum.get();
  check(d2nn_sweep_options_validate(&opts));

  std::vector<ModelPtr> owned;
  std::vector<const d2nn_model*> models;
  std::vector<std::string> names;
  for (std::size_t i = 0; i < a.models.size(); ++i) {
    owned.push_back(load_model(a.models[i]));
    models.push_back(owned.back().get());
    names.push_back(a.names.empty()
                        ? std::filesystem::path(a.models[i]).parent_path().filename().string()
                        : a.names[i]);
    if (names.back().empty()) names.back() = "model" + std::to_string(i);
  }
  std::vector<const char*> name_ptrs;
  for (const auto& n : names) name_ptrs.push_back(n.c_str());

  DatasetPtr test = load_dataset(a.data.test_images, a.data.test_labels, a.data.test_limit);
  check(d2nn_sweep_run(models.data(), name_ptrs.data(), models.size(), test.get(),
                       &opts, a.out.c_str(), sweep_printer, &a.quiet));
  if (!a.chart.empty()) check(d2nn_plot_report(a.out.c_str(), a.chart.c_str()));
  std::printf("%s\n", a.out.c_str());
  return kExitOk;
}

// ---- verification --------------------------------------------------------

struct GradcheckArgs {
  d2nn_gradcheck_options opts{};
  std::string images, labels;
  std::size_t index = 0;
};

int run_gradcheck(GradcheckArgs& a) {
  if (!(a.opts.step > 0)) usage_error("--step must be > 0");
  std::vector<uint8_t> pixels;
  if (!a.images.empty()) {
    if (a.labels.empty()) usage_error("--images needs --labels");
    DatasetPtr d = load_dataset(a.images, a.labels, a.index + 1);
    pixels.resize(D2NN_IMAGE_PIXELS);
    check(d2nn_dataset_pixels(d.get(), a.index, pixels.data()));
    a.opts.pixels = pixels.data();
  }
  double err = 0.0;
  check(d2nn_gradcheck(&a.opts, &err));
  const bool pass = err <= D2NN_GRADCHECK_TOLERANCE;
  std::printf("gradcheck grid=%d layers=%d entries=%d step=%g max_rel_error=%.3e tol=%.0e %s\n",
              a.opts.grid_n, a.opts.layers, a.opts.entries, a.opts.step, err,
              D2NN_GRADCHECK_TOLERANCE, pass ? "PASS" : "FAIL");
  if (!pass) {
    std::fprintf(stderr,
                 "gradcheck failed: analytic and finite-difference gradients "
                 "differ by %.3e (tolerance %.0e); check --step\n",
                 err, D2NN_GRADCHECK_TOLERANCE);
    return kExitTolerance;
  }
  return kExitOk;
}

int run_oracle(d2nn_oracle_options& opts) {
  double rms = 0.0;
  check(d2nn_oracle_check(&opts, &rms));
  const bool pass = rms <= D2NN_ORACLE_TOLERANCE;
  std::printf("oracle grid=%d pitch=%g distance=%g freq=%g relative_rms=%.3e tol=%.2f %s\n",
              opts.grid_n, opts.pixel_pitch_m, opts.distance_m, opts.frequency_hz, rms,
              D2NN_ORACLE_TOLERANCE, pass ? "PASS" : "FAIL");
  if (!pass) {
    std::fprintf(stderr, "oracle failed: relative RMS %.3e exceeds %.2f\n", rms,
                 D2NN_ORACLE_TOLERANCE);
    return kExitTolerance;
  }
  return kExitOk;
}

// ---- export / plot -------------------------------------------------------

struct ExportArgs {
  std::string model;
  std::string out = "heights";
  double zquant_mm = 0.0;
};

int run_export(ExportArgs& a) {
  if (a.zquant_mm < 0) usage_error("--zquant must be > 0");
  ModelPtr model = load_model(a.model);
  if (a.zquant_mm > 0) {
    d2nn_model* q = nullptr;
    check(d2nn_model_quantize_height(model.get(), a.zquant_mm * 1e-3, &q));
    model.reset(q);
  }
  check(d2nn_export_heights(model.get(), a.out.c_str()));
  std::printf("%s\n", a.out.c_str());
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Diffractive optical network simulator with weight-noise-injection training"};
  app.require_subcommand(1);
  app.option_defaults()->always_capture_default();

  TrainArgs train;
  d2nn_optical_config_default(&train.optics);
  d2nn_train_config_default(&train.train);
  auto* cmd_train = app.add_subcommand("train", "Train masks and write model.d2nn + history.csv");
  cmd_train->add_option("--grid", train.optics.grid_n, "Samples per side");
  cmd_train->add_option("--layers", train.optics.layer_count, "Diffraction layers");
  cmd_train->add_option("--pitch", train.optics.pixel_pitch_m, "Pixel pitch (m)");
  cmd_train->add_option("--spacing", train.optics.spacing_m, "Plane spacing (m)");
  cmd_train->add_option("--freq", train.optics.frequency_hz, "Source frequency (Hz)");
  cmd_train->add_option("--material-index", train.optics.material_index, "Refractive index");
  cmd_train->add_option("--pad", train.optics.pad_factor, "Zero-padding factor (1 or 2)");
  cmd_train->add_option("--epochs", train.train.epochs, "Epochs");
  cmd_train->add_option("--batch", train.train.batch_size, "Batch size");
  cmd_train->add_option("--lr", train.train.learning_rate, "Learning rate");
  cmd_train->add_option("--noise-std", train.train.noise_std, "Injected phase noise std (rad); 0 = plain");
  cmd_train->add_option("--seed", train.train.seed, "Master seed");
  cmd_train->add_flag("--per-sample-noise", train.train.per_sample_noise, "Fresh noise per sample");
  cmd_train->add_option("--workers", train.train.workers, "Worker threads");
  cmd_train->add_option("--eval-every", train.train.eval_every, "Epochs between test evaluations");
  cmd_train->add_option("--train-idx", train.data.train_images, "Training images (IDX)");
  cmd_train->add_option("--label-idx", train.data.train_labels, "Training labels (IDX)");
  cmd_train->add_option("--train-limit", train.data.train_limit, "Use only the first N training samples");
  add_test_flags(cmd_train, train.data);
  add_illumination_flags(cmd_train, train.illum);
  cmd_train->add_option("--out", train.out, "Output directory");
  cmd_train->add_flag("--quiet", train.quiet, "No per-epoch progress");
  cmd_train->callback([&] { throw Failure{run_train(train)}; });

  EvalArgs eval;
  auto* cmd_eval = app.add_subcommand("evaluate", "Clean test accuracy of a checkpoint");
  cmd_eval->add_option("--model", eval.model, "Checkpoint")->required();
  cmd_eval->add_option("--workers", eval.workers, "Worker threads");
  add_test_flags(cmd_eval, eval.data);
  add_illumination_flags(cmd_eval, eval.illum);
  cmd_eval->callback([&] { throw Failure{run_evaluate(eval)}; });

  SweepArgs sweep;
  auto* cmd_sweep = app.add_subcommand("sweep", "Accuracy under a hardware-error model");
  cmd_sweep->add_option("kind", sweep.kind, "phase-noise | zquant | frequency | spacing")->required();
  cmd_sweep->add_option("--model", sweep.models, "Checkpoint (repeatable)");
  cmd_sweep->add_option("--name", sweep.names, "Series name per --model");
  cmd_sweep->add_option("--values", sweep.values,
                        "Sweep values: rad | mm | GHz | m, or random:lo:hi for spacing")
      ->delimiter(',');
  cmd_sweep->add_option("--repeats", sweep.repeats, "Repeats per value for random perturbations");
  cmd_sweep->add_option("--seed", sweep.seed, "Master seed");
  cmd_sweep->add_option("--workers", sweep.workers, "Worker threads");
  add_test_flags(cmd_sweep, sweep.data);
  add_illumination_flags(cmd_sweep, sweep.illum);
  cmd_sweep->add_option("--out", sweep.out, "Report CSV");
  cmd_sweep->add_option("--chart", sweep.chart, "Also write an SVG chart");
  cmd_sweep->add_flag("--quiet", sweep.quiet, "No per-cell progress");
  cmd_sweep->callback([&] { throw Failure{run_sweep(sweep)}; });

  GradcheckArgs gc;
  d2nn_gradcheck_options_default(&gc.opts);
  auto* cmd_gc = app.add_subcommand("gradcheck", "Analytic gradients vs central differences");
  cmd_gc->add_option("--grid", gc.opts.grid_n, "Samples per side");
  cmd_gc->add_option("--layers", gc.opts.layers, "Layers");
  cmd_gc->add_option("--entries", gc.opts.entries, "Random mask entries to check");
  cmd_gc->add_option("--step", gc.opts.step, "Finite-difference step (rad)");
  cmd_gc->add_option("--seed", gc.opts.seed, "Seed");
  cmd_gc->add_option("--images", gc.images, "Optional IDX images for the input digit");
  cmd_gc->add_option("--labels", gc.labels, "IDX labels matching --images");
  cmd_gc->add_option("--index", gc.index, "Sample index in --images");
  cmd_gc->callback([&] { throw Failure{run_gradcheck(gc)}; });

  d2nn_oracle_options oracle;
  d2nn_oracle_options_default(&oracle);
  auto* cmd_oracle = app.add_subcommand("oracle", "Angular spectrum vs direct Rayleigh-Sommerfeld");
  cmd_oracle->add_option("--grid", oracle.grid_n, "Samples per side (<= 128)");
  cmd_oracle->add_option("--pitch", oracle.pixel_pitch_m, "Pixel pitch (m)");
  cmd_oracle->add_option("--freq", oracle.frequency_hz, "Frequency (Hz)");
  cmd_oracle->add_option("--distance", oracle.distance_m, "Propagation distance (m)");
  cmd_oracle->add_option("--waist", oracle.waist_m, "Gaussian beam waist (m)");
  cmd_oracle->add_option("--pad", oracle.pad_factor, "Zero-padding factor");
  cmd_oracle->callback([&] { throw Failure{run_oracle(oracle)}; });

  ExportArgs ex;
  auto* cmd_export = app.add_subcommand("export", "Height-map CSVs and height histogram");
  cmd_export->add_option("--model", ex.model, "Checkpoint")->required();
  cmd_export->add_option("--out", ex.out, "Output directory");
  cmd_export->add_option("--zquant", ex.zquant_mm, "Quantize heights to this step (mm) first");
  cmd_export->callback([&] { throw Failure{run_export(ex)}; });

  std::string plot_in, plot_out = "chart.svg";
  auto* cmd_plot = app.add_subcommand("plot", "Render a sweep report as an SVG line chart");
  cmd_plot->add_option("report", plot_in, "Sweep report CSV")->required();
  cmd_plot->add_option("--out", plot_out, "SVG path");
  cmd_plot->callback([&] {
    check(d2nn_plot_report(plot_in.c_str(), plot_out.c_str()));
    std::printf("%s\n", plot_out.c_str());
    throw Failure{kExitOk};
  });

  try {
    app.parse(argc, argv);
  } catch (const Failure& f) {
    return f.code;
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitUsage;
  }
  return kExitOk;
}
