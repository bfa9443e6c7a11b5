#include "d2nn/d2nn.h"

#include <algorithm>
#include <cstring>
#include <new>
#include <string>

#include "d2nn/dataio.hpp"
#include "d2nn/error.hpp"
#include "d2nn/error_models.hpp"
#include "d2nn/experiments.hpp"
#include "d2nn/trainer.hpp"
#include "d2nn/verify.hpp"

struct d2nn_model {
  d2nn::Model model;
  d2nn::TrainingMetadata meta;
};

struct d2nn_dataset {
  std::vector<d2nn::LabeledImage> images;
};

namespace {

thread_local std::string g_last_error;

d2nn_status set_error(d2nn_status status, const std::string& what) {
  g_last_error = what;
  return status;
}

// Runs fn, mapping exceptions to status codes.
template <class Fn>
d2nn_status guarded(Fn&& fn) {
  try {
    fn();
    return D2NN_OK;
  } catch (const d2nn::Error& e) {
    switch (e.kind()) {
      case d2nn::ErrorKind::InvalidArgument:
        return set_error(D2NN_ERR_INVALID_ARGUMENT, e.what());
      case d2nn::ErrorKind::Data:
        return set_error(D2NN_ERR_DATA, e.what());
      case d2nn::ErrorKind::Io:
        return set_error(D2NN_ERR_IO, e.what());
      case d2nn::ErrorKind::Numeric:
        return set_error(D2NN_ERR_NUMERIC, e.what());
    }
    return set_error(D2NN_ERR_INTERNAL, e.what());
  } catch (const std::bad_alloc&) {
    return set_error(D2NN_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return set_error(D2NN_ERR_INTERNAL, e.what());
  }
}

void need(const void* p, const char* name) {
  if (!p) d2nn::fail(d2nn::ErrorKind::InvalidArgument, std::string(name) + " is NULL");
}

d2nn::Illumination to_illumination(const d2nn_illumination* in) {
  d2nn::Illumination out;
  if (!in) return out;
  if (in->beam != D2NN_BEAM_GAUSSIAN && in->beam != D2NN_BEAM_UNIFORM)
    d2nn::fail(d2nn::ErrorKind::InvalidArgument, "unknown beam kind");
  if (in->resample != D2NN_RESAMPLE_BILINEAR && in->resample != D2NN_RESAMPLE_NEAREST)
    d2nn::fail(d2nn::ErrorKind::InvalidArgument, "unknown resample mode");
  out.beam = in->beam == D2NN_BEAM_UNIFORM ? d2nn::BeamKind::Uniform
                                           : d2nn::BeamKind::Gaussian;
  out.waist = in->waist_m;
  out.resample = in->resample == D2NN_RESAMPLE_NEAREST ? d2nn::Resample::Nearest
                                                       : d2nn::Resample::Bilinear;
  return out;
}

d2nn::OpticalConfig to_config(const d2nn_optical_config& c) {
  d2nn::OpticalConfig cfg = d2nn::OpticalConfig::uniform(
      c.grid_n, c.layer_count, c.spacing_m, c.frequency_hz, c.pixel_pitch_m);
  cfg.material_index = c.material_index;
  cfg.pad_factor = c.pad_factor;
  cfg.validate();
  return cfg;
}

d2nn_model* wrap(d2nn::Model model, const d2nn::TrainingMetadata& meta) {
  return new d2nn_model{std::move(model), meta};
}

}  // namespace

namespace {

d2nn::TrainConfig to_train_config(const d2nn_train_config* cfg) {
  need(cfg, "cfg");
  d2nn::TrainConfig tc;
  tc.learning_rate = cfg->learning_rate;
  tc.epochs = cfg->epochs;
  tc.batch_size = cfg->batch_size;
  tc.noise_std = cfg->noise_std;
  tc.seed = cfg->seed;
  tc.shuffle = cfg->shuffle != 0;
  tc.eval_every = cfg->eval_every;
  tc.per_sample_noise = cfg->per_sample_noise != 0;
  tc.workers = cfg->workers;
  tc.illumination = to_illumination(&cfg->illumination);
  tc.validate();
  return tc;
}

d2nn::SweepSpec to_sweep_spec(const d2nn_sweep_options* opts) {
  need(opts, "opts");
  need(opts->kind, "opts->kind");
  d2nn::SweepSpec spec;
  spec.kind = d2nn::parse_sweep_kind(opts->kind);
  d2nn::require(opts->value_count > 0 && opts->values, "sweep needs values");
  for (size_t i = 0; i < opts->value_count; ++i) {
    need(opts->values[i], "sweep value");
    spec.points.push_back(d2nn::parse_sweep_point(spec.kind, opts->values[i]));
  }
  d2nn::require(opts->repeats >= 1, "repeats must be >= 1");
  d2nn::require(opts->workers >= 1, "workers must be >= 1");
  spec.repeats = opts->repeats;
  spec.seed = opts->seed;
  spec.workers = opts->workers;
  spec.illumination = to_illumination(&opts->illumination);
  return spec;
}

}  // namespace

extern "C" {

const char* d2nn_last_error(void) { return g_last_error.c_str(); }

const char* d2nn_version(void) { return "1.0.0"; }

void d2nn_optical_config_default(d2nn_optical_config* cfg) {
  if (!cfg) return;
  const d2nn::OpticalConfig d;
  cfg->frequency_hz = d.frequency;
  cfg->grid_n = d.grid_n;
  cfg->pixel_pitch_m = d.pixel_pitch;
  cfg->layer_count = d.layer_count;
  cfg->spacing_m = d.spacings.front();
  cfg->material_index = d.material_index;
  cfg->pad_factor = d.pad_factor;
}

void d2nn_illumination_default(d2nn_illumination* illum) {
  if (!illum) return;
  illum->beam = D2NN_BEAM_GAUSSIAN;
  illum->waist_m = 0.0;
  illum->resample = D2NN_RESAMPLE_BILINEAR;
}

void d2nn_train_config_default(d2nn_train_config* cfg) {
  if (!cfg) return;
  const d2nn::TrainConfig d;
  cfg->learning_rate = d.learning_rate;
  cfg->epochs = d.epochs;
  cfg->batch_size = d.batch_size;
  cfg->noise_std = d.noise_std;
  cfg->seed = d.seed;
  cfg->shuffle = d.shuffle ? 1 : 0;
  cfg->eval_every = d.eval_every;
  cfg->per_sample_noise = d.per_sample_noise ? 1 : 0;
  cfg->workers = d.workers;
  d2nn_illumination_default(&cfg->illumination);
}

void d2nn_gradcheck_options_default(d2nn_gradcheck_options* opts) {
  if (!opts) return;
  const d2nn::GradcheckOptions d;
  opts->grid_n = d.grid_n;
  opts->layers = d.layers;
  opts->entries = d.entries;
  opts->step = d.step;
  opts->seed = d.seed;
  opts->pixels = nullptr;
}

void d2nn_oracle_options_default(d2nn_oracle_options* opts) {
  if (!opts) return;
  const d2nn::OracleOptions d;
  opts->grid_n = d.grid_n;
  opts->pixel_pitch_m = d.pixel_pitch;
  opts->frequency_hz = d.frequency;
  opts->distance_m = d.distance;
  opts->waist_m = d.waist;
  opts->pad_factor = d.pad_factor;
}

// ---- models -------------------------------------------------------------

d2nn_status d2nn_model_create(const d2nn_optical_config* cfg, uint64_t seed,
                              d2nn_model** out) {
  return guarded([&] {
    need(cfg, "cfg");
    need(out, "out");
    d2nn::TrainingMetadata meta;
    meta.seed = seed;
    *out = wrap(d2nn::init_model(to_config(*cfg), seed), meta);
  });
}

d2nn_status d2nn_model_load(const char* path, d2nn_model** out) {
  return guarded([&] {
    need(path, "path");
    need(out, "out");
    d2nn::Checkpoint ck = d2nn::load_checkpoint(path);
    *out = wrap(std::move(ck.model), ck.metadata);
  });
}

d2nn_status d2nn_model_save(const d2nn_model* model, const char* path) {
  return guarded([&] {
    need(model, "model");
    need(path, "path");
    d2nn::save_checkpoint(model->model, model->meta, path);
  });
}

d2nn_status d2nn_model_clone(const d2nn_model* model, d2nn_model** out) {
  return guarded([&] {
    need(model, "model");
    need(out, "out");
    *out = new d2nn_model(*model);
  });
}

void d2nn_model_free(d2nn_model* model) { delete model; }

d2nn_status d2nn_model_info_get(const d2nn_model* model, d2nn_model_info* info) {
  return guarded([&] {
    need(model, "model");
    need(info, "info");
    const d2nn::OpticalConfig& cfg = model->model.config();
    info->grid_n = cfg.grid_n;
    info->layer_count = cfg.layer_count;
    info->pad_factor = cfg.pad_factor;
    info->frequency_hz = cfg.frequency;
    info->wavelength_m = cfg.wavelength();
    info->pixel_pitch_m = cfg.pixel_pitch;
    info->material_index = cfg.material_index;
    info->seed = model->meta.seed;
    info->noise_std = model->meta.noise_std;
    info->epochs_completed = model->meta.epochs_completed;
    info->learning_rate = model->meta.learning_rate;
  });
}

d2nn_status d2nn_model_get_phases(const d2nn_model* model, int32_t layer,
                                  double* out, size_t count) {
  return guarded([&] {
    need(model, "model");
    need(out, "out");
    const auto& masks = model->model.masks();
    d2nn::require(layer >= 0 && std::size_t(layer) < masks.size(),
                  "layer index out of range");
    d2nn::require(count == masks[layer].size(), "phase buffer size mismatch");
    std::memcpy(out, masks[layer].values().data(), count * sizeof(double));
  });
}

d2nn_status d2nn_model_set_phases(d2nn_model* model, int32_t layer,
                                  const double* phases, size_t count) {
  return guarded([&] {
    need(model, "model");
    need(phases, "phases");
    auto masks = model->model.masks();
    d2nn::require(layer >= 0 && std::size_t(layer) < masks.size(),
                  "layer index out of range");
    d2nn::require(count == masks[layer].size(), "phase buffer size mismatch");
    std::memcpy(masks[layer].values().data(), phases, count * sizeof(double));
    model->model = model->model.with_masks(std::move(masks));
  });
}

d2nn_status d2nn_model_predict(const d2nn_model* model, const uint8_t* pixels,
                               const d2nn_illumination* illum,
                               double* probabilities, int32_t* predicted) {
  return guarded([&] {
    need(model, "model");
    need(pixels, "pixels");
    d2nn::LabeledImage img;
    std::memcpy(img.pixels.data(), pixels, img.pixels.size());
    const d2nn::Prediction p = d2nn::predict(
        model->model,
        d2nn::prepare_input(img, model->model.config(), to_illumination(illum)));
    if (probabilities) std::memcpy(probabilities, p.q.data(), sizeof(p.q));
    if (predicted) *predicted = p.predicted_class;
  });
}

// ---- error models -------------------------------------------------------

d2nn_status d2nn_model_perturb_phase(const d2nn_model* model, double sigma,
                                     uint64_t seed, d2nn_model** out) {
  return guarded([&] {
    need(model, "model");
    need(out, "out");
    *out = wrap(d2nn::perturb_phase_gaussian(model->model, sigma, seed), model->meta);
  });
}

d2nn_status d2nn_model_quantize_height(const d2nn_model* model, double step_m,
                                       d2nn_model** out) {
  return guarded([&] {
    need(model, "model");
    need(out, "out");
    *out = wrap(d2nn::quantize_height(model->model, step_m), model->meta);
  });
}

d2nn_status d2nn_model_set_spacings(const d2nn_model* model,
                                    const double* spacings_m, size_t count,
                                    d2nn_model** out) {
  return guarded([&] {
    need(model, "model");
    need(spacings_m, "spacings_m");
    need(out, "out");
    d2nn::SpacingSpec spec{std::vector<double>(spacings_m, spacings_m + count)};
    *out = wrap(model->model.with_config(
                    d2nn::perturb_spacing(model->model.config(), spec)),
                model->meta);
  });
}

d2nn_status d2nn_model_random_spacings(const d2nn_model* model, double lo_m,
                                       double hi_m, uint64_t seed,
                                       d2nn_model** out) {
  return guarded([&] {
    need(model, "model");
    need(out, "out");
    d2nn::SpacingSpec spec{d2nn::UniformRange{lo_m, hi_m, seed}};
    *out = wrap(model->model.with_config(
                    d2nn::perturb_spacing(model->model.config(), spec)),
                model->meta);
  });
}

d2nn_status d2nn_model_shift_frequency(const d2nn_model* model,
                                       double frequency_hz, d2nn_model** out) {
  return guarded([&] {
    need(model, "model");
    need(out, "out");
    *out = wrap(d2nn::shift_frequency(model->model, frequency_hz), model->meta);
  });
}

// ---- datasets -----------------------------------------------------------

d2nn_status d2nn_dataset_load_mnist(const char* images_path,
                                    const char* labels_path, size_t limit,
                                    d2nn_dataset** out) {
  return guarded([&] {
    need(images_path, "images_path");
    need(labels_path, "labels_path");
    need(out, "out");
    *out = new d2nn_dataset{d2nn::load_mnist(images_path, labels_path, limit)};
  });
}

size_t d2nn_dataset_size(const d2nn_dataset* dataset) {
  return dataset ? dataset->images.size() : 0;
}

int32_t d2nn_dataset_label(const d2nn_dataset* dataset, size_t index) {
  if (!dataset || index >= dataset->images.size()) return -1;
  return dataset->images[index].label;
}

d2nn_status d2nn_dataset_pixels(const d2nn_dataset* dataset, size_t index,
                                uint8_t* out) {
  return guarded([&] {
    need(dataset, "dataset");
    need(out, "out");
    d2nn::require(index < dataset->images.size(), "image index out of range");
    const auto& px = dataset->images[index].pixels;
    std::copy(px.begin(), px.end(), out);
  });
}

void d2nn_dataset_free(d2nn_dataset* dataset) { delete dataset; }

d2nn_status d2nn_optical_config_validate(const d2nn_optical_config* cfg) {
  return guarded([&] {
    need(cfg, "cfg");
    to_config(*cfg).validate();
  });
}

d2nn_status d2nn_train_config_validate(const d2nn_train_config* cfg) {
  return guarded([&] { to_train_config(cfg); });
}

d2nn_status d2nn_sweep_options_validate(const d2nn_sweep_options* opts) {
  return guarded([&] { to_sweep_spec(opts); });
}

// ---- training -----------------------------------------------------------

d2nn_status d2nn_train(d2nn_model* model, const d2nn_dataset* train,
                       const d2nn_dataset* test, const d2nn_train_config* cfg,
                       const char* history_csv_path, d2nn_epoch_callback callback,
                       void* user) {
  return guarded([&] {
    need(model, "model");
    need(train, "train");
    const d2nn::TrainConfig tc = to_train_config(cfg);

    std::span<const d2nn::LabeledImage> test_span;
    if (test) test_span = test->images;
    auto on_epoch = [&](const d2nn::EpochRecord& r) {
      if (!callback) return;
      d2nn_epoch_record rec{r.epoch,         r.steps,        r.train_loss,
                            r.train_acc,     r.test_acc ? 1 : 0,
                            r.test_acc.value_or(0.0), r.wall_seconds};
      callback(&rec, user);
    };
    d2nn::TrainResult result =
        d2nn::train(model->model, train->images, test_span, tc, on_epoch);
    model->model = std::move(result.model);
    model->meta.seed = tc.seed;
    model->meta.noise_std = tc.noise_std;
    model->meta.learning_rate = tc.learning_rate;
    model->meta.epochs_completed += tc.epochs;
    if (history_csv_path)
      d2nn::write_file(history_csv_path, d2nn::history_to_csv(result.history));
  });
}

d2nn_status d2nn_evaluate(const d2nn_model* model, const d2nn_dataset* dataset,
                          const d2nn_illumination* illum, int32_t workers,
                          d2nn_eval_result* out) {
  return guarded([&] {
    need(model, "model");
    need(dataset, "dataset");
    need(out, "out");
    const d2nn::EvalResult r = d2nn::evaluate(model->model, dataset->images,
                                              to_illumination(illum), workers);
    out->accuracy = r.accuracy;
    out->mean_loss = r.mean_loss;
    for (int t = 0; t < D2NN_CLASS_COUNT; ++t)
      for (int p = 0; p < D2NN_CLASS_COUNT; ++p)
        out->confusion[t * D2NN_CLASS_COUNT + p] = r.confusion[t][p];
  });
}

// ---- verification -------------------------------------------------------

d2nn_status d2nn_gradcheck(const d2nn_gradcheck_options* opts,
                           double* max_relative_error) {
  return guarded([&] {
    need(opts, "opts");
    need(max_relative_error, "max_relative_error");
    d2nn::GradcheckOptions o;
    o.grid_n = opts->grid_n;
    o.layers = opts->layers;
    o.entries = opts->entries;
    o.step = opts->step;
    o.seed = opts->seed;
    if (opts->pixels) o.pixels.assign(opts->pixels, opts->pixels + D2NN_IMAGE_PIXELS);
    *max_relative_error = d2nn::run_gradcheck(o);
  });
}

d2nn_status d2nn_oracle_check(const d2nn_oracle_options* opts,
                              double* relative_rms) {
  return guarded([&] {
    need(opts, "opts");
    need(relative_rms, "relative_rms");
    d2nn::OracleOptions o;
    o.grid_n = opts->grid_n;
    o.pixel_pitch = opts->pixel_pitch_m;
    o.frequency = opts->frequency_hz;
    o.distance = opts->distance_m;
    o.waist = opts->waist_m;
    o.pad_factor = opts->pad_factor;
    *relative_rms = d2nn::run_oracle_check(o);
  });
}

// ---- experiments --------------------------------------------------------

d2nn_status d2nn_sweep_run(const d2nn_model* const* models,
                           const char* const* names, size_t model_count,
                           const d2nn_dataset* test, const d2nn_sweep_options* opts,
                           const char* csv_path, d2nn_sweep_callback callback,
                           void* user) {
  return guarded([&] {
    need(models, "models");
    need(names, "names");
    need(test, "test");
    need(csv_path, "csv_path");
    const d2nn::SweepSpec spec = to_sweep_spec(opts);

    std::vector<d2nn::NamedModel> named;
    for (size_t i = 0; i < model_count; ++i) {
      need(models[i], "model");
      need(names[i], "model name");
      d2nn::require(std::strchr(names[i], ',') == nullptr,
                    "model names may not contain commas");
      named.push_back({names[i], models[i]->model});
    }
    auto progress = [&](const d2nn::SweepRow& row) {
      if (callback)
        callback(row.model.c_str(), row.param.c_str(), row.repeat, row.accuracy,
                 user);
    };
    const d2nn::SweepReport report =
        d2nn::run_sweep(named, spec, test->images, progress);
    d2nn::write_file(csv_path, d2nn::report_to_csv(report));
  });
}

d2nn_status d2nn_plot_report(const char* csv_path, const char* svg_path) {
  return guarded([&] {
    need(csv_path, "csv_path");
    need(svg_path, "svg_path");
    const d2nn::SweepReport report =
        d2nn::report_from_csv(d2nn::read_file(csv_path));
    d2nn::write_file(svg_path, d2nn::render_chart_svg(report));
  });
}

d2nn_status d2nn_export_heights(const d2nn_model* model, const char* dir) {
  return guarded([&] {
    need(model, "model");
    need(dir, "dir");
    d2nn::export_heights(model->model, dir);
  });
}

}  // extern "C"
