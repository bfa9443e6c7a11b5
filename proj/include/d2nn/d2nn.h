/*
 * d2nn: C interface to the diffractive network simulator.
 *
 * All objects are opaque handles owned by the caller and released with the
 * matching *_free function. Every fallible call returns a d2nn_status; on
 * failure d2nn_last_error() describes the problem (per thread, valid until
 * the next failing call on that thread).
 */
#ifndef D2NN_D2NN_H
#define D2NN_D2NN_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  if defined(D2NN_BUILDING_LIBRARY)
#    define D2NN_API __declspec(dllexport)
#  else
#    define D2NN_API __declspec(dllimport)
#  endif
#else
#  define D2NN_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum d2nn_status {
  D2NN_OK = 0,
  D2NN_ERR_INVALID_ARGUMENT = 1,
  D2NN_ERR_DATA = 2,
  D2NN_ERR_IO = 3,
  D2NN_ERR_NUMERIC = 4,
  D2NN_ERR_INTERNAL = 5
} d2nn_status;

#define D2NN_CLASS_COUNT 10
#define D2NN_IMAGE_PIXELS 784
#define D2NN_GRADCHECK_TOLERANCE 1e-5
#define D2NN_ORACLE_TOLERANCE 0.05

typedef struct d2nn_model d2nn_model;
typedef struct d2nn_dataset d2nn_dataset;

/* Uniform-spacing optical geometry (layer_count + 1 gaps of spacing_m). */
typedef struct d2nn_optical_config {
  double frequency_hz;
  int32_t grid_n;
  double pixel_pitch_m;
  int32_t layer_count;
  double spacing_m;
  double material_index;
  int32_t pad_factor;
} d2nn_optical_config;

typedef enum d2nn_beam { D2NN_BEAM_GAUSSIAN = 0, D2NN_BEAM_UNIFORM = 1 } d2nn_beam;
typedef enum d2nn_resample { D2NN_RESAMPLE_BILINEAR = 0, D2NN_RESAMPLE_NEAREST = 1 } d2nn_resample;

typedef struct d2nn_illumination {
  int32_t beam;      /* d2nn_beam */
  double waist_m;    /* 0: half the aperture width */
  int32_t resample;  /* d2nn_resample */
} d2nn_illumination;

typedef struct d2nn_train_config {
  double learning_rate;
  int32_t epochs;
  int32_t batch_size;
  double noise_std;
  uint64_t seed;
  int32_t shuffle;
  int32_t eval_every;
  int32_t per_sample_noise;
  int32_t workers;
  d2nn_illumination illumination;
} d2nn_train_config;

typedef struct d2nn_epoch_record {
  int32_t epoch;
  int32_t steps;
  double train_loss;
  double train_acc;
  int32_t has_test_acc;
  double test_acc;
  double wall_seconds;
} d2nn_epoch_record;

typedef void (*d2nn_epoch_callback)(const d2nn_epoch_record* record, void* user);

typedef struct d2nn_model_info {
  int32_t grid_n;
  int32_t layer_count;
  int32_t pad_factor;
  double frequency_hz;
  double wavelength_m;
  double pixel_pitch_m;
  double material_index;
  uint64_t seed;
  double noise_std;
  int32_t epochs_completed;
  double learning_rate;
} d2nn_model_info;

typedef struct d2nn_eval_result {
  double accuracy;
  double mean_loss;
  int32_t confusion[D2NN_CLASS_COUNT * D2NN_CLASS_COUNT]; /* [true * 10 + predicted] */
} d2nn_eval_result;

typedef struct d2nn_gradcheck_options {
  int32_t grid_n;
  int32_t layers;
  int32_t entries;
  double step;
  uint64_t seed;
  const uint8_t* pixels; /* optional 28x28 image, NULL for a synthetic one */
} d2nn_gradcheck_options;

typedef struct d2nn_oracle_options {
  int32_t grid_n;
  double pixel_pitch_m;
  double frequency_hz;
  double distance_m;
  double waist_m;
  int32_t pad_factor;
} d2nn_oracle_options;

typedef struct d2nn_sweep_options {
  const char* kind;            /* phase-noise | zquant | frequency | spacing */
  const char* const* values;   /* rad | mm | GHz | m or "random:lo:hi" */
  size_t value_count;
  int32_t repeats;
  uint64_t seed;
  int32_t workers;
  d2nn_illumination illumination;
} d2nn_sweep_options;

typedef void (*d2nn_sweep_callback)(const char* model, const char* param,
                                    int32_t repeat, double accuracy, void* user);

D2NN_API const char* d2nn_last_error(void);
D2NN_API const char* d2nn_version(void);

D2NN_API void d2nn_optical_config_default(d2nn_optical_config* cfg);
D2NN_API void d2nn_illumination_default(d2nn_illumination* illum);
D2NN_API void d2nn_train_config_default(d2nn_train_config* cfg);
D2NN_API void d2nn_gradcheck_options_default(d2nn_gradcheck_options* opts);
D2NN_API void d2nn_oracle_options_default(d2nn_oracle_options* opts);

/* Cheap checks so callers can reject bad options before loading data. */
D2NN_API d2nn_status d2nn_optical_config_validate(const d2nn_optical_config* cfg);
D2NN_API d2nn_status d2nn_train_config_validate(const d2nn_train_config* cfg);
D2NN_API d2nn_status d2nn_sweep_options_validate(const d2nn_sweep_options* opts);

/* ---- models ---------------------------------------------------------- */

/* Random masks uniform on [0, 2pi), default detector layout. */
D2NN_API d2nn_status d2nn_model_create(const d2nn_optical_config* cfg,
                                       uint64_t seed, d2nn_model** out);
D2NN_API d2nn_status d2nn_model_load(const char* path, d2nn_model** out);
D2NN_API d2nn_status d2nn_model_save(const d2nn_model* model, const char* path);
D2NN_API d2nn_status d2nn_model_clone(const d2nn_model* model, d2nn_model** out);
D2NN_API void d2nn_model_free(d2nn_model* model);

D2NN_API d2nn_status d2nn_model_info_get(const d2nn_model* model,
                                         d2nn_model_info* info);
/* Copies grid_n * grid_n phases of one layer. */
D2NN_API d2nn_status d2nn_model_get_phases(const d2nn_model* model, int32_t layer,
                                           double* out, size_t count);
D2NN_API d2nn_status d2nn_model_set_phases(d2nn_model* model, int32_t layer,
                                           const double* phases, size_t count);

/* Class probabilities and predicted class for one 28x28 image. */
D2NN_API d2nn_status d2nn_model_predict(const d2nn_model* model,
                                        const uint8_t* pixels,
                                        const d2nn_illumination* illum,
                                        double* probabilities, int32_t* predicted);

/* ---- hardware-error models (each returns a new handle) --------------- */

D2NN_API d2nn_status d2nn_model_perturb_phase(const d2nn_model* model, double sigma,
                                              uint64_t seed, d2nn_model** out);
D2NN_API d2nn_status d2nn_model_quantize_height(const d2nn_model* model,
                                                double step_m, d2nn_model** out);
D2NN_API d2nn_status d2nn_model_set_spacings(const d2nn_model* model,
                                             const double* spacings_m, size_t count,
                                             d2nn_model** out);
D2NN_API d2nn_status d2nn_model_random_spacings(const d2nn_model* model, double lo_m,
                                                double hi_m, uint64_t seed,
                                                d2nn_model** out);
D2NN_API d2nn_status d2nn_model_shift_frequency(const d2nn_model* model,
                                                double frequency_hz, d2nn_model** out);

/* ---- datasets -------------------------------------------------------- */

/* limit = 0 keeps every sample. */
D2NN_API d2nn_status d2nn_dataset_load_mnist(const char* images_path,
                                             const char* labels_path, size_t limit,
                                             d2nn_dataset** out);
D2NN_API size_t d2nn_dataset_size(const d2nn_dataset* dataset);
D2NN_API int32_t d2nn_dataset_label(const d2nn_dataset* dataset, size_t index);
/* Copies the D2NN_IMAGE_PIXELS bytes of one image. */
D2NN_API d2nn_status d2nn_dataset_pixels(const d2nn_dataset* dataset, size_t index,
                                         uint8_t* out);
D2NN_API void d2nn_dataset_free(d2nn_dataset* dataset);

/* ---- training and evaluation ---------------------------------------- */

/* Trains `model` in place. test may be NULL; history_csv_path may be NULL. */
D2NN_API d2nn_status d2nn_train(d2nn_model* model, const d2nn_dataset* train,
                                const d2nn_dataset* test,
                                const d2nn_train_config* cfg,
                                const char* history_csv_path,
                                d2nn_epoch_callback callback, void* user);

D2NN_API d2nn_status d2nn_evaluate(const d2nn_model* model,
                                   const d2nn_dataset* dataset,
                                   const d2nn_illumination* illum, int32_t workers,
                                   d2nn_eval_result* out);

/* ---- verification ---------------------------------------------------- */

D2NN_API d2nn_status d2nn_gradcheck(const d2nn_gradcheck_options* opts,
                                    double* max_relative_error);
D2NN_API d2nn_status d2nn_oracle_check(const d2nn_oracle_options* opts,
                                       double* relative_rms);

/* ---- experiments ----------------------------------------------------- */

D2NN_API d2nn_status d2nn_sweep_run(const d2nn_model* const* models,
                                    const char* const* names, size_t model_count,
                                    const d2nn_dataset* test,
                                    const d2nn_sweep_options* opts,
                                    const char* csv_path,
                                    d2nn_sweep_callback callback, void* user);

D2NN_API d2nn_status d2nn_plot_report(const char* csv_path, const char* svg_path);

/* layer_<i>_heights.csv (mm) per mask plus heights_histogram.csv in dir. */
D2NN_API d2nn_status d2nn_export_heights(const d2nn_model* model, const char* dir);

#ifdef __cplusplus
}
#endif

#endif /* D2NN_D2NN_H */
