// Exercises the shared library through its C interface only.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include "d2nn/d2nn.h"

extern "C" int d2nn_c_smoke(void);

namespace fs = std::filesystem;

namespace {

struct Model {
  d2nn_model* p = nullptr;
  ~Model() { d2nn_model_free(p); }
};
struct Dataset {
  d2nn_dataset* p = nullptr;
  ~Dataset() { d2nn_dataset_free(p); }
};

fs::path scratch(const std::string& name) {
  auto dir = fs::temp_directory_path() / ("d2nn_capi_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

void put_be32(std::string& s, std::uint32_t v) {
  for (int shift = 24; shift >= 0; shift -= 8) s.push_back(char((v >> shift) & 0xff));
}

// Ten tiny digits: a bright square whose position depends on the label.
void write_idx(const fs::path& dir, int count) {
  std::string img, lbl;
  put_be32(img, 2051);
  put_be32(img, count);
  put_be32(img, 28);
  put_be32(img, 28);
  put_be32(lbl, 2049);
  put_be32(lbl, count);
  for (int i = 0; i < count; ++i) {
    const int label = i % 10;
    for (int r = 0; r < 28; ++r)
      for (int c = 0; c < 28; ++c) {
        const bool on = r / 6 == label / 5 + 1 && c / 5 == label % 5;
        img.push_back(char(on ? 200 + (i % 50) : 0));
      }
    lbl.push_back(char(label));
  }
  std::ofstream(dir / "images", std::ios::binary) << img;
  std::ofstream(dir / "labels", std::ios::binary) << lbl;
}

d2nn_optical_config small_config() {
  d2nn_optical_config cfg;
  d2nn_optical_config_default(&cfg);
  cfg.grid_n = 16;
  cfg.layer_count = 2;
  return cfg;
}

}  // namespace

TEST_CASE("header compiles and works from C") { CHECK(d2nn_c_smoke() == 0); }

TEST_CASE("defaults") {
  CHECK(std::string(d2nn_version()) == "1.0.0");
  d2nn_optical_config cfg;
  d2nn_optical_config_default(&cfg);
  CHECK(cfg.grid_n == 100);
  CHECK(cfg.layer_count == 5);
  CHECK(cfg.spacing_m == 0.03);
  CHECK(cfg.frequency_hz == 400e9);
  d2nn_train_config tc;
  d2nn_train_config_default(&tc);
  CHECK(tc.epochs == 20);
  CHECK(tc.batch_size == 32);
  CHECK(tc.noise_std == 0.0);
  d2nn_gradcheck_options gc;
  d2nn_gradcheck_options_default(&gc);
  CHECK(gc.grid_n == 32);
  CHECK(gc.step == 1e-6);
}

TEST_CASE("option validation") {
  d2nn_optical_config cfg;
  d2nn_optical_config_default(&cfg);
  CHECK(d2nn_optical_config_validate(&cfg) == D2NN_OK);
  cfg.grid_n = 7;
  CHECK(d2nn_optical_config_validate(&cfg) == D2NN_ERR_INVALID_ARGUMENT);
  CHECK(d2nn_optical_config_validate(nullptr) == D2NN_ERR_INVALID_ARGUMENT);

  d2nn_train_config tc;
  d2nn_train_config_default(&tc);
  CHECK(d2nn_train_config_validate(&tc) == D2NN_OK);
  tc.batch_size = 0;
  CHECK(d2nn_train_config_validate(&tc) == D2NN_ERR_INVALID_ARGUMENT);
  d2nn_train_config_default(&tc);
  tc.noise_std = -0.1;
  CHECK(d2nn_train_config_validate(&tc) == D2NN_ERR_INVALID_ARGUMENT);

  const char* values[] = {"0.1", "0.3"};
  d2nn_sweep_options so{};
  so.kind = "phase-noise";
  so.values = values;
  so.value_count = 2;
  so.repeats = 2;
  so.workers = 1;
  d2nn_illumination_default(&so.illumination);
  CHECK(d2nn_sweep_options_validate(&so) == D2NN_OK);
  so.kind = "humidity";
  CHECK(d2nn_sweep_options_validate(&so) == D2NN_ERR_INVALID_ARGUMENT);
  so.kind = "zquant";
  const char* bad[] = {"abc"};
  so.values = bad;
  so.value_count = 1;
  CHECK(d2nn_sweep_options_validate(&so) == D2NN_ERR_INVALID_ARGUMENT);
  so.values = values;
  so.value_count = 0;
  CHECK(d2nn_sweep_options_validate(&so) == D2NN_ERR_INVALID_ARGUMENT);
  so.value_count = 2;
  so.repeats = 0;
  CHECK(d2nn_sweep_options_validate(&so) == D2NN_ERR_INVALID_ARGUMENT);
}

TEST_CASE("status codes and messages") {
  Model m;
  d2nn_optical_config cfg = small_config();
  cfg.grid_n = 7;
  CHECK(d2nn_model_create(&cfg, 1, &m.p) == D2NN_ERR_INVALID_ARGUMENT);
  CHECK(m.p == nullptr);
  CHECK(std::string(d2nn_last_error()).find("grid") != std::string::npos);
  CHECK(d2nn_model_create(nullptr, 1, &m.p) == D2NN_ERR_INVALID_ARGUMENT);

  CHECK(d2nn_model_load("/nonexistent/model.d2nn", &m.p) == D2NN_ERR_IO);
  const auto dir = scratch("status");
  std::ofstream(dir / "junk.d2nn") << "junk";
  CHECK(d2nn_model_load((dir / "junk.d2nn").c_str(), &m.p) == D2NN_ERR_DATA);

  Dataset d;
  CHECK(d2nn_dataset_load_mnist("/nonexistent/a", "/nonexistent/b", 0, &d.p) == D2NN_ERR_IO);
}

TEST_CASE("model lifecycle and phases") {
  const auto cfg = small_config();
  Model a, b, c;
  REQUIRE(d2nn_model_create(&cfg, 5, &a.p) == D2NN_OK);
  REQUIRE(d2nn_model_clone(a.p, &b.p) == D2NN_OK);

  d2nn_model_info info;
  REQUIRE(d2nn_model_info_get(a.p, &info) == D2NN_OK);
  CHECK(info.grid_n == 16);
  CHECK(info.layer_count == 2);
  CHECK(info.wavelength_m == doctest::Approx(299792458.0 / 400e9));

  std::vector<double> phases(256);
  REQUIRE(d2nn_model_get_phases(a.p, 1, phases.data(), phases.size()) == D2NN_OK);
  for (double p : phases) {
    CHECK(p >= 0.0);
    CHECK(p < 2 * M_PI);
  }
  CHECK(d2nn_model_get_phases(a.p, 2, phases.data(), phases.size()) == D2NN_ERR_INVALID_ARGUMENT);
  CHECK(d2nn_model_get_phases(a.p, 0, phases.data(), 10) == D2NN_ERR_INVALID_ARGUMENT);

  std::vector<double> zeros(256, 0.0);
  REQUIRE(d2nn_model_set_phases(b.p, 0, zeros.data(), zeros.size()) == D2NN_OK);
  std::vector<double> back(256);
  REQUIRE(d2nn_model_get_phases(b.p, 0, back.data(), back.size()) == D2NN_OK);
  CHECK(back == zeros);
  REQUIRE(d2nn_model_get_phases(a.p, 0, back.data(), back.size()) == D2NN_OK);
  CHECK(back != zeros);  // the clone is independent

  const auto dir = scratch("lifecycle");
  const auto path1 = (dir / "a.d2nn").string(), path2 = (dir / "b.d2nn").string();
  REQUIRE(d2nn_model_save(a.p, path1.c_str()) == D2NN_OK);
  REQUIRE(d2nn_model_load(path1.c_str(), &c.p) == D2NN_OK);
  REQUIRE(d2nn_model_save(c.p, path2.c_str()) == D2NN_OK);
  CHECK(slurp(path1) == slurp(path2));
}

TEST_CASE("prediction") {
  const auto cfg = small_config();
  Model m;
  REQUIRE(d2nn_model_create(&cfg, 5, &m.p) == D2NN_OK);
  d2nn_illumination illum;
  d2nn_illumination_default(&illum);
  std::vector<uint8_t> px(D2NN_IMAGE_PIXELS, 0);
  for (int i = 300; i < 500; ++i) px[i] = 180;
  double q[D2NN_CLASS_COUNT];
  int32_t predicted = -1;
  REQUIRE(d2nn_model_predict(m.p, px.data(), &illum, q, &predicted) == D2NN_OK);
  double sum = 0.0;
  int best = 0;
  for (int c = 0; c < D2NN_CLASS_COUNT; ++c) {
    sum += q[c];
    if (q[c] > q[best]) best = c;
  }
  CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(predicted == best);
  illum.beam = 7;
  CHECK(d2nn_model_predict(m.p, px.data(), &illum, q, &predicted) == D2NN_ERR_INVALID_ARGUMENT);
}

TEST_CASE("error models") {
  const auto cfg = small_config();
  Model m, noisy, same, quant, spaced, random, shifted;
  REQUIRE(d2nn_model_create(&cfg, 9, &m.p) == D2NN_OK);
  REQUIRE(d2nn_model_perturb_phase(m.p, 0.3, 1, &noisy.p) == D2NN_OK);
  REQUIRE(d2nn_model_perturb_phase(m.p, 0.0, 1, &same.p) == D2NN_OK);
  std::vector<double> a(256), b(256);
  d2nn_model_get_phases(m.p, 0, a.data(), a.size());
  d2nn_model_get_phases(same.p, 0, b.data(), b.size());
  CHECK(a == b);
  d2nn_model_get_phases(noisy.p, 0, b.data(), b.size());
  CHECK(a != b);

  REQUIRE(d2nn_model_quantize_height(m.p, 0.2e-3, &quant.p) == D2NN_OK);
  CHECK(d2nn_model_quantize_height(m.p, -1.0, &quant.p) == D2NN_ERR_INVALID_ARGUMENT);

  const double spacings[3] = {0.029, 0.03, 0.031};
  REQUIRE(d2nn_model_set_spacings(m.p, spacings, 3, &spaced.p) == D2NN_OK);
  CHECK(d2nn_model_set_spacings(m.p, spacings, 2, &spaced.p) == D2NN_ERR_INVALID_ARGUMENT);
  REQUIRE(d2nn_model_random_spacings(m.p, 0.029, 0.031, 4, &random.p) == D2NN_OK);
  REQUIRE(d2nn_model_shift_frequency(m.p, 410e9, &shifted.p) == D2NN_OK);
  d2nn_model_info info;
  d2nn_model_info_get(shifted.p, &info);
  CHECK(info.frequency_hz == 410e9);
}

TEST_CASE("dataset, training, evaluation, sweeps") {
  const auto dir = scratch("train");
  write_idx(dir, 40);
  Dataset d;
  REQUIRE(d2nn_dataset_load_mnist((dir / "images").c_str(), (dir / "labels").c_str(), 0, &d.p) ==
          D2NN_OK);
  CHECK(d2nn_dataset_size(d.p) == 40);
  CHECK(d2nn_dataset_label(d.p, 13) == 3);
  CHECK(d2nn_dataset_label(d.p, 40) == -1);
  std::vector<uint8_t> px(D2NN_IMAGE_PIXELS);
  REQUIRE(d2nn_dataset_pixels(d.p, 0, px.data()) == D2NN_OK);
  CHECK(px[6 * 28] == 200);
  CHECK(d2nn_dataset_pixels(d.p, 40, px.data()) == D2NN_ERR_INVALID_ARGUMENT);

  const auto cfg = small_config();
  Model m;
  REQUIRE(d2nn_model_create(&cfg, 2, &m.p) == D2NN_OK);
  d2nn_train_config tc;
  d2nn_train_config_default(&tc);
  tc.epochs = 3;
  tc.batch_size = 8;
  tc.noise_std = 0.2;
  tc.seed = 2;
  int calls = 0;
  auto on_epoch = [](const d2nn_epoch_record* r, void* user) {
    auto* n = static_cast<int*>(user);
    ++*n;
    CHECK(r->epoch == *n);
    CHECK(r->steps == 5);
    CHECK(r->has_test_acc == 1);
  };
  const auto history = (dir / "history.csv").string();
  REQUIRE(d2nn_train(m.p, d.p, d.p, &tc, history.c_str(), on_epoch, &calls) == D2NN_OK);
  CHECK(calls == 3);
  CHECK(slurp(history).rfind("epoch,train_loss,train_acc,test_acc\n", 0) == 0);
  d2nn_model_info info;
  d2nn_model_info_get(m.p, &info);
  CHECK(info.epochs_completed == 3);
  CHECK(info.noise_std == 0.2);

  tc.epochs = 0;
  CHECK(d2nn_train(m.p, d.p, nullptr, &tc, nullptr, nullptr, nullptr) == D2NN_ERR_INVALID_ARGUMENT);

  d2nn_eval_result r1, r2;
  REQUIRE(d2nn_evaluate(m.p, d.p, nullptr, 1, &r1) == D2NN_OK);
  REQUIRE(d2nn_evaluate(m.p, d.p, nullptr, 2, &r2) == D2NN_OK);
  CHECK(r1.accuracy == r2.accuracy);
  int total = 0;
  for (int v : r1.confusion) total += v;
  CHECK(total == 40);

  Model other;
  REQUIRE(d2nn_model_clone(m.p, &other.p) == D2NN_OK);
  const d2nn_model* models[2] = {m.p, other.p};
  const char* names[2] = {"A", "B"};
  const char* values[2] = {"0.1", "0.5"};
  d2nn_sweep_options opts{};
  opts.kind = "phase-noise";
  opts.values = values;
  opts.value_count = 2;
  opts.repeats = 2;
  opts.seed = 3;
  opts.workers = 1;
  d2nn_illumination_default(&opts.illumination);
  const auto csv = (dir / "sweep.csv").string();
  REQUIRE(d2nn_sweep_run(models, names, 2, d.p, &opts, csv.c_str(), nullptr, nullptr) == D2NN_OK);
  const std::string text = slurp(csv);
  CHECK(text.rfind("kind,param,model,repeat,seed,accuracy,mean_loss\n", 0) == 0);
  const auto svg = (dir / "chart.svg").string();
  REQUIRE(d2nn_plot_report(csv.c_str(), svg.c_str()) == D2NN_OK);
  CHECK(slurp(svg).rfind("<svg", 0) == 0);

  opts.kind = "thermal";
  CHECK(d2nn_sweep_run(models, names, 2, d.p, &opts, csv.c_str(), nullptr, nullptr) ==
        D2NN_ERR_INVALID_ARGUMENT);
  opts.kind = "zquant";
  const char* bad[1] = {"zero"};
  opts.values = bad;
  opts.value_count = 1;
  CHECK(d2nn_sweep_run(models, names, 2, d.p, &opts, csv.c_str(), nullptr, nullptr) ==
        D2NN_ERR_INVALID_ARGUMENT);
  CHECK(slurp(csv) == text);  // failed runs leave earlier output alone

  std::ofstream(dir / "bad.csv") << "not,a,report\n";
  CHECK(d2nn_plot_report((dir / "bad.csv").c_str(), svg.c_str()) == D2NN_ERR_DATA);

  const auto heights = dir / "heights";
  REQUIRE(d2nn_export_heights(m.p, heights.c_str()) == D2NN_OK);
  CHECK(fs::exists(heights / "layer_1_heights.csv"));
  CHECK(fs::exists(heights / "layer_2_heights.csv"));
  CHECK(fs::exists(heights / "heights_histogram.csv"));
}

TEST_CASE("verification entry points") {
  d2nn_gradcheck_options gc;
  d2nn_gradcheck_options_default(&gc);
  double err = 1.0;
  REQUIRE(d2nn_gradcheck(&gc, &err) == D2NN_OK);
  CHECK(err <= D2NN_GRADCHECK_TOLERANCE);
  gc.step = 0.0;
  CHECK(d2nn_gradcheck(&gc, &err) == D2NN_ERR_INVALID_ARGUMENT);

  d2nn_oracle_options oc;
  d2nn_oracle_options_default(&oc);
  double rms = 1.0;
  REQUIRE(d2nn_oracle_check(&oc, &rms) == D2NN_OK);
  CHECK(rms <= D2NN_ORACLE_TOLERANCE);
  oc.grid_n = 256;
  CHECK(d2nn_oracle_check(&oc, &rms) == D2NN_ERR_INVALID_ARGUMENT);
}
