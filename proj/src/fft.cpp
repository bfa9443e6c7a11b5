#include "fft.hpp"

#include <fftw3.h>

#include <map>
#include <memory>
#include <mutex>
#include <tuple>

namespace d2nn::detail {
namespace {

struct FftwFree {
  void operator()(std::complex<double>* p) const { fftw_free(p); }
};

struct Workspace {
  std::unique_ptr<std::complex<double>[], FftwFree> data;
  int capacity = 0;
};

// Plans are created once with FFTW_ESTIMATE so the chosen algorithm, and
// therefore every rounding, is identical from run to run.
class PlanCache {
 public:
  // kind: 0 = rows, 1 = columns
  fftw_plan get(int m, int count, int kind, int sign) {
    std::lock_guard lock(mutex_);
    auto key = std::make_tuple(m, count, kind, sign);
    if (auto it = plans_.find(key); it != plans_.end()) return it->second;

    auto* buf = fftw_alloc_complex(std::size_t(m) * m);
    int n[] = {m};
    fftw_plan plan;
    if (kind == 0) {
      plan = fftw_plan_many_dft(1, n, count, buf, nullptr, 1, m, buf, nullptr,
                                1, m, sign, FFTW_ESTIMATE);
    } else {
      plan = fftw_plan_many_dft(1, n, count, buf, nullptr, m, 1, buf, nullptr,
                                m, 1, sign, FFTW_ESTIMATE);
    }
    fftw_free(buf);
    plans_.emplace(key, plan);
    return plan;
  }

  ~PlanCache() {
    for (auto& [key, plan] : plans_) fftw_destroy_plan(plan);
  }

 private:
  std::mutex mutex_;
  std::map<std::tuple<int, int, int, int>, fftw_plan> plans_;
};

PlanCache& plans() {
  static PlanCache cache;
  return cache;
}

void run(fftw_plan plan, std::span<std::complex<double>> data) {
  auto* p = reinterpret_cast<fftw_complex*>(data.data());
  fftw_execute_dft(plan, p, p);
}

}  // namespace

std::span<std::complex<double>> fft_workspace(int m) {
  thread_local Workspace ws;
  const int need = m * m;
  if (ws.capacity < need) {
    ws.data.reset(reinterpret_cast<std::complex<double>*>(
        fftw_alloc_complex(std::size_t(need))));
    ws.capacity = need;
  }
  return {ws.data.get(), std::size_t(need)};
}

void fft2_forward(std::span<std::complex<double>> data, int m,
                  int active_rows) {
  run(plans().get(m, active_rows, 0, FFTW_FORWARD), data);
  run(plans().get(m, m, 1, FFTW_FORWARD), data);
}

void fft2_inverse(std::span<std::complex<double>> data, int m,
                  int active_rows) {
  run(plans().get(m, m, 1, FFTW_BACKWARD), data);
  run(plans().get(m, active_rows, 0, FFTW_BACKWARD), data);
}

}  // namespace d2nn::detail
