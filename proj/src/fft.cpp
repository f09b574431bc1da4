#include "fft.hpp"

#include <map>
#include <mutex>
#include <new>

namespace enfpd::detail {
namespace {

// FFTW's planner is not thread-safe; executing an existing plan on other
// arrays of the same alignment is.
struct PlanCache {
  std::mutex mutex;
  std::map<std::size_t, fftw_plan> plans;

  ~PlanCache() {
    for (auto& [n, plan] : plans) fftw_destroy_plan(plan);
  }
};

PlanCache& cache() {
  static PlanCache c;
  return c;
}

}  // namespace

RealFft::RealFft(std::size_t n) : n_(n) {
  in_ = static_cast<double*>(fftw_malloc(sizeof(double) * n));
  out_ = static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * (n / 2 + 1)));
  if (in_ == nullptr || out_ == nullptr) {
    fftw_free(in_);
    fftw_free(out_);
    throw std::bad_alloc();
  }
  auto& c = cache();
  std::lock_guard lock(c.mutex);
  auto it = c.plans.find(n);
  if (it == c.plans.end()) {
    it = c.plans.emplace(n, fftw_plan_dft_r2c_1d(static_cast<int>(n), in_, out_, FFTW_ESTIMATE)).first;
  }
  plan_ = it->second;
}

RealFft::~RealFft() {
  fftw_free(in_);
  fftw_free(out_);
}

void RealFft::execute() { fftw_execute_dft_r2c(plan_, in_, out_); }

}  // namespace enfpd::detail
