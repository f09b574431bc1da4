#pragma once

#include <fftw3.h>

#include <cmath>
#include <cstddef>
#include <span>

namespace enfpd::detail {

// Real-to-complex FFT of a fixed size. Plans are shared between instances of
// the same size; each instance owns its buffers, so separate instances may run
// concurrently.
class RealFft {
 public:
  explicit RealFft(std::size_t n);
  RealFft(const RealFft&) = delete;
  RealFft& operator=(const RealFft&) = delete;
  ~RealFft();

  std::size_t size() const noexcept { return n_; }
  std::span<double> input() noexcept { return {in_, n_}; }
  void execute();
  double magnitude(std::size_t bin) const noexcept {
    return std::hypot(out_[bin][0], out_[bin][1]);
  }

 private:
  std::size_t n_;
  double* in_ = nullptr;
  fftw_complex* out_ = nullptr;
  fftw_plan plan_ = nullptr;
};

}  // namespace enfpd::detail
