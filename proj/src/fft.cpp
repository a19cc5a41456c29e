// Copyright 2026 The cfocus Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "cfocus/fft.hpp"

#include <fftw3.h>

#include <map>
#include <mutex>

#include "cfocus/error.hpp"

namespace cfocus {

namespace {
// The FFTW planner is not re-entrant. Leaked so cached plans can still be
// destroyed during static teardown.
std::mutex& planner_mutex() {
  static auto* m = new std::mutex;
  return *m;
}
}  // namespace

struct RealFft::Plans {
  fftw_plan r2c = nullptr;
  fftw_plan c2r = nullptr;
  ~Plans() {
    std::lock_guard<std::mutex> lock(planner_mutex());
    if (r2c) fftw_destroy_plan(r2c);
    if (c2r) fftw_destroy_plan(c2r);
  }
};

RealFft::RealFft(std::size_t size) : size_(size), plans_(new Plans) {
  if (size < 2) throw DimensionError("RealFft: size must be >= 2");
  std::vector<double> real(size);
  std::vector<cplx> spec(n_bins());
  auto* cbuf = reinterpret_cast<fftw_complex*>(spec.data());
  const int n = static_cast<int>(size);
  std::lock_guard<std::mutex> lock(planner_mutex());
  plans_->r2c = fftw_plan_dft_r2c_1d(n, real.data(), cbuf,
                                     FFTW_ESTIMATE | FFTW_UNALIGNED);
  plans_->c2r = fftw_plan_dft_c2r_1d(n, cbuf, real.data(),
                                     FFTW_ESTIMATE | FFTW_UNALIGNED);
  if (!plans_->r2c || !plans_->c2r) throw Error("RealFft: planning failed");
}

RealFft::~RealFft() = default;
RealFft::RealFft(RealFft&&) noexcept = default;
RealFft& RealFft::operator=(RealFft&&) noexcept = default;

void RealFft::forward(std::span<const double> in, std::span<cplx> out) const {
  if (in.size() != size_ || out.size() != n_bins())
    throw DimensionError("RealFft::forward: buffer size mismatch");
  // r2c with an out-of-place plan leaves the input untouched.
  fftw_execute_dft_r2c(plans_->r2c, const_cast<double*>(in.data()),
                       reinterpret_cast<fftw_complex*>(out.data()));
}

void RealFft::inverse(std::span<const cplx> in, std::span<double> out) const {
  if (in.size() != n_bins() || out.size() != size_)
    throw DimensionError("RealFft::inverse: buffer size mismatch");
  // c2r destroys its input.
  std::vector<cplx> scratch(in.begin(), in.end());
  fftw_execute_dft_c2r(plans_->c2r,
                       reinterpret_cast<fftw_complex*>(scratch.data()),
                       out.data());
  const double scale = 1.0 / static_cast<double>(size_);
  for (double& v : out) v *= scale;
}

const RealFft& shared_fft(std::size_t size) {
  static std::mutex cache_mutex;
  static std::map<std::size_t, std::unique_ptr<RealFft>> cache;
  std::lock_guard<std::mutex> lock(cache_mutex);
  auto& slot = cache[size];
  if (!slot) slot = std::make_unique<RealFft>(size);
  return *slot;
}

}  // namespace cfocus
