// Copyright 2026 The cfocus Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <complex>
#include <cstddef>
#include <memory>
#include <span>
#include <vector>

namespace cfocus {

using cplx = std::complex<double>;

// Real-to-complex transform of a fixed size, backed by FFTW. Plans are
// created once; forward/inverse are const and safe to call concurrently
// from several threads on distinct buffers.
class RealFft {
 public:
  explicit RealFft(std::size_t size);
  ~RealFft();
  RealFft(RealFft&&) noexcept;
  RealFft& operator=(RealFft&&) noexcept;
  RealFft(const RealFft&) = delete;
  RealFft& operator=(const RealFft&) = delete;

  std::size_t size() const { return size_; }
  std::size_t n_bins() const { return size_ / 2 + 1; }

  // Unnormalized forward transform: out[k] = sum_n in[n] exp(-j 2 pi k n / N).
  void forward(std::span<const double> in, std::span<cplx> out) const;

  // Inverse of forward(), including the 1/N factor. Imaginary parts of the
  // DC and Nyquist bins are ignored.
  void inverse(std::span<const cplx> in, std::span<double> out) const;

 private:
  struct Plans;
  std::size_t size_;
  std::unique_ptr<Plans> plans_;
};

// Process-wide plan cache; the returned reference stays valid for the
// lifetime of the program.
const RealFft& shared_fft(std::size_t size);

}  // namespace cfocus
