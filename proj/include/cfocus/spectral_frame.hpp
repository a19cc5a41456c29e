// Copyright 2026 The cfocus Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <Eigen/Core>
#include <complex>
#include <cstddef>

namespace cfocus {

using cplx = std::complex<double>;
using SpectrumMatrix =
    Eigen::Matrix<cplx, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// One STFT frame: one-sided spectrum per channel, row = bin.
struct SpectralFrame {
  SpectrumMatrix bins;  // n_bins x n_channels
  std::size_t frame_index = 0;
  double start_time = 0.0;  // seconds

  std::size_t n_bins() const { return static_cast<std::size_t>(bins.rows()); }
  std::size_t n_channels() const { return static_cast<std::size_t>(bins.cols()); }
};

}  // namespace cfocus
