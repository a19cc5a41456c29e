// Copyright 2026 The cfocus Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

// Plain-loop reference for the parallel covariance kernel.

#include "cfocus/atf.hpp"

namespace cfocus::serial {

IsotropicCovariance isotropic_covariance(const AtfSet& set) {
  const std::size_t n = set.n_channels();
  IsotropicCovariance cov;
  cov.matrices.assign(set.n_bins(), Eigen::MatrixXcd::Zero(n, n));
  for (std::size_t bin = 0; bin < set.n_bins(); ++bin) {
    Eigen::MatrixXcd& r = cov.matrices[bin];
    for (std::size_t dir = 0; dir < set.n_directions(); ++dir)
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
          r(i, j) += set.at(dir, bin, i) * std::conj(set.at(dir, bin, j));
    r /= static_cast<double>(set.n_directions());
  }
  return cov;
}

}  // namespace cfocus::serial
