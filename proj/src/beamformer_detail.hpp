// Copyright 2026 The cfocus Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

// Per-bin pieces shared by the parallel and serial beamformer kernels.

#pragma once

#include <vector>

#include "cfocus/beamformer.hpp"

namespace cfocus::detail {

// Returns false when the loaded covariance is numerically singular.
bool solve_max_di_bin(const Eigen::MatrixXcd& r, const Eigen::VectorXcd& d,
                      cplx g, double loading, Eigen::VectorXcd& h);
void check_dims(const IsotropicCovariance& cov, const DistortionlessTarget& target);
void throw_singular(const std::vector<char>& failed);

}  // namespace cfocus::detail
