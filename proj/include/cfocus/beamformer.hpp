// Copyright 2026 The cfocus Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

// Maximum directivity index beamformer:
//
//   minimize h^H R h  subject to  h^H d = g,
//   h = g* R^{-1} d / (d^H R^{-1} d),
//
// solved independently per frequency bin against the diffuse-field
// covariance of an ATF set.

#pragma once

#include <Eigen/Core>
#include <cstddef>
#include <vector>

#include "cfocus/atf.hpp"
#include "cfocus/spectral_frame.hpp"

namespace cfocus {

struct DistortionlessTarget {
  std::vector<Eigen::VectorXcd> steering;  // d(omega), one vector per bin
  std::vector<cplx> gain;                  // g, one value per bin

  std::size_t n_bins() const { return steering.size(); }
  std::size_t n_channels() const {
    return steering.empty() ? 0 : static_cast<std::size_t>(steering[0].size());
  }
};

struct BeamformerWeights {
  std::vector<Eigen::VectorXcd> weights;  // h(omega), one vector per bin

  std::size_t n_bins() const { return weights.size(); }
  std::size_t n_channels() const {
    return weights.empty() ? 0 : static_cast<std::size_t>(weights[0].size());
  }
};

enum class GainMode {
  // g(omega) = response of the reference microphone: the output reproduces
  // the target as captured by that microphone.
  kReferenceChannel,
  // g = 1 at every bin.
  kFlat,
};

inline constexpr double kDefaultLoading = 1e-3;

DistortionlessTarget make_target(const AtfSet& set, std::size_t dir_index,
                                 std::size_t ref_channel,
                                 GainMode mode = GainMode::kReferenceChannel);

// Solves (R + loading * trace(R)/N * I) x = d per bin with a Hermitian
// factorization and returns h = g* x / (d^H x). Parallel over bins.
// Throws NumericalError listing the bins where the loaded covariance is
// numerically singular.
BeamformerWeights max_di_weights(const IsotropicCovariance& cov,
                                 const DistortionlessTarget& target,
                                 double loading = kDefaultLoading);

// Matched filter g* d / |d|^2, which also satisfies the constraint.
BeamformerWeights delay_and_sum_weights(const DistortionlessTarget& target);

// 10 log10(|h^H d|^2 / (h^H R h)) per bin.
std::vector<double> directivity_index_db(const BeamformerWeights& weights,
                                         const DistortionlessTarget& target,
                                         const IsotropicCovariance& cov);

// y(omega) = h^H(omega) x(omega) per bin. Returns a one-channel frame that
// keeps the input's index and start time.
SpectralFrame apply_weights(const BeamformerWeights& weights,
                            const SpectralFrame& frame);

namespace serial {
BeamformerWeights max_di_weights(const IsotropicCovariance& cov,
                                 const DistortionlessTarget& target,
                                 double loading = kDefaultLoading);
SpectralFrame apply_weights(const BeamformerWeights& weights,
                            const SpectralFrame& frame);
}  // namespace serial

}  // namespace cfocus
