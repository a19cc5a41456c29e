// Copyright 2026 The cfocus Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

// Single-threaded references for the per-bin beamformer kernels.

#include <string>

#include "cfocus/beamformer.hpp"
#include "cfocus/error.hpp"
#include "../beamformer_detail.hpp"

namespace cfocus {

namespace serial {

BeamformerWeights max_di_weights(const IsotropicCovariance& cov,
                                 const DistortionlessTarget& target, double loading) {
  detail::check_dims(cov, target);
  if (!(loading >= 0.0)) throw RangeError("max_di_weights: loading must be >= 0");
  BeamformerWeights out;
  out.weights.resize(target.n_bins());
  std::vector<char> failed(target.n_bins(), 0);
  for (std::size_t bin = 0; bin < target.n_bins(); ++bin)
    if (!detail::solve_max_di_bin(cov.matrices[bin], target.steering[bin],
                                  target.gain[bin], loading, out.weights[bin]))
      failed[bin] = 1;
  detail::throw_singular(failed);
  return out;
}

SpectralFrame apply_weights(const BeamformerWeights& weights, const SpectralFrame& frame) {
  if (frame.n_bins() != weights.n_bins() || frame.n_channels() != weights.n_channels())
    throw DimensionError("apply_weights: dimension mismatch");
  SpectralFrame out;
  out.frame_index = frame.frame_index;
  out.start_time = frame.start_time;
  out.bins.resize(frame.bins.rows(), 1);
  for (std::size_t bin = 0; bin < frame.n_bins(); ++bin) {
    cplx acc = 0.0;
    for (std::size_t ch = 0; ch < frame.n_channels(); ++ch)
      acc += std::conj(weights.weights[bin](ch)) * frame.bins(bin, ch);
    out.bins(bin, 0) = acc;
  }
  return out;
}

}  // namespace serial
}  // namespace cfocus
