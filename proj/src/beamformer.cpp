// Copyright 2026 The cfocus Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "cfocus/beamformer.hpp"

#include <Eigen/Cholesky>
#include <cmath>
#include <cstdint>
#include <string>

#include "beamformer_detail.hpp"
#include "cfocus/error.hpp"

namespace cfocus {

namespace detail {

bool solve_max_di_bin(const Eigen::MatrixXcd& r, const Eigen::VectorXcd& d,
                      cplx g, double loading, Eigen::VectorXcd& h) {
  const Eigen::Index n = r.rows();
  Eigen::MatrixXcd loaded = r;
  if (loading > 0.0) {
    const double mu = loading * r.trace().real() / static_cast<double>(n);
    loaded.diagonal().array() += mu;
  }
  Eigen::LDLT<Eigen::MatrixXcd> ldlt(loaded);
  if (ldlt.info() != Eigen::Success || !(ldlt.rcond() > 1e-14)) return false;
  // rcond() misses exact zero pivots, so compare the pivots directly.
  const Eigen::VectorXd pivots = ldlt.vectorD().cwiseAbs();
  if (!(pivots.minCoeff() > 1e-14 * pivots.maxCoeff())) return false;
  const Eigen::VectorXcd x = ldlt.solve(d);
  const cplx den = d.dot(x);  // d^H x
  if (!x.allFinite() || !std::isfinite(den.real()) || !(den.real() > 0.0))
    return false;
  h = (std::conj(g) / den) * x;
  // Remove the rounding residue of the constraint; h^H d equals g up to a
  // final multiply.
  const cplx achieved = h.dot(d);
  h *= std::conj(g / achieved);
  return h.allFinite();
}

void check_dims(const IsotropicCovariance& cov, const DistortionlessTarget& target) {
  if (cov.n_bins() != target.n_bins() || cov.n_channels() != target.n_channels())
    throw DimensionError("max_di_weights: covariance is " +
                         std::to_string(cov.n_bins()) + " bins x " +
                         std::to_string(cov.n_channels()) + " channels, target is " +
                         std::to_string(target.n_bins()) + " x " +
                         std::to_string(target.n_channels()));
  if (target.gain.size() != target.n_bins())
    throw DimensionError("max_di_weights: gain length differs from bin count");
}

void throw_singular(const std::vector<char>& failed) {
  std::string bins;
  std::size_t count = 0;
  for (std::size_t b = 0; b < failed.size(); ++b) {
    if (!failed[b]) continue;
    if (count < 16) bins += (count ? "," : "") + std::to_string(b);
    ++count;
  }
  if (count == 0) return;
  if (count > 16) bins += ",...";
  throw NumericalError("max_di_weights: singular loaded covariance at " +
                       std::to_string(count) + " bin(s): " + bins);
}

}  // namespace detail

DistortionlessTarget make_target(const AtfSet& set, std::size_t dir_index,
                                 std::size_t ref_channel, GainMode mode) {
  if (dir_index >= set.n_directions())
    throw RangeError("make_target: direction index " + std::to_string(dir_index) +
                     " out of range [0, " + std::to_string(set.n_directions()) + ")");
  if (ref_channel >= set.n_channels())
    throw RangeError("make_target: reference channel " + std::to_string(ref_channel) +
                     " out of range [0, " + std::to_string(set.n_channels()) + ")");
  DistortionlessTarget target;
  target.steering.reserve(set.n_bins());
  target.gain.reserve(set.n_bins());
  std::string degenerate;
  for (std::size_t bin = 0; bin < set.n_bins(); ++bin) {
    target.steering.emplace_back(set.response(dir_index, bin));
    const cplx g = mode == GainMode::kFlat ? cplx(1.0, 0.0)
                                           : set.at(dir_index, bin, ref_channel);
    if (std::abs(g) < 1e-12) degenerate += (degenerate.empty() ? "" : ",") + std::to_string(bin);
    if (!(target.steering.back().norm() > 0.0))
      throw NumericalError("make_target: zero steering vector at bin " + std::to_string(bin));
    target.gain.push_back(g);
  }
  if (!degenerate.empty())
    throw NumericalError("make_target: degenerate target gain at bins " + degenerate);
  return target;
}

BeamformerWeights max_di_weights(const IsotropicCovariance& cov,
                                 const DistortionlessTarget& target, double loading) {
  detail::check_dims(cov, target);
  if (!(loading >= 0.0)) throw RangeError("max_di_weights: loading must be >= 0");
  const auto n_bins = static_cast<std::int64_t>(target.n_bins());
  BeamformerWeights out;
  out.weights.resize(target.n_bins());
  std::vector<char> failed(target.n_bins(), 0);
#pragma omp parallel for schedule(dynamic, 16)
  for (std::int64_t b = 0; b < n_bins; ++b) {
    const auto bin = static_cast<std::size_t>(b);
    if (!detail::solve_max_di_bin(cov.matrices[bin], target.steering[bin],
                                  target.gain[bin], loading, out.weights[bin]))
      failed[bin] = 1;
  }
  detail::throw_singular(failed);
  return out;
}

BeamformerWeights delay_and_sum_weights(const DistortionlessTarget& target) {
  BeamformerWeights out;
  out.weights.reserve(target.n_bins());
  for (std::size_t bin = 0; bin < target.n_bins(); ++bin) {
    const Eigen::VectorXcd& d = target.steering[bin];
    out.weights.push_back((std::conj(target.gain[bin]) / d.squaredNorm()) * d);
  }
  return out;
}

std::vector<double> directivity_index_db(const BeamformerWeights& weights,
                                         const DistortionlessTarget& target,
                                         const IsotropicCovariance& cov) {
  if (weights.n_bins() != target.n_bins() || weights.n_bins() != cov.n_bins() ||
      weights.n_channels() != target.n_channels() ||
      weights.n_channels() != cov.n_channels())
    throw DimensionError("directivity_index_db: dimension mismatch");
  std::vector<double> di(weights.n_bins());
  for (std::size_t bin = 0; bin < weights.n_bins(); ++bin) {
    const Eigen::VectorXcd& h = weights.weights[bin];
    const double num = std::norm(h.dot(target.steering[bin]));
    const double den = h.dot(cov.matrices[bin] * h).real();
    if (!(den > 0.0))
      throw NumericalError("directivity_index_db: nonpositive noise power at bin " +
                           std::to_string(bin));
    di[bin] = 10.0 * std::log10(num / den);
  }
  return di;
}

SpectralFrame apply_weights(const BeamformerWeights& weights, const SpectralFrame& frame) {
  if (frame.n_bins() != weights.n_bins() || frame.n_channels() != weights.n_channels())
    throw DimensionError("apply_weights: frame is " + std::to_string(frame.n_bins()) +
                         " x " + std::to_string(frame.n_channels()) + ", weights are " +
                         std::to_string(weights.n_bins()) + " x " +
                         std::to_string(weights.n_channels()));
  SpectralFrame out;
  out.frame_index = frame.frame_index;
  out.start_time = frame.start_time;
  out.bins.resize(frame.bins.rows(), 1);
  const auto n_bins = static_cast<std::int64_t>(frame.n_bins());
  // Short per-bin dot products; only worth threading for large arrays.
#pragma omp parallel for schedule(static) if (n_bins * frame.bins.cols() > 32768)
  for (std::int64_t b = 0; b < n_bins; ++b)
    out.bins(b, 0) = weights.weights[static_cast<std::size_t>(b)].dot(
        frame.bins.row(b).transpose());
  return out;
}

}  // namespace cfocus
