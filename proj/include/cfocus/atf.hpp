// Copyright 2026 The cfocus Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

// Array transfer function (ATF) sets: one complex response per direction,
// frequency bin and microphone, plus the diffuse-field covariance derived
// from them.

#pragma once

#include <Eigen/Core>
#include <array>
#include <complex>
#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

namespace cfocus {

using cplx = std::complex<double>;

inline constexpr double kSpeedOfSound = 343.0;  // m/s

// A far-field direction in the device frame (+x forward, +y left, +z up).
// Azimuth is measured counter-clockwise from +x, inclination from +z.
struct Direction {
  double azimuth_rad = 0.0;      // [-pi, pi)
  double inclination_rad = 0.0;  // [0, pi]

  // Normalizes azimuth into [-pi, pi), clamps inclination into [0, pi] and
  // zeroes the azimuth at the poles. Values already in range are kept
  // bit-exactly.
  static Direction from_angles(double azimuth_rad, double inclination_rad);
  static Direction from_vector(const Eigen::Vector3d& v);

  Eigen::Vector3d unit_vector() const;
};

// Great-circle angle between two directions, in radians.
double angular_distance(const Direction& a, const Direction& b);

class AtfSet {
 public:
  AtfSet() = default;
  // responses is indexed [direction][bin][channel], channel fastest.
  AtfSet(std::size_t n_channels, double sample_rate, std::size_t n_bins,
         std::vector<Direction> directions, std::vector<cplx> responses);

  std::size_t n_channels() const { return n_channels_; }
  std::size_t n_bins() const { return n_bins_; }
  std::size_t n_directions() const { return directions_.size(); }
  double sample_rate() const { return sample_rate_; }
  // FFT length implied by the one-sided bin count.
  std::size_t fft_size() const { return 2 * (n_bins_ - 1); }
  double bin_frequency(std::size_t bin) const;

  const std::vector<Direction>& directions() const { return directions_; }
  const std::vector<cplx>& responses() const { return responses_; }

  // Steering vector d(omega) of one direction at one bin.
  Eigen::Map<const Eigen::VectorXcd> response(std::size_t dir,
                                              std::size_t bin) const {
    return {responses_.data() + (dir * n_bins_ + bin) * n_channels_,
            static_cast<Eigen::Index>(n_channels_)};
  }
  cplx at(std::size_t dir, std::size_t bin, std::size_t ch) const {
    return responses_[(dir * n_bins_ + bin) * n_channels_ + ch];
  }

 private:
  std::size_t n_channels_ = 0;
  double sample_rate_ = 0.0;
  std::size_t n_bins_ = 0;
  std::vector<Direction> directions_;
  std::vector<cplx> responses_;
};

// Per-bin N x N Hermitian PSD matrices.
struct IsotropicCovariance {
  std::vector<Eigen::MatrixXcd> matrices;

  std::size_t n_bins() const { return matrices.size(); }
  std::size_t n_channels() const {
    return matrices.empty() ? 0 : static_cast<std::size_t>(matrices[0].rows());
  }
};

// Binary ATF file: JSON header, one NUL byte, then little-endian float32
// (re, im) pairs in [direction][bin][channel] order.
AtfSet load_atf_set(const std::filesystem::path& path);
AtfSet parse_atf_set(const std::string& bytes);
void write_atf_set(const AtfSet& set, const std::filesystem::path& path);
std::string serialize_atf_set(const AtfSet& set);

// Index of the grid direction closest to the query on the sphere; the
// lowest index wins ties.
std::size_t nearest_direction(const AtfSet& set, const Direction& query);

// Unweighted average of d d^H over all directions of the set, per bin.
// The set's directions must sample the sphere near-uniformly for this to
// approximate the diffuse-field integral. Parallel over bins.
IsotropicCovariance isotropic_covariance(const AtfSet& set);

// Checks the Hermitian and PSD invariants; returns an empty string when
// they hold, otherwise a description of the first violation.
std::string check_covariance(const IsotropicCovariance& cov);

namespace serial {
IsotropicCovariance isotropic_covariance(const AtfSet& set);
}  // namespace serial

}  // namespace cfocus
