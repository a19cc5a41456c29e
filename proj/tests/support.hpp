// Copyright 2026 The cfocus Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

// Random generators and small numeric helpers shared by the unit and
// acceptance tests.

#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>
#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <filesystem>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "cfocus/atf.hpp"
#include "cfocus/wola.hpp"

namespace cfocus::testing {

using Rng = std::mt19937_64;

inline double uniform(Rng& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

inline double gaussian(Rng& rng) { return std::normal_distribution<double>(0.0, 1.0)(rng); }

inline cplx random_complex(Rng& rng) { return {gaussian(rng), gaussian(rng)}; }

inline Eigen::VectorXcd random_vector(Rng& rng, std::size_t n) {
  Eigen::VectorXcd v(static_cast<Eigen::Index>(n));
  for (auto& x : v) x = random_complex(rng);
  return v;
}

inline Eigen::Vector3d random_unit(Rng& rng) {
  Eigen::Vector3d v(gaussian(rng), gaussian(rng), gaussian(rng));
  return v.normalized();
}

inline Direction random_direction(Rng& rng) { return Direction::from_vector(random_unit(rng)); }

inline Eigen::Quaterniond random_rotation(Rng& rng) {
  Eigen::Quaterniond q(gaussian(rng), gaussian(rng), gaussian(rng), gaussian(rng));
  return q.normalized();
}

// Random directions and float32-representable complex responses.
// Gaussian value rounded to a 2^-20 grid and clamped to (-8, 8), so it is
// exactly representable as float32.
inline double float_exact_gaussian(Rng& rng) {
  return std::clamp(std::round(gaussian(rng) * 1048576.0), -8388607.0, 8388607.0) / 1048576.0;
}

inline AtfSet random_atf_set(Rng& rng, std::size_t n_channels, std::size_t n_directions,
                             std::size_t n_bins, double sample_rate = 48000.0) {
  std::vector<Direction> dirs;
  for (std::size_t i = 0; i < n_directions; ++i) dirs.push_back(random_direction(rng));
  std::vector<cplx> resp(n_directions * n_bins * n_channels);
  for (auto& r : resp)
    r = cplx(float_exact_gaussian(rng), float_exact_gaussian(rng));
  return AtfSet(n_channels, sample_rate, n_bins, std::move(dirs), std::move(resp));
}

inline Signal white_noise(Rng& rng, std::size_t n) {
  Signal x(n);
  for (double& v : x) v = gaussian(rng);
  return x;
}

inline Multichannel white_noise(Rng& rng, std::size_t channels, std::size_t n) {
  Multichannel x(channels);
  for (auto& c : x) c = white_noise(rng, n);
  return x;
}

inline double energy(const Signal& x, std::size_t begin, std::size_t end) {
  double e = 0.0;
  for (std::size_t i = begin; i < end; ++i) e += x[i] * x[i];
  return e;
}

// 10 log10 of error energy relative to reference energy over [begin, end).
inline double error_db(const Signal& x, const Signal& ref, std::size_t begin, std::size_t end) {
  double e = 0.0, r = 0.0;
  for (std::size_t i = begin; i < end; ++i) {
    e += (x[i] - ref[i]) * (x[i] - ref[i]);
    r += ref[i] * ref[i];
  }
  if (e == 0.0) return -std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(e / r);
}

inline double db(double power_ratio) { return 10.0 * std::log10(power_ratio); }

inline std::filesystem::path temp_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("cfocus_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace cfocus::testing
