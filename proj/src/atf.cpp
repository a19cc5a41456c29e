// Copyright 2026 The cfocus Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "cfocus/atf.hpp"

#include <Eigen/Eigenvalues>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

#include "cfocus/error.hpp"
#include "json.hpp"

namespace cfocus {

using nlohmann::json;

Direction Direction::from_angles(double azimuth_rad, double inclination_rad) {
  if (!std::isfinite(azimuth_rad) || !std::isfinite(inclination_rad))
    throw NumericalError("Direction: non-finite angle");
  constexpr double kPi = std::numbers::pi;
  double az = azimuth_rad;
  if (az < -kPi || az >= kPi) {
    az = std::fmod(az + kPi, 2.0 * kPi);
    if (az < 0.0) az += 2.0 * kPi;
    az -= kPi;
    if (az >= kPi) az = -kPi;
  }
  double incl = std::clamp(inclination_rad, 0.0, kPi);
  if (std::sin(incl) < 1e-9) az = 0.0;
  return {az, incl};
}

Direction Direction::from_vector(const Eigen::Vector3d& v) {
  const double norm = v.norm();
  if (!(norm > 0.0)) throw NumericalError("Direction: zero-length vector");
  const double z = std::clamp(v.z() / norm, -1.0, 1.0);
  return from_angles(std::atan2(v.y(), v.x()), std::acos(z));
}

Eigen::Vector3d Direction::unit_vector() const {
  const double s = std::sin(inclination_rad);
  return {s * std::cos(azimuth_rad), s * std::sin(azimuth_rad),
          std::cos(inclination_rad)};
}

double angular_distance(const Direction& a, const Direction& b) {
  const Eigen::Vector3d u = a.unit_vector();
  const Eigen::Vector3d v = b.unit_vector();
  return std::atan2(u.cross(v).norm(), u.dot(v));
}

AtfSet::AtfSet(std::size_t n_channels, double sample_rate, std::size_t n_bins,
               std::vector<Direction> directions, std::vector<cplx> responses)
    : n_channels_(n_channels),
      sample_rate_(sample_rate),
      n_bins_(n_bins),
      directions_(std::move(directions)),
      responses_(std::move(responses)) {
  if (n_channels_ < 1) throw DimensionError("AtfSet: n_channels must be >= 1");
  if (n_bins_ < 2) throw DimensionError("AtfSet: n_bins must be >= 2");
  if (directions_.empty())
    throw DimensionError("AtfSet: at least one direction required");
  if (!(sample_rate_ > 0.0) || !std::isfinite(sample_rate_))
    throw DimensionError("AtfSet: sample_rate must be positive");
  if (responses_.size() != directions_.size() * n_bins_ * n_channels_)
    throw DimensionError("AtfSet: responses size does not match " +
                         std::to_string(directions_.size()) + " x " +
                         std::to_string(n_bins_) + " x " +
                         std::to_string(n_channels_));
  for (std::size_t i = 0; i < responses_.size(); ++i) {
    if (!std::isfinite(responses_[i].real()) ||
        !std::isfinite(responses_[i].imag()))
      throw NumericalError("AtfSet: non-finite response at flat index " +
                           std::to_string(i));
  }
}

double AtfSet::bin_frequency(std::size_t bin) const {
  return static_cast<double>(bin) * sample_rate_ /
         static_cast<double>(fft_size());
}

// ---------------------------------------------------------------------------
// File format

namespace {

void put_le_f32(std::string& out, float v) {
  auto bits = std::bit_cast<std::uint32_t>(v);
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((bits >> (8 * i)) & 0xFF));
}

float get_le_f32(const unsigned char* p) {
  std::uint32_t bits = 0;
  for (int i = 0; i < 4; ++i) bits |= static_cast<std::uint32_t>(p[i]) << (8 * i);
  return std::bit_cast<float>(bits);
}

const json& require(const json& obj, const char* key) {
  auto it = obj.find(key);
  if (it == obj.end())
    throw LoadError(std::string("ATF header: missing field '") + key + "'");
  return *it;
}

std::size_t require_count(const json& obj, const char* key) {
  const json& v = require(obj, key);
  if (!v.is_number_integer() || v.get<long long>() < 0)
    throw LoadError(std::string("ATF header: field '") + key +
                    "' must be a nonnegative integer");
  return v.get<std::size_t>();
}

double require_number(const json& obj, const char* key, const std::string& where) {
  const json& v = require(obj, key);
  if (!v.is_number())
    throw LoadError("ATF header: field '" + where + key + "' must be a number");
  const double d = v.get<double>();
  if (!std::isfinite(d))
    throw LoadError("ATF header: field '" + where + key + "' is not finite");
  return d;
}

}  // namespace

AtfSet parse_atf_set(const std::string& bytes) {
  const auto nul = bytes.find('\0');
  if (nul == std::string::npos)
    throw LoadError("ATF file: missing NUL separator after header");
  json header;
  try {
    header = json::parse(bytes.substr(0, nul));
  } catch (const json::exception& e) {
    throw LoadError(std::string("ATF header: malformed JSON: ") + e.what());
  }
  if (!header.is_object()) throw LoadError("ATF header: not a JSON object");
  static const std::set<std::string> kKeys = {
      "n_channels", "sample_rate", "n_bins", "n_directions", "directions"};
  for (const auto& [key, _] : header.items())
    if (!kKeys.count(key))
      throw LoadError("ATF header: unknown field '" + key + "'");

  const std::size_t n_channels = require_count(header, "n_channels");
  const std::size_t n_bins = require_count(header, "n_bins");
  const std::size_t n_dirs = require_count(header, "n_directions");
  const double fs = require_number(header, "sample_rate", "");
  if (n_channels < 1) throw LoadError("ATF header: field 'n_channels' must be >= 1");
  if (n_bins < 2) throw LoadError("ATF header: field 'n_bins' must be >= 2");
  if (n_dirs < 1) throw LoadError("ATF header: field 'n_directions' must be >= 1");
  if (!(fs > 0.0)) throw LoadError("ATF header: field 'sample_rate' must be positive");

  const json& dirs = require(header, "directions");
  if (!dirs.is_array()) throw LoadError("ATF header: field 'directions' must be an array");
  if (dirs.size() != n_dirs)
    throw LoadError("ATF header: dimension mismatch: n_directions=" +
                    std::to_string(n_dirs) + " but 'directions' has " +
                    std::to_string(dirs.size()) + " entries");
  std::vector<Direction> directions;
  directions.reserve(n_dirs);
  for (std::size_t i = 0; i < n_dirs; ++i) {
    const json& d = dirs[i];
    const std::string where = "directions[" + std::to_string(i) + "].";
    if (!d.is_object()) throw LoadError("ATF header: '" + where + "' must be an object");
    directions.push_back(Direction::from_angles(
        require_number(d, "azimuth_rad", where),
        require_number(d, "inclination_rad", where)));
  }

  const std::size_t n_values = n_dirs * n_bins * n_channels;
  const std::size_t blob_size = bytes.size() - nul - 1;
  if (blob_size != n_values * 8)
    throw LoadError("ATF file: dimension mismatch: payload has " +
                    std::to_string(blob_size) + " bytes, header implies " +
                    std::to_string(n_values * 8));
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data() + nul + 1);
  std::vector<cplx> responses(n_values);
  for (std::size_t i = 0; i < n_values; ++i) {
    const float re = get_le_f32(p + 8 * i);
    const float im = get_le_f32(p + 8 * i + 4);
    if (!std::isfinite(re) || !std::isfinite(im)) {
      const std::size_t ch = i % n_channels;
      const std::size_t bin = (i / n_channels) % n_bins;
      const std::size_t dir = i / (n_channels * n_bins);
      throw LoadError("ATF file: non-finite value in responses[" +
                      std::to_string(dir) + "][" + std::to_string(bin) + "][" +
                      std::to_string(ch) + "]");
    }
    responses[i] = {re, im};
  }
  return AtfSet(n_channels, fs, n_bins, std::move(directions), std::move(responses));
}

AtfSet load_atf_set(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw LoadError("ATF file: cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_atf_set(ss.str());
}

std::string serialize_atf_set(const AtfSet& set) {
  json header = json::object();
  header["n_channels"] = set.n_channels();
  header["sample_rate"] = set.sample_rate();
  header["n_bins"] = set.n_bins();
  header["n_directions"] = set.n_directions();
  json dirs = json::array();
  for (const auto& d : set.directions())
    dirs.push_back({{"azimuth_rad", d.azimuth_rad},
                    {"inclination_rad", d.inclination_rad}});
  header["directions"] = std::move(dirs);
  std::string out = header.dump();
  out.push_back('\0');
  out.reserve(out.size() + set.responses().size() * 8);
  for (const cplx& v : set.responses()) {
    put_le_f32(out, static_cast<float>(v.real()));
    put_le_f32(out, static_cast<float>(v.imag()));
  }
  return out;
}

void write_atf_set(const AtfSet& set, const std::filesystem::path& path) {
  const std::string bytes = serialize_atf_set(set);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("ATF file: cannot open " + path.string() + " for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error("ATF file: write failed for " + path.string());
}

// ---------------------------------------------------------------------------

std::size_t nearest_direction(const AtfSet& set, const Direction& query) {
  if (set.n_directions() == 0) throw RangeError("nearest_direction: empty set");
  const Eigen::Vector3d q = query.unit_vector();
  std::size_t best = 0;
  double best_angle = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < set.n_directions(); ++i) {
    const Eigen::Vector3d u = set.directions()[i].unit_vector();
    const double angle = std::atan2(q.cross(u).norm(), q.dot(u));
    // Near-equal angles count as a tie so the lower index is kept.
    if (angle < best_angle - 1e-12) {
      best_angle = angle;
      best = i;
    }
  }
  return best;
}

IsotropicCovariance isotropic_covariance(const AtfSet& set) {
  const auto n_bins = static_cast<std::int64_t>(set.n_bins());
  const auto n = static_cast<Eigen::Index>(set.n_channels());
  const double scale = 1.0 / static_cast<double>(set.n_directions());
  IsotropicCovariance cov;
  cov.matrices.assign(set.n_bins(), Eigen::MatrixXcd::Zero(n, n));
#pragma omp parallel for schedule(static)
  for (std::int64_t bin = 0; bin < n_bins; ++bin) {
    Eigen::MatrixXcd& r = cov.matrices[static_cast<std::size_t>(bin)];
    for (std::size_t dir = 0; dir < set.n_directions(); ++dir) {
      const auto d = set.response(dir, static_cast<std::size_t>(bin));
      r.noalias() += d * d.adjoint();
    }
    r *= scale;
  }
  return cov;
}

std::string check_covariance(const IsotropicCovariance& cov) {
  for (std::size_t bin = 0; bin < cov.n_bins(); ++bin) {
    const Eigen::MatrixXcd& r = cov.matrices[bin];
    const double scale = r.cwiseAbs().maxCoeff();
    const double asym = (r - r.adjoint()).cwiseAbs().maxCoeff();
    if (asym > 1e-12 * scale)
      return "bin " + std::to_string(bin) + ": not Hermitian (" +
             std::to_string(asym) + ")";
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(r, Eigen::EigenvaluesOnly);
    const double lo = es.eigenvalues().minCoeff();
    const double hi = es.eigenvalues().maxCoeff();
    if (lo < -1e-9 * std::max(hi, 0.0))
      return "bin " + std::to_string(bin) + ": not PSD (min eigenvalue " +
             std::to_string(lo) + ")";
  }
  return {};
}

}  // namespace cfocus
