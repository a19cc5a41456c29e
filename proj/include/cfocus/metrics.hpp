// Copyright 2026 The cfocus Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

// SNR-family metrics, test-case segment selection and GCC-PHAT alignment.

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace cfocus {

inline constexpr double kMetricCapDb = 100.0;
inline constexpr double kSegSnrFloorDb = -10.0;
inline constexpr double kSegSnrCeilDb = 35.0;
inline constexpr double kSegSnrFrameSeconds = 0.03;

struct Interval {
  double start_s = 0.0;
  double end_s = 0.0;  // exclusive
  bool operator==(const Interval&) const = default;
};

// Sorted, non-overlapping [start, end) intervals with start < end.
struct VaSegments {
  std::string participant_id;
  std::vector<Interval> segments;

  // Sorts and merges touching or overlapping intervals, drops empty ones.
  void normalize();
  double total_duration() const;
};

using VaTable = std::map<std::string, VaSegments>;

enum class TestCase { kNoise, kNoiseAndInterferer };

std::string to_string(TestCase c);
TestCase test_case_from_string(const std::string& s);

// 10 log10(sum s^2 / sum r^2), capped to [-100, 100] dB.
double snr_db(std::span<const double> signal_component, std::span<const double> residual);

// Mean of per-frame SNRs over the active segments. Each segment is cut into
// frames of frame_s; a trailing partial frame is kept when it spans at least
// half a frame. Per-frame values are clamped to [-10, 35] dB and frames with
// zero signal energy are skipped.
double seg_snr_db(std::span<const double> signal_component, std::span<const double> residual,
                  const VaSegments& active, double sample_rate,
                  double frame_s = kSegSnrFrameSeconds);

// Scale-invariant SDR, capped to [-100, 100] dB.
double si_sdr_db(std::span<const double> estimate, std::span<const double> reference);

// Portions of the target's activity used by a test case. The wearer's own
// activity is always removed; kNoise also removes any other talker.
VaSegments select_segments(const VaTable& va, const std::string& target_id,
                           const std::string& wearer_id, TestCase test_case);

// Interval-set helpers.
std::vector<Interval> intersect(const std::vector<Interval>& a, const std::vector<Interval>& b);
std::vector<Interval> subtract(const std::vector<Interval>& a, const std::vector<Interval>& b);
std::vector<Interval> unite(const std::vector<Interval>& a, const std::vector<Interval>& b);

// Lag in [-max_lag, max_lag] of the absolute peak of the PHAT-weighted
// cross-correlation; positive means y lags x.
std::int64_t gcc_phat_delay(std::span<const double> x, std::span<const double> y,
                            std::int64_t max_lag);

// out[n] = x[n + s] (zero outside x), with s = coarse_offset + the GCC-PHAT
// refinement against ref. coarse_offset is the number of samples by which x
// lags ref. Output has ref's length.
std::vector<double> align_to_reference(std::span<const double> x, std::span<const double> ref,
                                       std::int64_t coarse_offset, std::int64_t max_lag,
                                       std::int64_t* total_shift = nullptr);

// Cuts the samples covered by segments and concatenates them.
std::vector<double> gather_segments(std::span<const double> x, const VaSegments& segments,
                                    double sample_rate);

// JSON array of {participant_id, start_s, end_s}.
VaTable parse_va_json(const std::string& text);
VaTable load_va_file(const std::filesystem::path& path);
std::string format_va_json(const VaTable& va);

}  // namespace cfocus
