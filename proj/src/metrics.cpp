// Copyright 2026 The cfocus Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "cfocus/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "cfocus/error.hpp"
#include "cfocus/fft.hpp"
#include "json.hpp"

namespace cfocus {

using nlohmann::json;

namespace {

double energy(std::span<const double> x) {
  double e = 0.0;
  for (double v : x) e += v * v;
  return e;
}

double capped_ratio_db(double num, double den) {
  if (num <= 0.0 && den <= 0.0) return 0.0;
  if (den <= 0.0) return kMetricCapDb;
  if (num <= 0.0) return -kMetricCapDb;
  return std::clamp(10.0 * std::log10(num / den), -kMetricCapDb, kMetricCapDb);
}

void require_same_length(std::size_t a, std::size_t b, const char* what) {
  if (a != b)
    throw DimensionError(std::string(what) + ": length mismatch (" + std::to_string(a) + " vs " +
                         std::to_string(b) + ")");
}

std::pair<std::size_t, std::size_t> sample_range(const Interval& iv, double fs, std::size_t len) {
  const auto clip = [&](double t) {
    const double s = std::round(t * fs);
    if (s <= 0.0) return std::size_t{0};
    return std::min(len, static_cast<std::size_t>(s));
  };
  return {clip(iv.start_s), clip(iv.end_s)};
}

}  // namespace

void VaSegments::normalize() {
  std::vector<Interval> in;
  for (const auto& s : segments)
    if (s.end_s > s.start_s) in.push_back(s);
  std::sort(in.begin(), in.end(),
            [](const Interval& a, const Interval& b) { return a.start_s < b.start_s; });
  std::vector<Interval> out;
  for (const auto& s : in) {
    if (!out.empty() && s.start_s <= out.back().end_s)
      out.back().end_s = std::max(out.back().end_s, s.end_s);
    else
      out.push_back(s);
  }
  segments = std::move(out);
}

double VaSegments::total_duration() const {
  double d = 0.0;
  for (const auto& s : segments) d += s.end_s - s.start_s;
  return d;
}

std::string to_string(TestCase c) {
  return c == TestCase::kNoise ? "noise" : "noise_interferer";
}

TestCase test_case_from_string(const std::string& s) {
  if (s == "noise" || s == "Noise") return TestCase::kNoise;
  if (s == "noise_interferer" || s == "noise+interferer" || s == "Noise + Interferer")
    return TestCase::kNoiseAndInterferer;
  throw RangeError("unknown test case '" + s + "' (expected noise or noise_interferer)");
}

double snr_db(std::span<const double> signal_component, std::span<const double> residual) {
  require_same_length(signal_component.size(), residual.size(), "snr_db");
  return capped_ratio_db(energy(signal_component), energy(residual));
}

double seg_snr_db(std::span<const double> signal_component, std::span<const double> residual,
                  const VaSegments& active, double sample_rate, double frame_s) {
  require_same_length(signal_component.size(), residual.size(), "seg_snr_db");
  if (!(frame_s > 0.0) || !(sample_rate > 0.0))
    throw RangeError("seg_snr_db: frame length and sample rate must be positive");
  const auto frame = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(frame_s * sample_rate)));
  double sum = 0.0;
  std::size_t count = 0;
  for (const auto& iv : active.segments) {
    const auto [a, b] = sample_range(iv, sample_rate, signal_component.size());
    for (std::size_t start = a; start < b; start += frame) {
      const std::size_t n = std::min(frame, b - start);
      if (2 * n < frame) break;
      const double es = energy(signal_component.subspan(start, n));
      if (es <= 0.0) continue;
      const double er = energy(residual.subspan(start, n));
      const double v = er <= 0.0 ? kSegSnrCeilDb : 10.0 * std::log10(es / er);
      sum += std::clamp(v, kSegSnrFloorDb, kSegSnrCeilDb);
      ++count;
    }
  }
  if (count == 0) throw UndefinedMetricError("seg_snr_db: no active frames");
  return sum / static_cast<double>(count);
}

double si_sdr_db(std::span<const double> estimate, std::span<const double> reference) {
  require_same_length(estimate.size(), reference.size(), "si_sdr_db");
  const double ref_energy = energy(reference);
  if (!(ref_energy > 0.0)) throw UndefinedMetricError("si_sdr_db: reference has zero energy");
  double dot = 0.0;
  for (std::size_t i = 0; i < estimate.size(); ++i) dot += estimate[i] * reference[i];
  const double alpha = dot / ref_energy;
  double target = 0.0, noise = 0.0;
  for (std::size_t i = 0; i < estimate.size(); ++i) {
    const double t = alpha * reference[i];
    const double e = estimate[i] - t;
    target += t * t;
    noise += e * e;
  }
  return capped_ratio_db(target, noise);
}

// ---------------------------------------------------------------------------
// Interval algebra on normalized lists.

std::vector<Interval> intersect(const std::vector<Interval>& a, const std::vector<Interval>& b) {
  std::vector<Interval> out;
  std::size_t i = 0, j = 0;
  while (i < a.size() && j < b.size()) {
    const double lo = std::max(a[i].start_s, b[j].start_s);
    const double hi = std::min(a[i].end_s, b[j].end_s);
    if (lo < hi) out.push_back({lo, hi});
    if (a[i].end_s < b[j].end_s) ++i; else ++j;
  }
  return out;
}

std::vector<Interval> subtract(const std::vector<Interval>& a, const std::vector<Interval>& b) {
  std::vector<Interval> out;
  std::size_t j = 0;
  for (const auto& iv : a) {
    double cur = iv.start_s;
    while (j < b.size() && b[j].end_s <= cur) ++j;
    std::size_t k = j;
    while (k < b.size() && b[k].start_s < iv.end_s) {
      if (b[k].start_s > cur) out.push_back({cur, b[k].start_s});
      cur = std::max(cur, b[k].end_s);
      if (cur >= iv.end_s) break;
      ++k;
    }
    if (cur < iv.end_s) out.push_back({cur, iv.end_s});
  }
  return out;
}

std::vector<Interval> unite(const std::vector<Interval>& a, const std::vector<Interval>& b) {
  VaSegments merged;
  merged.segments = a;
  merged.segments.insert(merged.segments.end(), b.begin(), b.end());
  merged.normalize();
  return merged.segments;
}

VaSegments select_segments(const VaTable& va, const std::string& target_id,
                           const std::string& wearer_id, TestCase test_case) {
  auto target = va.find(target_id);
  if (target == va.end())
    throw RangeError("select_segments: unknown target participant '" + target_id + "'");
  VaSegments base = target->second;
  base.normalize();
  std::vector<Interval> excluded;
  for (const auto& [id, seg] : va) {
    if (id == target_id) continue;
    if (id == wearer_id || test_case == TestCase::kNoise) {
      VaSegments s = seg;
      s.normalize();
      excluded = unite(excluded, s.segments);
    }
  }
  VaSegments out;
  out.participant_id = target_id;
  out.segments = subtract(base.segments, excluded);
  // The wearer may be the target itself; then nothing is left.
  if (wearer_id == target_id) out.segments.clear();
  out.normalize();
  return out;
}

// ---------------------------------------------------------------------------

std::int64_t gcc_phat_delay(std::span<const double> x, std::span<const double> y,
                            std::int64_t max_lag) {
  if (max_lag < 1) throw RangeError("gcc_phat_delay: max_lag must be >= 1");
  const auto need = static_cast<std::size_t>(2 * max_lag);
  if (x.size() < need || y.size() < need)
    throw DimensionError("gcc_phat_delay: inputs shorter than 2 * max_lag");
  std::size_t nfft = 2;
  while (nfft < x.size() + y.size()) nfft *= 2;
  const RealFft& fft = shared_fft(nfft);
  std::vector<double> buf(nfft, 0.0);
  std::vector<cplx> fx(fft.n_bins()), fy(fft.n_bins());
  std::copy(x.begin(), x.end(), buf.begin());
  fft.forward(buf, fx);
  std::fill(buf.begin(), buf.end(), 0.0);
  std::copy(y.begin(), y.end(), buf.begin());
  fft.forward(buf, fy);
  bool any = false;
  for (std::size_t k = 0; k < fx.size(); ++k) {
    const cplx g = std::conj(fx[k]) * fy[k];
    const double mag = std::abs(g);
    if (mag < 1e-12) {
      fx[k] = 0.0;
    } else {
      fx[k] = g / mag;
      any = true;
    }
  }
  if (!any) throw NumericalError("gcc_phat_delay: degenerate (all-zero) inputs");
  fft.inverse(fx, buf);
  const auto n = static_cast<std::int64_t>(nfft);
  std::int64_t best_lag = 0;
  double best = -1.0;
  for (std::int64_t lag = -max_lag; lag <= max_lag; ++lag) {
    const double v = std::abs(buf[static_cast<std::size_t>((lag + n) % n)]);
    if (v > best) {
      best = v;
      best_lag = lag;
    }
  }
  return best_lag;
}

namespace {
std::vector<double> shifted(std::span<const double> x, std::int64_t shift, std::size_t len) {
  std::vector<double> out(len, 0.0);
  for (std::size_t n = 0; n < len; ++n) {
    const std::int64_t src = static_cast<std::int64_t>(n) + shift;
    if (src >= 0 && src < static_cast<std::int64_t>(x.size()))
      out[n] = x[static_cast<std::size_t>(src)];
  }
  return out;
}
}  // namespace

std::vector<double> align_to_reference(std::span<const double> x, std::span<const double> ref,
                                       std::int64_t coarse_offset, std::int64_t max_lag,
                                       std::int64_t* total_shift) {
  const std::vector<double> coarse = shifted(x, coarse_offset, ref.size());
  const std::int64_t lag = gcc_phat_delay(ref, coarse, max_lag);
  const std::int64_t total = coarse_offset + lag;
  if (total_shift) *total_shift = total;
  return shifted(x, total, ref.size());
}

std::vector<double> gather_segments(std::span<const double> x, const VaSegments& segments,
                                    double sample_rate) {
  std::vector<double> out;
  for (const auto& iv : segments.segments) {
    const auto [a, b] = sample_range(iv, sample_rate, x.size());
    out.insert(out.end(), x.begin() + static_cast<std::ptrdiff_t>(a),
               x.begin() + static_cast<std::ptrdiff_t>(b));
  }
  return out;
}

// ---------------------------------------------------------------------------

VaTable parse_va_json(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw LoadError(std::string("VA file: malformed JSON: ") + e.what());
  }
  if (!doc.is_array()) throw LoadError("VA file: top level must be an array");
  VaTable va;
  for (std::size_t i = 0; i < doc.size(); ++i) {
    const json& e = doc[i];
    const std::string where = "VA file entry " + std::to_string(i);
    if (!e.is_object() || !e.contains("participant_id") || !e.contains("start_s") ||
        !e.contains("end_s"))
      throw LoadError(where + ": expected {participant_id, start_s, end_s}");
    if (!e["start_s"].is_number() || !e["end_s"].is_number())
      throw LoadError(where + ": start_s/end_s must be numbers");
    const std::string id =
        e["participant_id"].is_string() ? e["participant_id"].get<std::string>()
                                        : e["participant_id"].dump();
    const double a = e["start_s"].get<double>();
    const double b = e["end_s"].get<double>();
    if (!(a < b) || !std::isfinite(a) || !std::isfinite(b))
      throw LoadError(where + ": requires finite start_s < end_s");
    VaSegments& seg = va[id];
    seg.participant_id = id;
    seg.segments.push_back({a, b});
  }
  for (auto& [_, seg] : va) seg.normalize();
  return va;
}

VaTable load_va_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw LoadError("VA file: cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_va_json(ss.str());
}

std::string format_va_json(const VaTable& va) {
  json doc = json::array();
  for (const auto& [id, seg] : va)
    for (const auto& iv : seg.segments)
      doc.push_back({{"participant_id", id}, {"start_s", iv.start_s}, {"end_s", iv.end_s}});
  return doc.dump(2);
}

}  // namespace cfocus
