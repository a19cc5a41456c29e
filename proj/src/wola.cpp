// Copyright 2026 The cfocus Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "cfocus/wola.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <string>

#include "cfocus/error.hpp"
#include "cfocus/fft.hpp"

namespace cfocus {

StftConfig StftConfig::sqrt_hann(std::size_t frame_len, std::size_t hop,
                                 double sample_rate) {
  std::vector<double> window(frame_len);
  for (std::size_t n = 0; n < frame_len; ++n)
    window[n] = std::sqrt(0.5 - 0.5 * std::cos(2.0 * std::numbers::pi *
                                               static_cast<double>(n) /
                                               static_cast<double>(frame_len)));
  return StftConfig(frame_len, hop, sample_rate, std::move(window));
}

StftConfig::StftConfig(std::size_t frame_len, std::size_t hop, double sample_rate,
                       std::vector<double> window)
    : frame_len_(frame_len), hop_(hop), sample_rate_(sample_rate), window_(std::move(window)) {
  if (frame_len_ < 2 || (frame_len_ & (frame_len_ - 1)) != 0)
    throw RangeError("StftConfig: frame_len must be a power of two >= 2");
  if (hop_ == 0 || hop_ > frame_len_)
    throw RangeError("StftConfig: hop must be in (0, frame_len]");
  if (!(sample_rate_ > 0.0)) throw RangeError("StftConfig: sample_rate must be positive");
  if (window_.size() != frame_len_)
    throw DimensionError("StftConfig: window length differs from frame_len");

  std::vector<double> acc(hop_, 0.0);
  for (std::size_t n = 0; n < frame_len_; ++n) acc[n % hop_] += window_[n] * window_[n];
  const auto [lo, hi] = std::minmax_element(acc.begin(), acc.end());
  double mean = 0.0;
  for (double a : acc) mean += a;
  mean /= static_cast<double>(hop_);
  if (!(mean > 0.0) || (*hi - *lo) > 1e-6 * mean)
    throw RangeError("StftConfig: squared window violates constant overlap-add at hop " +
                     std::to_string(hop_));
  cola_gain_ = mean;
}

std::size_t StftConfig::frame_count(std::size_t signal_len) const {
  if (signal_len < frame_len_) return 0;
  return (signal_len - frame_len_) / hop_ + 1;
}

std::size_t StftConfig::output_length(std::size_t frame_count) const {
  return frame_count == 0 ? 0 : (frame_count - 1) * hop_ + frame_len_;
}

double StftConfig::frame_start_time(std::size_t frame_index) const {
  return static_cast<double>(frame_index * hop_) / sample_rate_;
}

double StftConfig::frame_center_time(std::size_t frame_index) const {
  return frame_start_time(frame_index) + static_cast<double>(frame_len_) / 2.0 / sample_rate_;
}

namespace {

std::size_t common_length(const Multichannel& signal) {
  if (signal.empty()) throw DimensionError("signal has no channels");
  for (const auto& ch : signal)
    if (ch.size() != signal[0].size())
      throw DimensionError("signal channels differ in length");
  return signal[0].size();
}

void analyze_frame(const Multichannel& signal, const StftConfig& config, const RealFft& fft,
                   std::size_t t, SpectralFrame& frame, std::vector<double>& buf,
                   std::vector<cplx>& spec) {
  const std::size_t start = t * config.hop();
  const auto& w = config.window();
  frame.frame_index = t;
  frame.start_time = config.frame_start_time(t);
  frame.bins.resize(static_cast<Eigen::Index>(config.n_bins()),
                    static_cast<Eigen::Index>(signal.size()));
  for (std::size_t ch = 0; ch < signal.size(); ++ch) {
    const double* x = signal[ch].data() + start;
    for (std::size_t n = 0; n < config.frame_len(); ++n) buf[n] = w[n] * x[n];
    fft.forward(buf, spec);
    for (std::size_t k = 0; k < spec.size(); ++k)
      frame.bins(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(ch)) = spec[k];
  }
}

// Inverse transform of a one-channel frame followed by the synthesis window
// and the overlap-add normalization.
void synthesize_frame(const SpectralFrame& frame, const StftConfig& config, const RealFft& fft,
                      std::vector<cplx>& spec, std::vector<double>& out) {
  for (std::size_t k = 0; k < spec.size(); ++k)
    spec[k] = frame.bins(static_cast<Eigen::Index>(k), 0);
  fft.inverse(spec, out);
  const auto& w = config.window();
  const double norm = 1.0 / config.cola_gain();
  for (std::size_t n = 0; n < out.size(); ++n) out[n] *= w[n] * norm;
}

}  // namespace

std::vector<SpectralFrame> analyze(const Multichannel& signal, const StftConfig& config) {
  const std::size_t len = common_length(signal);
  const std::size_t count = config.frame_count(len);
  std::vector<SpectralFrame> frames(count);
  const RealFft& fft = shared_fft(config.frame_len());
#pragma omp parallel
  {
    std::vector<double> buf(config.frame_len());
    std::vector<cplx> spec(config.n_bins());
#pragma omp for schedule(static)
    for (std::int64_t t = 0; t < static_cast<std::int64_t>(count); ++t)
      analyze_frame(signal, config, fft, static_cast<std::size_t>(t),
                    frames[static_cast<std::size_t>(t)], buf, spec);
  }
  return frames;
}

Signal synthesize(const std::vector<SpectralFrame>& frames, const StftConfig& config) {
  for (const auto& f : frames)
    if (f.n_bins() != config.n_bins() || f.n_channels() != 1)
      throw DimensionError("synthesize: frame " + std::to_string(f.frame_index) + " is " +
                           std::to_string(f.n_bins()) + " x " + std::to_string(f.n_channels()) +
                           ", expected " + std::to_string(config.n_bins()) + " x 1");
  const std::size_t count = frames.size();
  Signal out(config.output_length(count), 0.0);
  if (count == 0) return out;
  const RealFft& fft = shared_fft(config.frame_len());
  std::vector<double> time(count * config.frame_len());
#pragma omp parallel
  {
    std::vector<cplx> spec(config.n_bins());
    std::vector<double> buf(config.frame_len());
#pragma omp for schedule(static)
    for (std::int64_t t = 0; t < static_cast<std::int64_t>(count); ++t) {
      synthesize_frame(frames[static_cast<std::size_t>(t)], config, fft, spec, buf);
      std::copy(buf.begin(), buf.end(),
                time.begin() + static_cast<std::ptrdiff_t>(t) *
                                   static_cast<std::ptrdiff_t>(config.frame_len()));
    }
  }
  for (std::size_t t = 0; t < count; ++t) {
    const double* src = time.data() + t * config.frame_len();
    double* dst = out.data() + t * config.hop();
    for (std::size_t n = 0; n < config.frame_len(); ++n) dst[n] += src[n];
  }
  return out;
}

Signal process_stream(const Multichannel& signal, const StftConfig& config,
                      const WeightProvider& provider) {
  const std::size_t len = common_length(signal);
  const std::size_t count = config.frame_count(len);
  Signal out(config.output_length(count), 0.0);
  const RealFft& fft = shared_fft(config.frame_len());
  SpectralFrame frame;
  std::vector<double> buf(config.frame_len());
  std::vector<cplx> spec(config.n_bins());
  for (std::size_t t = 0; t < count; ++t) {
    analyze_frame(signal, config, fft, t, frame, buf, spec);
    const BeamformerWeights& weights = provider(t, frame.start_time);
    if (weights.n_bins() != frame.n_bins() || weights.n_channels() != frame.n_channels())
      throw DimensionError("process_stream: weights at frame " + std::to_string(t) + " are " +
                           std::to_string(weights.n_bins()) + " x " +
                           std::to_string(weights.n_channels()) + ", expected " +
                           std::to_string(frame.n_bins()) + " x " +
                           std::to_string(frame.n_channels()));
    const SpectralFrame mono = apply_weights(weights, frame);
    synthesize_frame(mono, config, fft, spec, buf);
    double* dst = out.data() + t * config.hop();
    for (std::size_t n = 0; n < config.frame_len(); ++n) dst[n] += buf[n];
  }
  return out;
}

}  // namespace cfocus
