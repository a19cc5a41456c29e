// Copyright 2026 The cfocus Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

// STFT analysis, weighted overlap-add synthesis and the frame-by-frame
// filtering loop built on them.

#pragma once

#include <cstddef>
#include <functional>
#include <vector>

#include "cfocus/beamformer.hpp"
#include "cfocus/spectral_frame.hpp"

namespace cfocus {

using Signal = std::vector<double>;
using Multichannel = std::vector<Signal>;  // [channel][sample]

class StftConfig {
 public:
  // Square-root periodic Hann for analysis and synthesis.
  static StftConfig sqrt_hann(std::size_t frame_len = 1024, std::size_t hop = 512,
                              double sample_rate = 48000.0);

  // Throws if frame_len is not a power of two, hop is out of (0, frame_len]
  // or window^2 does not overlap-add to a constant within 1e-6 ripple.
  StftConfig(std::size_t frame_len, std::size_t hop, double sample_rate,
             std::vector<double> window);

  std::size_t frame_len() const { return frame_len_; }
  std::size_t hop() const { return hop_; }
  std::size_t n_bins() const { return frame_len_ / 2 + 1; }
  double sample_rate() const { return sample_rate_; }
  const std::vector<double>& window() const { return window_; }
  // Constant value of sum_t window^2(n - t hop); synthesis divides by it.
  double cola_gain() const { return cola_gain_; }

  // floor((len - frame_len) / hop) + 1, or 0 for len < frame_len.
  std::size_t frame_count(std::size_t signal_len) const;
  // (count - 1) * hop + frame_len, or 0 for no frames.
  std::size_t output_length(std::size_t frame_count) const;
  double frame_start_time(std::size_t frame_index) const;
  double frame_center_time(std::size_t frame_index) const;

 private:
  std::size_t frame_len_;
  std::size_t hop_;
  double sample_rate_;
  std::vector<double> window_;
  double cola_gain_ = 1.0;
};

// Windowed one-sided spectra at hop spacing. Tail samples past the last
// full frame are dropped.
std::vector<SpectralFrame> analyze(const Multichannel& signal, const StftConfig& config);

// Inverse transform, synthesis window and overlap-add of one-channel frames.
Signal synthesize(const std::vector<SpectralFrame>& frames, const StftConfig& config);

using WeightProvider =
    std::function<const BeamformerWeights&(std::size_t frame_index, double start_time)>;

// synthesize(apply_weights(w_t, analyze(signal)_t)) computed one frame at a
// time. Frame t reads only input samples below t * hop + frame_len and the
// provider is called once per frame, in order.
Signal process_stream(const Multichannel& signal, const StftConfig& config,
                      const WeightProvider& provider);

}  // namespace cfocus
