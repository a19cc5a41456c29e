// Copyright 2026 The cfocus Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

// Free-field scene simulator: plane-wave ATF sets, spherically isotropic
// noise, moving sources, and scenes with separated stems.

#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "cfocus/atf.hpp"
#include "cfocus/metrics.hpp"
#include "cfocus/wola.hpp"

namespace cfocus {

struct ArrayGeometry {
  std::vector<Eigen::Vector3d> mic_positions;  // device frame, meters

  std::size_t n_channels() const { return mic_positions.size(); }
  // At least one mic, pairwise distinct positions.
  void validate() const;

  // Six microphones spread over a pair of glasses: two at the front of
  // each temple, one on each arm, one on the nose bridge and one at the
  // rear of the left arm. Channel 0 is the front-left temple.
  static ArrayGeometry glasses6();
};

// Near-uniform spherical grid (Fibonacci lattice).
std::vector<Direction> fibonacci_directions(std::size_t n);

// Plane-wave response exp(-j omega tau), tau = -(r . u) / c, for every mic.
Eigen::VectorXcd free_field_response(const ArrayGeometry& geometry, const Direction& direction,
                                     double frequency_hz, double speed_of_sound = kSpeedOfSound);

AtfSet free_field_atf_set(const ArrayGeometry& geometry, const std::vector<Direction>& directions,
                          std::size_t n_bins, double sample_rate,
                          double speed_of_sound = kSpeedOfSound);
AtfSet free_field_atf_set(const ArrayGeometry& geometry, std::size_t n_directions,
                          std::size_t n_bins, double sample_rate,
                          double speed_of_sound = kSpeedOfSound);

struct SimulationOptions {
  std::size_t frame_len = 1024;
  std::size_t hop = 512;
  double speed_of_sound = kSpeedOfSound;

  StftConfig stft(double sample_rate) const { return StftConfig::sqrt_hann(frame_len, hop, sample_rate); }
};

// Sum of independent white-noise plane waves from a Fibonacci grid, each
// delayed per mic in the STFT domain, scaled to unit mean channel power.
// Returns exactly round(duration_s * sample_rate) samples per channel.
// Deterministic for a given seed regardless of thread count.
Multichannel diffuse_noise(const ArrayGeometry& geometry, double duration_s, double sample_rate,
                           std::size_t n_plane_waves, std::uint64_t seed,
                           const SimulationOptions& options = {});

using DirectionTrack = std::vector<std::pair<double, Direction>>;  // (time_s, direction)

// Renders a mono source through the free-field response of the direction
// held at each frame center. Output length is the WOLA-synthesizable
// length of the source.
Multichannel render_moving_source(const Signal& source, const DirectionTrack& track,
                                  const ArrayGeometry& geometry, double sample_rate,
                                  const SimulationOptions& options = {});

struct SceneRender {
  double sample_rate = 0.0;
  Multichannel mixture;
  std::map<std::string, Multichannel> stems;  // "target", "noise", optional "interferer"
};

struct SceneSpec {
  Signal target;
  DirectionTrack target_track;
  std::optional<Signal> interferer;
  DirectionTrack interferer_track;
  ArrayGeometry geometry;
  double sample_rate = 48000.0;
  double snr_db = 0.0;               // target-to-noise at channel 0
  double interferer_gain_db = 0.0;   // interferer-to-target at channel 0
  std::size_t n_plane_waves = 512;
  std::uint64_t seed = 0;
  SimulationOptions options;
};

SceneRender build_scene(const SceneSpec& spec);

// Band-shaped noise with talk-spurt gating: a simple speech stand-in with
// known voice activity. Spurts last 1-3 s, pauses 0.3-1 s.
struct SpeechLike {
  Signal samples;
  VaSegments activity;
};
SpeechLike speech_like_source(double duration_s, double sample_rate, std::uint64_t seed,
                              const std::string& participant_id = "target",
                              bool gated = true);

// Counter-based engine: splitmix64 over (seed, stream, block) so any block
// of any stream can be generated independently.
class BlockEngine {
 public:
  using result_type = std::uint64_t;
  BlockEngine(std::uint64_t seed, std::uint64_t stream, std::uint64_t block);
  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return ~result_type{0}; }
  result_type operator()();

 private:
  std::uint64_t state_;
};

namespace serial {
Multichannel diffuse_noise(const ArrayGeometry& geometry, double duration_s, double sample_rate,
                           std::size_t n_plane_waves, std::uint64_t seed,
                           const SimulationOptions& options = {});
}  // namespace serial

}  // namespace cfocus
