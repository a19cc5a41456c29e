// Copyright 2026 The cfocus Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <cstdint>
#include <vector>

#include "cfocus/simscene.hpp"

namespace cfocus::detail {

// Frame-level renderer shared by the parallel and serial diffuse-noise
// drivers. Source samples come from BlockEngine, so frames can be rendered
// in any order.
class DiffuseRenderer {
 public:
  struct Scratch {
    std::vector<double> source;  // [wave][sample] of the last rendered frame
    std::size_t source_frame = static_cast<std::size_t>(-1);
    std::vector<double> time;
    std::vector<cplx> spec;
    std::vector<cplx> accum;
  };

  DiffuseRenderer(const ArrayGeometry& geometry, double duration_s, double sample_rate,
                  std::size_t n_plane_waves, std::uint64_t seed, const SimulationOptions& options);

  std::size_t n_channels() const { return n_channels_; }
  std::size_t length() const { return length_; }
  std::size_t n_frames() const { return n_frames_; }
  const StftConfig& config() const { return config_; }

  // Adds frame t's windowed contribution into out (sized n_channels x length).
  // Rendering frames in increasing order with one scratch reuses the source
  // samples shared with the previous frame.
  void render_frame(std::size_t t, Scratch& scratch, Multichannel& out) const;
  void normalize(Multichannel& out) const;

 private:
  void source_block(std::size_t wave, std::size_t block, double* out) const;

  StftConfig config_;
  std::uint64_t seed_;
  std::size_t n_channels_ = 0;
  std::size_t n_waves_ = 0;
  std::size_t length_ = 0;
  std::size_t block_ = 1;
  std::int64_t lead_ = 0;
  std::size_t n_frames_ = 0;
  std::vector<cplx> phase_;  // [wave][channel][bin]
};

}  // namespace cfocus::detail
