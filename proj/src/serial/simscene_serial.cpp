// Copyright 2026 The cfocus Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "../simscene_detail.hpp"

namespace cfocus::serial {

Multichannel diffuse_noise(const ArrayGeometry& geometry, double duration_s, double sample_rate,
                           std::size_t n_plane_waves, std::uint64_t seed,
                           const SimulationOptions& options) {
  const detail::DiffuseRenderer r(geometry, duration_s, sample_rate, n_plane_waves, seed, options);
  Multichannel out(r.n_channels(), Signal(r.length(), 0.0));
  detail::DiffuseRenderer::Scratch scratch;
  for (std::size_t t = 0; t < r.n_frames(); ++t) r.render_frame(t, scratch, out);
  r.normalize(out);
  return out;
}

}  // namespace cfocus::serial
