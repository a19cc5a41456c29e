// Copyright 2026 The cfocus Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "cfocus/simscene.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "cfocus/error.hpp"
#include "cfocus/fft.hpp"
#include "simscene_detail.hpp"

namespace cfocus {

void ArrayGeometry::validate() const {
  if (mic_positions.empty()) throw DimensionError("ArrayGeometry: no microphones");
  for (std::size_t i = 0; i < mic_positions.size(); ++i) {
    if (!mic_positions[i].allFinite())
      throw NumericalError("ArrayGeometry: non-finite position for mic " + std::to_string(i));
    for (std::size_t j = 0; j < i; ++j)
      if ((mic_positions[i] - mic_positions[j]).norm() < 1e-9)
        throw RangeError("ArrayGeometry: mics " + std::to_string(j) + " and " +
                         std::to_string(i) + " coincide");
  }
}

ArrayGeometry ArrayGeometry::glasses6() {
  return {{
      {0.080, 0.070, 0.010},    // front-left temple
      {0.080, -0.070, 0.010},   // front-right temple
      {0.020, 0.075, 0.000},    // left arm
      {0.020, -0.075, 0.000},   // right arm
      {0.095, 0.000, -0.005},   // nose bridge
      {-0.060, 0.078, -0.010},  // rear of left arm
  }};
}

std::vector<Direction> fibonacci_directions(std::size_t n) {
  if (n == 0) throw RangeError("fibonacci_directions: n must be >= 1");
  const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
  std::vector<Direction> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double z = 1.0 - (2.0 * static_cast<double>(i) + 1.0) / static_cast<double>(n);
    out.push_back(Direction::from_angles(golden * static_cast<double>(i), std::acos(z)));
  }
  return out;
}

Eigen::VectorXcd free_field_response(const ArrayGeometry& geometry, const Direction& direction,
                                     double frequency_hz, double speed_of_sound) {
  const Eigen::Vector3d u = direction.unit_vector();
  const double omega = 2.0 * std::numbers::pi * frequency_hz;
  Eigen::VectorXcd d(static_cast<Eigen::Index>(geometry.n_channels()));
  for (std::size_t c = 0; c < geometry.n_channels(); ++c) {
    const double tau = -geometry.mic_positions[c].dot(u) / speed_of_sound;
    d(static_cast<Eigen::Index>(c)) = std::polar(1.0, -omega * tau);
  }
  return d;
}

AtfSet free_field_atf_set(const ArrayGeometry& geometry, const std::vector<Direction>& directions,
                          std::size_t n_bins, double sample_rate, double speed_of_sound) {
  geometry.validate();
  if (n_bins < 2) throw RangeError("free_field_atf_set: n_bins must be >= 2");
  const std::size_t n = geometry.n_channels();
  const double fft_size = 2.0 * static_cast<double>(n_bins - 1);
  std::vector<cplx> responses(directions.size() * n_bins * n);
  for (std::size_t dir = 0; dir < directions.size(); ++dir)
    for (std::size_t bin = 0; bin < n_bins; ++bin) {
      const double f = static_cast<double>(bin) * sample_rate / fft_size;
      const Eigen::VectorXcd d = free_field_response(geometry, directions[dir], f, speed_of_sound);
      std::copy(d.data(), d.data() + n, responses.begin() +
                static_cast<std::ptrdiff_t>((dir * n_bins + bin) * n));
    }
  return AtfSet(n, sample_rate, n_bins, directions, std::move(responses));
}

AtfSet free_field_atf_set(const ArrayGeometry& geometry, std::size_t n_directions,
                          std::size_t n_bins, double sample_rate, double speed_of_sound) {
  if (n_directions < 4) throw RangeError("free_field_atf_set: n_directions must be >= 4");
  return free_field_atf_set(geometry, fibonacci_directions(n_directions), n_bins, sample_rate,
                            speed_of_sound);
}

// ---------------------------------------------------------------------------
// Counter-based engine

namespace {
std::uint64_t splitmix64(std::uint64_t& x) {
  std::uint64_t z = (x += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}
}  // namespace

BlockEngine::BlockEngine(std::uint64_t seed, std::uint64_t stream, std::uint64_t block) {
  std::uint64_t s = seed;
  state_ = splitmix64(s);
  s = state_ ^ stream;
  state_ = splitmix64(s);
  s = state_ ^ block;
  state_ = splitmix64(s);
}

BlockEngine::result_type BlockEngine::operator()() { return splitmix64(state_); }

// ---------------------------------------------------------------------------
// Diffuse noise

namespace detail {

DiffuseRenderer::DiffuseRenderer(const ArrayGeometry& geometry, double duration_s,
                                 double sample_rate, std::size_t n_plane_waves, std::uint64_t seed,
                                 const SimulationOptions& options)
    : config_(options.stft(sample_rate)), seed_(seed) {
  geometry.validate();
  if (n_plane_waves < 64) throw RangeError("diffuse_noise: n_plane_waves must be >= 64");
  if (!(duration_s >= 0.0)) throw RangeError("diffuse_noise: negative duration");
  n_channels_ = geometry.n_channels();
  n_waves_ = n_plane_waves;
  length_ = static_cast<std::size_t>(std::llround(duration_s * sample_rate));
  const std::size_t frame = config_.frame_len();
  block_ = std::gcd(frame, config_.hop());
  // Frames start early enough that sample 0 gets full overlap.
  lead_ = static_cast<std::int64_t>(frame - config_.hop());
  const auto span = static_cast<std::int64_t>(length_) + lead_;
  const auto hop = static_cast<std::int64_t>(config_.hop());
  n_frames_ = length_ == 0 ? 0 : static_cast<std::size_t>((span + hop - 1) / hop);

  const std::size_t bins = config_.n_bins();
  const auto directions = fibonacci_directions(n_plane_waves);
  phase_.resize(n_waves_ * n_channels_ * bins);
  for (std::size_t p = 0; p < n_waves_; ++p)
    for (std::size_t k = 0; k < bins; ++k) {
      const double f = static_cast<double>(k) * sample_rate / static_cast<double>(frame);
      const Eigen::VectorXcd d =
          free_field_response(geometry, directions[p], f, options.speed_of_sound);
      for (std::size_t c = 0; c < n_channels_; ++c)
        phase_[(p * n_channels_ + c) * bins + k] = d(static_cast<Eigen::Index>(c));
    }
}

void DiffuseRenderer::source_block(std::size_t wave, std::size_t block, double* out) const {
  // Unit-variance uniform white noise; the sum over waves is Gaussian.
  BlockEngine engine(seed_, wave, block);
  constexpr double kScale = 0x1.0p-53;
  const double sqrt3 = std::sqrt(3.0);
  for (std::size_t i = 0; i < block_; ++i)
    out[i] = (2.0 * static_cast<double>(engine() >> 11) * kScale - 1.0) * sqrt3;
}

void DiffuseRenderer::render_frame(std::size_t t, Scratch& s, Multichannel& out) const {
  const std::size_t frame = config_.frame_len();
  const std::size_t bins = config_.n_bins();
  const RealFft& fft = shared_fft(frame);
  const auto& w = config_.window();
  s.time.resize(frame);
  s.spec.resize(bins);
  s.source.resize(n_waves_ * frame);
  s.accum.assign(n_channels_ * bins, cplx(0.0, 0.0));
  const std::size_t blocks = frame / block_;
  const std::size_t first_block = t * config_.hop() / block_;
  const std::size_t hop_blocks = config_.hop() / block_;
  const bool follows = s.source_frame != static_cast<std::size_t>(-1) && s.source_frame + 1 == t;
  const std::size_t kept = follows ? blocks - hop_blocks : 0;
  for (std::size_t p = 0; p < n_waves_; ++p) {
    double* src = s.source.data() + p * frame;
    if (kept > 0) std::copy(src + config_.hop(), src + frame, src);
    for (std::size_t b = kept; b < blocks; ++b) source_block(p, first_block + b, src + b * block_);
    for (std::size_t n = 0; n < frame; ++n) s.time[n] = src[n] * w[n];
    fft.forward(s.time, s.spec);
    for (std::size_t c = 0; c < n_channels_; ++c) {
      const cplx* ph = phase_.data() + (p * n_channels_ + c) * bins;
      cplx* acc = s.accum.data() + c * bins;
      for (std::size_t k = 0; k < bins; ++k) {
        // Spelled out so the loop vectorizes without the complex-multiply
        // NaN recovery path.
        const double a = ph[k].real(), b = ph[k].imag();
        const double x = s.spec[k].real(), y = s.spec[k].imag();
        acc[k] = cplx(acc[k].real() + (a * x - b * y), acc[k].imag() + (a * y + b * x));
      }
    }
  }
  s.source_frame = t;
  const double norm = 1.0 / config_.cola_gain();
  const std::int64_t start = static_cast<std::int64_t>(t * config_.hop()) - lead_;
  for (std::size_t c = 0; c < n_channels_; ++c) {
    fft.inverse(std::span<const cplx>(s.accum.data() + c * bins, bins), s.time);
    Signal& dst = out[c];
    for (std::size_t n = 0; n < frame; ++n) {
      const std::int64_t idx = start + static_cast<std::int64_t>(n);
      if (idx < 0 || idx >= static_cast<std::int64_t>(length_)) continue;
      dst[static_cast<std::size_t>(idx)] += s.time[n] * w[n] * norm;
    }
  }
}

void DiffuseRenderer::normalize(Multichannel& out) const {
  double power = 0.0;
  for (const auto& ch : out)
    for (double v : ch) power += v * v;
  power /= static_cast<double>(n_channels_ * std::max<std::size_t>(length_, 1));
  if (!(power > 0.0)) return;
  const double g = 1.0 / std::sqrt(power);
  for (auto& ch : out)
    for (double& v : ch) v *= g;
}

}  // namespace detail

Multichannel diffuse_noise(const ArrayGeometry& geometry, double duration_s, double sample_rate,
                           std::size_t n_plane_waves, std::uint64_t seed,
                           const SimulationOptions& options) {
  const detail::DiffuseRenderer r(geometry, duration_s, sample_rate, n_plane_waves, seed, options);
  Multichannel out(r.n_channels(), Signal(r.length(), 0.0));
  // Fixed-size runs of consecutive frames share source samples. Runs two
  // apart never overlap in time, so even and odd runs each go in parallel.
  const std::size_t stride =
      (r.config().frame_len() + r.config().hop() - 1) / r.config().hop();
  const std::size_t run = std::max<std::size_t>(16, stride);
  const std::size_t n_runs = (r.n_frames() + run - 1) / run;
  for (std::size_t parity = 0; parity < 2; ++parity) {
    const auto count = static_cast<std::int64_t>(n_runs > parity ? (n_runs - parity + 1) / 2 : 0);
#pragma omp parallel
    {
      detail::DiffuseRenderer::Scratch scratch;
#pragma omp for schedule(dynamic, 1)
      for (std::int64_t i = 0; i < count; ++i) {
        const std::size_t first = (parity + 2 * static_cast<std::size_t>(i)) * run;
        const std::size_t last = std::min(first + run, r.n_frames());
        for (std::size_t t = first; t < last; ++t) r.render_frame(t, scratch, out);
      }
    }
  }
  r.normalize(out);
  return out;
}

// ---------------------------------------------------------------------------
// Moving sources and scenes

Multichannel render_moving_source(const Signal& source, const DirectionTrack& track,
                                  const ArrayGeometry& geometry, double sample_rate,
                                  const SimulationOptions& options) {
  geometry.validate();
  if (track.empty()) throw RangeError("render_moving_source: empty direction track");
  for (std::size_t i = 1; i < track.size(); ++i)
    if (!(track[i].first > track[i - 1].first))
      throw RangeError("render_moving_source: track timestamps must increase");
  const StftConfig config = options.stft(sample_rate);
  const auto frames = analyze(Multichannel{source}, config);
  if (!frames.empty() && track.front().first > config.frame_center_time(0))
    throw RangeError("render_moving_source: direction track starts after the first frame");

  const std::size_t n = geometry.n_channels();
  std::vector<std::vector<SpectralFrame>> per_channel(n, std::vector<SpectralFrame>(frames.size()));
  std::size_t cursor = 0;
  for (std::size_t t = 0; t < frames.size(); ++t) {
    const double center = config.frame_center_time(t);
    while (cursor + 1 < track.size() && track[cursor + 1].first <= center) ++cursor;
    const Direction& dir = track[cursor].second;
    for (std::size_t c = 0; c < n; ++c) {
      SpectralFrame& f = per_channel[c][t];
      f.frame_index = t;
      f.start_time = frames[t].start_time;
      f.bins.resize(frames[t].bins.rows(), 1);
    }
    for (std::size_t k = 0; k < config.n_bins(); ++k) {
      const double freq = static_cast<double>(k) * sample_rate / static_cast<double>(config.frame_len());
      const Eigen::VectorXcd d = free_field_response(geometry, dir, freq, options.speed_of_sound);
      const cplx s = frames[t].bins(static_cast<Eigen::Index>(k), 0);
      for (std::size_t c = 0; c < n; ++c)
        per_channel[c][t].bins(static_cast<Eigen::Index>(k), 0) = d(static_cast<Eigen::Index>(c)) * s;
    }
  }
  Multichannel out(n);
  for (std::size_t c = 0; c < n; ++c) out[c] = synthesize(per_channel[c], config);
  return out;
}

namespace {
double channel_power(const Signal& x) {
  double e = 0.0;
  for (double v : x) e += v * v;
  return x.empty() ? 0.0 : e / static_cast<double>(x.size());
}

void scale(Multichannel& x, double g) {
  for (auto& ch : x)
    for (double& v : ch) v *= g;
}
}  // namespace

SceneRender build_scene(const SceneSpec& spec) {
  spec.geometry.validate();
  SceneRender scene;
  scene.sample_rate = spec.sample_rate;
  Multichannel target =
      render_moving_source(spec.target, spec.target_track, spec.geometry, spec.sample_rate, spec.options);
  const std::size_t len = target.empty() ? 0 : target[0].size();
  const double target_power = channel_power(target[0]);
  if (!(target_power > 0.0)) throw NumericalError("build_scene: silent target at channel 0");

  if (spec.interferer) {
    Multichannel interferer = render_moving_source(*spec.interferer, spec.interferer_track,
                                                   spec.geometry, spec.sample_rate, spec.options);
    for (auto& ch : interferer) ch.resize(len, 0.0);
    const double p = channel_power(interferer[0]);
    if (!(p > 0.0)) throw NumericalError("build_scene: silent interferer at channel 0");
    scale(interferer, std::sqrt(target_power / p * std::pow(10.0, spec.interferer_gain_db / 10.0)));
    scene.stems["interferer"] = std::move(interferer);
  }

  Multichannel noise = diffuse_noise(spec.geometry, static_cast<double>(len) / spec.sample_rate,
                                     spec.sample_rate, spec.n_plane_waves, spec.seed, spec.options);
  for (auto& ch : noise) ch.resize(len, 0.0);
  const double noise_power = channel_power(noise[0]);
  scale(noise, std::sqrt(target_power / (noise_power * std::pow(10.0, spec.snr_db / 10.0))));
  scene.stems["noise"] = std::move(noise);
  scene.stems["target"] = std::move(target);

  scene.mixture.assign(spec.geometry.n_channels(), Signal(len, 0.0));
  for (const auto& [_, stem] : scene.stems)
    for (std::size_t c = 0; c < stem.size(); ++c)
      for (std::size_t i = 0; i < len; ++i) scene.mixture[c][i] += stem[c][i];
  return scene;
}

SpeechLike speech_like_source(double duration_s, double sample_rate, std::uint64_t seed,
                              const std::string& participant_id, bool gated) {
  const auto len = static_cast<std::size_t>(std::llround(duration_s * sample_rate));
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);

  // Two one-pole low-passes (~750 Hz corner at 48 kHz) behind a DC blocker.
  SpeechLike out;
  out.samples.resize(len);
  double lp1 = 0.0, lp2 = 0.0, prev_in = 0.0, hp = 0.0;
  const double a = std::exp(-2.0 * std::numbers::pi * 750.0 / sample_rate);
  const double r = std::exp(-2.0 * std::numbers::pi * 80.0 / sample_rate);
  const double phase = 2.0 * std::numbers::pi * uniform(rng);
  for (std::size_t n = 0; n < len; ++n) {
    const double x = normal(rng);
    hp = x - prev_in + r * hp;
    prev_in = x;
    lp1 = (1.0 - a) * hp + a * lp1;
    lp2 = (1.0 - a) * lp1 + a * lp2;
    const double t = static_cast<double>(n) / sample_rate;
    const double syllabic = 0.6 + 0.4 * std::sin(2.0 * std::numbers::pi * 4.0 * t + phase);
    out.samples[n] = lp2 * syllabic;
  }

  out.activity.participant_id = participant_id;
  if (!gated) {
    if (len > 0) out.activity.segments.push_back({0.0, static_cast<double>(len) / sample_rate});
  } else {
    std::vector<double> gain(len, 0.0);
    const auto ramp = static_cast<std::size_t>(0.01 * sample_rate);
    double t = 0.2 + 0.3 * uniform(rng);
    while (t < duration_s) {
      const double end = std::min(duration_s, t + 1.0 + 2.0 * uniform(rng));
      const auto a_idx = static_cast<std::size_t>(std::llround(t * sample_rate));
      const auto b_idx = std::min(len, static_cast<std::size_t>(std::llround(end * sample_rate)));
      for (std::size_t n = a_idx; n < b_idx; ++n) {
        const std::size_t from_edge = std::min(n - a_idx, b_idx - 1 - n);
        gain[n] = from_edge >= ramp ? 1.0
                                    : 0.5 - 0.5 * std::cos(std::numbers::pi * static_cast<double>(from_edge) /
                                                           static_cast<double>(ramp));
      }
      if (b_idx > a_idx)
        out.activity.segments.push_back({static_cast<double>(a_idx) / sample_rate,
                                         static_cast<double>(b_idx) / sample_rate});
      t = end + 0.3 + 0.7 * uniform(rng);
    }
    for (std::size_t n = 0; n < len; ++n) out.samples[n] *= gain[n];
  }

  // RMS 0.1 over the active part.
  const VaSegments& act = out.activity;
  const auto active = gather_segments(out.samples, act, sample_rate);
  double e = 0.0;
  for (double v : active) e += v * v;
  if (e > 0.0) {
    const double g = 0.1 / std::sqrt(e / static_cast<double>(active.size()));
    for (double& v : out.samples) v *= g;
  }
  return out;
}

}  // namespace cfocus
