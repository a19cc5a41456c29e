// Copyright 2026 The cfocus Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include <omp.h>

#include <cmath>
#include <numbers>

#include "cfocus/error.hpp"
#include "cfocus/fft.hpp"
#include "cfocus/metrics.hpp"
#include "cfocus/simscene.hpp"
#include "doctest.h"
#include "support.hpp"

using namespace cfocus;
using namespace cfocus::testing;

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kFs = 48000.0;

ArrayGeometry pair_on_y(double half) {
  ArrayGeometry g;
  g.mic_positions = {{0.0, half, 0.0}, {0.0, -half, 0.0}};
  return g;
}

const Direction kFront = Direction::from_angles(0.0, kPi / 2);
const Direction kLeft = Direction::from_angles(kPi / 2, kPi / 2);

double mean_power(const Signal& x) {
  double e = 0.0;
  for (double v : x) e += v * v;
  return e / static_cast<double>(x.size());
}

// Welch estimate of Re{coherence} between two channels, Hann segments with
// 50% overlap.
std::vector<double> welch_coherence(const Signal& a, const Signal& b, std::size_t seg) {
  const RealFft fft(seg);
  std::vector<double> w(seg);
  for (std::size_t n = 0; n < seg; ++n) w[n] = 0.5 - 0.5 * std::cos(2.0 * kPi * n / seg);
  std::vector<double> paa(fft.n_bins()), pbb(fft.n_bins());
  std::vector<cplx> pab(fft.n_bins());
  std::vector<double> xa(seg), xb(seg);
  std::vector<cplx> fa(fft.n_bins()), fb(fft.n_bins());
  for (std::size_t s = 0; s + seg <= a.size(); s += seg / 2) {
    for (std::size_t n = 0; n < seg; ++n) {
      xa[n] = w[n] * a[s + n];
      xb[n] = w[n] * b[s + n];
    }
    fft.forward(xa, fa);
    fft.forward(xb, fb);
    for (std::size_t k = 0; k < fft.n_bins(); ++k) {
      paa[k] += std::norm(fa[k]);
      pbb[k] += std::norm(fb[k]);
      pab[k] += fa[k] * std::conj(fb[k]);
    }
  }
  std::vector<double> out(fft.n_bins());
  for (std::size_t k = 0; k < out.size(); ++k) out[k] = pab[k].real() / std::sqrt(paa[k] * pbb[k]);
  return out;
}

Signal noise_source(double seconds, std::uint64_t seed) {
  Rng rng(seed);
  return white_noise(rng, static_cast<std::size_t>(seconds * kFs));
}

}  // namespace

TEST_CASE("free-field responses") {
  ArrayGeometry origin;
  origin.mic_positions = {Eigen::Vector3d::Zero()};
  CHECK(std::abs(free_field_response(origin, kLeft, 3000.0)(0) - cplx(1.0, 0.0)) < 1e-15);

  const auto g = pair_on_y(0.085);
  const double f = 2000.0;
  const Eigen::VectorXcd d = free_field_response(g, kLeft, f);
  const double phase = 2.0 * kPi * f * 0.085 / kSpeedOfSound;
  CHECK(std::abs(d(0) - std::polar(1.0, phase)) < 1e-12);
  CHECK(std::abs(d(1) - std::polar(1.0, -phase)) < 1e-12);
  const Eigen::VectorXcd front = free_field_response(g, kFront, f);
  CHECK(std::abs(front(0) - front(1)) < 1e-12);

  Rng rng(1);
  const auto glasses = ArrayGeometry::glasses6();
  for (int i = 0; i < 100; ++i) {
    const Eigen::VectorXcd r = free_field_response(glasses, random_direction(rng), uniform(rng, 0, 24000));
    for (Eigen::Index c = 0; c < r.size(); ++c) CHECK(std::abs(std::abs(r(c)) - 1.0) < 1e-12);
  }

  const AtfSet set = free_field_atf_set(glasses, 42, 9, kFs);
  CHECK(set.n_directions() == 42);
  CHECK(set.n_bins() == 9);
  for (std::size_t d = 0; d < set.n_directions(); ++d)
    for (std::size_t b = 0; b < set.n_bins(); ++b) {
      const Eigen::VectorXcd ref = free_field_response(glasses, set.directions()[d], set.bin_frequency(b));
      CHECK((set.response(d, b) - ref).norm() < 1e-6);
    }
  CHECK_THROWS_AS(free_field_atf_set(glasses, 3, 9, kFs), RangeError);
}

TEST_CASE("geometry validation") {
  CHECK_NOTHROW(ArrayGeometry::glasses6().validate());
  CHECK(ArrayGeometry::glasses6().n_channels() == 6);
  CHECK_THROWS_AS(ArrayGeometry{}.validate(), DimensionError);
  ArrayGeometry dup;
  dup.mic_positions = {{0, 0, 0}, {0, 0, 0}};
  CHECK_THROWS_AS(dup.validate(), RangeError);
}

TEST_CASE("fibonacci grid") {
  const auto dirs = fibonacci_directions(642);
  REQUIRE(dirs.size() == 642);
  Eigen::Vector3d sum = Eigen::Vector3d::Zero();
  for (const auto& d : dirs) sum += d.unit_vector();
  CHECK(sum.norm() / 642.0 < 1e-2);
  CHECK_THROWS_AS(fibonacci_directions(0), RangeError);
}

TEST_CASE("diffuse noise has unit power and the isotropic coherence") {
  const auto g = pair_on_y(0.085);
  const Multichannel x = diffuse_noise(g, 20.0, kFs, 512, 7);
  REQUIRE(x.size() == 2);
  REQUIRE(x[0].size() == 960000);
  CHECK((mean_power(x[0]) + mean_power(x[1])) / 2.0 == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(std::abs(mean_power(x[0]) - mean_power(x[1])) < 0.05);

  const std::size_t seg = 256;
  const auto coh = welch_coherence(x[0], x[1], seg);
  double worst = 0.0;
  for (std::size_t k = 1; k < coh.size(); ++k) {
    const double f = static_cast<double>(k) * kFs / seg;
    if (f > 8000.0) break;
    const double arg = 2.0 * kPi * f * 0.17 / kSpeedOfSound;
    worst = std::max(worst, std::abs(coh[k] - std::sin(arg) / arg));
  }
  CHECK(worst <= 0.05);
}

TEST_CASE("diffuse noise is deterministic and thread-count independent") {
  const auto g = ArrayGeometry::glasses6();
  const Multichannel a = diffuse_noise(g, 1.5, kFs, 64, 3);
  const Multichannel b = diffuse_noise(g, 1.5, kFs, 64, 3);
  CHECK(a == b);
  const Multichannel c = diffuse_noise(g, 1.5, kFs, 64, 4);
  CHECK(a != c);

  const Multichannel ref = serial::diffuse_noise(g, 1.5, kFs, 64, 3);
  CHECK(ref == a);

  const int saved = omp_get_max_threads();
  for (int threads : {1, 2, 3, 5}) {
    omp_set_num_threads(threads);
    CHECK(diffuse_noise(g, 1.5, kFs, 64, 3) == a);
  }
  omp_set_num_threads(saved);

  CHECK(diffuse_noise(g, 0.0, kFs, 64, 3)[0].empty());
  CHECK(diffuse_noise(g, 0.01, kFs, 64, 3)[0].size() == 480);
  CHECK_THROWS_AS(diffuse_noise(g, 1.0, kFs, 63, 3), RangeError);
  CHECK_THROWS_AS(diffuse_noise(g, -1.0, kFs, 64, 3), RangeError);
}

TEST_CASE("moving source from the front reaches symmetric mics identically") {
  const auto g = pair_on_y(0.5);
  const Signal s = noise_source(1.0, 11);
  const Multichannel y = render_moving_source(s, {{0.0, kFront}}, g, kFs);
  REQUIRE(y.size() == 2);
  CHECK(error_db(y[1], y[0], 0, y[0].size()) <= -60.0);
}

TEST_CASE("moving source delay equals the geometric delay") {
  const auto g = pair_on_y(0.5);
  const Signal s = noise_source(2.0, 12);
  const Multichannel y = render_moving_source(s, {{0.0, kLeft}}, g, kFs);
  const auto expected = static_cast<std::int64_t>(std::llround(1.0 / kSpeedOfSound * kFs));
  CHECK(expected == 140);
  CHECK(gcc_phat_delay(y[0], y[1], 400) == expected);
}

TEST_CASE("moving source follows a direction switch") {
  const auto g = pair_on_y(0.085);
  const Signal s = noise_source(2.0, 13);
  const Multichannel sw = render_moving_source(s, {{0.0, kFront}, {1.0, kLeft}}, g, kFs);
  const Multichannel front = render_moving_source(s, {{0.0, kFront}}, g, kFs);
  const Multichannel left = render_moving_source(s, {{0.0, kLeft}}, g, kFs);
  const auto at = [](double t) { return static_cast<std::size_t>(t * kFs); };
  for (std::size_t c = 0; c < 2; ++c) {
    CHECK(error_db(sw[c], front[c], 0, at(0.95)) <= -200.0);
    CHECK(error_db(sw[c], left[c], at(1.05), sw[c].size()) <= -200.0);
    CHECK(error_db(sw[c], front[c], at(1.05), sw[c].size()) > -20.0);
  }
}

TEST_CASE("moving source errors") {
  const auto g = pair_on_y(0.1);
  const Signal s = noise_source(0.5, 14);
  CHECK_THROWS_AS(render_moving_source(s, {}, g, kFs), RangeError);
  CHECK_THROWS_AS(render_moving_source(s, {{0.5, kFront}}, g, kFs), RangeError);
  CHECK_THROWS_AS(render_moving_source(s, {{0.0, kFront}, {0.0, kLeft}}, g, kFs), RangeError);
  CHECK_NOTHROW(render_moving_source(s, {{1024.0 / 2 / kFs, kFront}}, g, kFs));
}

TEST_CASE("scene stems and SNR") {
  SceneSpec spec;
  spec.geometry = ArrayGeometry::glasses6();
  spec.target = speech_like_source(3.0, kFs, 21).samples;
  spec.target_track = {{0.0, kFront}};
  spec.n_plane_waves = 64;
  spec.snr_db = 5.0;
  spec.seed = 9;

  SUBCASE("target and noise only") {
    const SceneRender r = build_scene(spec);
    CHECK(r.stems.size() == 2);
    CHECK(r.stems.count("target") == 1);
    CHECK(r.stems.count("noise") == 1);
    const double snr = 10.0 * std::log10(mean_power(r.stems.at("target")[0]) / mean_power(r.stems.at("noise")[0]));
    CHECK(std::abs(snr - 5.0) <= 0.1);
    for (std::size_t c = 0; c < 6; ++c)
      for (std::size_t i = 0; i < r.mixture[c].size(); i += 97)
        CHECK(std::abs(r.mixture[c][i] - r.stems.at("target")[c][i] - r.stems.at("noise")[c][i]) < 1e-12);
  }
  SUBCASE("with an interferer") {
    spec.interferer = speech_like_source(3.0, kFs, 22).samples;
    spec.interferer_track = {{0.0, kLeft}};
    spec.interferer_gain_db = -3.0;
    const SceneRender r = build_scene(spec);
    CHECK(r.stems.size() == 3);
    const double tp = mean_power(r.stems.at("target")[0]);
    CHECK(10.0 * std::log10(mean_power(r.stems.at("interferer")[0]) / tp) == doctest::Approx(-3.0).epsilon(1e-6));
    const std::size_t len = r.mixture[0].size();
    for (const auto& [_, stem] : r.stems)
      for (const auto& ch : stem) CHECK(ch.size() == len);
    double err = 0.0;
    for (std::size_t c = 0; c < 6; ++c)
      for (std::size_t i = 0; i < len; ++i) {
        double sum = 0.0;
        for (const auto& [_, stem] : r.stems) sum += stem[c][i];
        err = std::max(err, std::abs(r.mixture[c][i] - sum));
      }
    CHECK(err < 1e-12);
  }
  SUBCASE("silent target") {
    spec.target.assign(spec.target.size(), 0.0);
    CHECK_THROWS_AS(build_scene(spec), NumericalError);
  }
}

TEST_CASE("speech-like source") {
  const SpeechLike a = speech_like_source(10.0, kFs, 5, "T");
  CHECK(a.samples.size() == 480000);
  CHECK(a.activity.participant_id == "T");
  REQUIRE(!a.activity.segments.empty());
  const auto active = gather_segments(a.samples, a.activity, kFs);
  CHECK(std::sqrt(mean_power(active)) == doctest::Approx(0.1).epsilon(1e-9));
  // Silent outside the activity.
  VaSegments gaps{"T", subtract({{0.0, 10.0}}, a.activity.segments)};
  for (double v : gather_segments(a.samples, gaps, kFs)) CHECK(v == 0.0);
  for (const auto& seg : a.activity.segments) {
    CHECK(seg.end_s - seg.start_s <= 3.0 + 1e-9);
    CHECK(seg.end_s <= 10.0);
  }
  CHECK(speech_like_source(10.0, kFs, 5, "T").samples == a.samples);
  const SpeechLike ungated = speech_like_source(2.0, kFs, 5, "T", false);
  REQUIRE(ungated.activity.segments.size() == 1);
  CHECK(ungated.activity.segments[0].end_s == 2.0);
}

TEST_CASE("block engine streams are independent of generation order") {
  BlockEngine a(1, 2, 3), b(1, 2, 3), c(1, 2, 4);
  const auto a0 = a();
  CHECK(a0 == b());
  CHECK(a0 != c());
}
