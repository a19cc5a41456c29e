// Copyright 2026 The cfocus Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

// Serial reference kernels against their OpenMP counterparts.

#include <benchmark/benchmark.h>

#include "cfocus/atf.hpp"
#include "cfocus/beamformer.hpp"
#include "cfocus/simscene.hpp"
#include "support.hpp"

using namespace cfocus;

namespace {

const AtfSet& grid() {
  static const AtfSet set = free_field_atf_set(ArrayGeometry::glasses6(), 2562, 513, 48000.0);
  return set;
}

const IsotropicCovariance& cov() {
  static const IsotropicCovariance c = isotropic_covariance(grid());
  return c;
}

SpectralFrame random_frame() {
  testing::Rng rng(1);
  SpectralFrame f;
  f.bins.resize(513, 6);
  for (Eigen::Index i = 0; i < f.bins.size(); ++i) f.bins.data()[i] = testing::random_complex(rng);
  return f;
}

void BM_CovarianceSerial(benchmark::State& s) {
  for (auto _ : s) benchmark::DoNotOptimize(serial::isotropic_covariance(grid()));
}
void BM_CovarianceParallel(benchmark::State& s) {
  for (auto _ : s) benchmark::DoNotOptimize(isotropic_covariance(grid()));
}

void BM_WeightsSerial(benchmark::State& s) {
  const auto t = make_target(grid(), 100, 0);
  for (auto _ : s) benchmark::DoNotOptimize(serial::max_di_weights(cov(), t));
}
void BM_WeightsParallel(benchmark::State& s) {
  const auto t = make_target(grid(), 100, 0);
  for (auto _ : s) benchmark::DoNotOptimize(max_di_weights(cov(), t));
}

void BM_ApplySerial(benchmark::State& s) {
  const auto w = max_di_weights(cov(), make_target(grid(), 100, 0));
  const SpectralFrame f = random_frame();
  for (auto _ : s) benchmark::DoNotOptimize(serial::apply_weights(w, f));
}
void BM_ApplyParallel(benchmark::State& s) {
  const auto w = max_di_weights(cov(), make_target(grid(), 100, 0));
  const SpectralFrame f = random_frame();
  for (auto _ : s) benchmark::DoNotOptimize(apply_weights(w, f));
}

void BM_DiffuseSerial(benchmark::State& s) {
  for (auto _ : s)
    benchmark::DoNotOptimize(serial::diffuse_noise(ArrayGeometry::glasses6(), 1.0, 48000.0, 256, 1));
}
void BM_DiffuseParallel(benchmark::State& s) {
  for (auto _ : s) benchmark::DoNotOptimize(diffuse_noise(ArrayGeometry::glasses6(), 1.0, 48000.0, 256, 1));
}

}  // namespace

BENCHMARK(BM_CovarianceSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_CovarianceParallel)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_WeightsSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_WeightsParallel)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ApplySerial)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_ApplyParallel)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_DiffuseSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_DiffuseParallel)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
