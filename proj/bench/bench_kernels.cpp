#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "panograph/kernels.hpp"

namespace {

using namespace panograph::kernels;

std::vector<double> random_vector(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> dist;
  std::vector<double> v(n);
  for (double& x : v) x = dist(rng);
  return v;
}

// Activation sizes of a main-branch block at desk scale: B=4, C=128, T=36, N=228.
constexpr std::size_t kB = 4, kC = 128, kT = 36, kN = 228;

void BM_AggregateForward(benchmark::State& state, bool parallel) {
  const AggregateDims d{kB * kC * kT, kN};
  const auto g = random_vector(kN * kN, 1), z = random_vector(d.rows * kN, 2);
  std::vector<double> y(d.rows * kN);
  for (auto _ : state) {
    std::fill(y.begin(), y.end(), 0.0);
    if (parallel) {
      aggregate_forward(d, z, g, y);
    } else {
      reference::aggregate_forward(d, z, g, y);
    }
    benchmark::DoNotOptimize(y.data());
  }
}

void BM_MixForward(benchmark::State& state, bool parallel) {
  const MixDims d{kB, kC, kC, kT * kN};
  const auto w = random_vector(kC * kC, 3), x = random_vector(kB * kC * kT * kN, 4);
  std::vector<double> y(kB * kC * kT * kN);
  for (auto _ : state) {
    std::fill(y.begin(), y.end(), 0.0);
    if (parallel) {
      mix_forward(d, x, w, y);
    } else {
      reference::mix_forward(d, x, w, y);
    }
    benchmark::DoNotOptimize(y.data());
  }
}

void BM_TemporalForward(benchmark::State& state, bool parallel) {
  const std::size_t c = kC / 4;
  const TemporalDims d{kB, c, c, kT, kN, 3, 2, 1};
  const auto w = random_vector(c * c * 3, 5), x = random_vector(kB * c * kT * kN, 6);
  std::vector<double> y(kB * c * d.out_time() * kN);
  for (auto _ : state) {
    std::fill(y.begin(), y.end(), 0.0);
    if (parallel) {
      temporal_forward(d, x, w, y);
    } else {
      reference::temporal_forward(d, x, w, y);
    }
    benchmark::DoNotOptimize(y.data());
  }
}

BENCHMARK_CAPTURE(BM_AggregateForward, serial, false)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_AggregateForward, openmp, true)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_MixForward, serial, false)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_MixForward, openmp, true)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_TemporalForward, serial, false)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_TemporalForward, openmp, true)->Unit(benchmark::kMillisecond);

}  // namespace

int main(int argc, char** argv) {
  configure_threads_from_env();
  benchmark::Initialize(&argc, argv);
  benchmark::RunSpecifiedBenchmarks();
  return 0;
}
