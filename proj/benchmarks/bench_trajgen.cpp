#include <random>

#include <benchmark/benchmark.h>

#include "viomc/trajgen.hpp"

using namespace viomc;

static void BM_MinimumExcitation(benchmark::State& st) {
  std::mt19937_64 gen(1);
  std::normal_distribution<double> n;
  std::vector<Vec3> f(static_cast<std::size_t>(st.range(0)));
  for (auto& v : f) v = Vec3(n(gen), 0.5 * n(gen), 2.0 * n(gen));
  for (auto _ : st) benchmark::DoNotOptimize(trajgen::minimum_excitation(f));
  st.SetComplexityN(st.range(0));
}
BENCHMARK(BM_MinimumExcitation)->RangeMultiplier(8)->Range(64, 32768)->Complexity();

static void BM_GenerateTrajectory(benchmark::State& st) {
  trajgen::TrajectoryConfig cfg;
  cfg.duration = 20.0;
  cfg.seed = 1;
  for (auto _ : st) benchmark::DoNotOptimize(trajgen::generate_brownian_trajectory(cfg));
}
BENCHMARK(BM_GenerateTrajectory)->Unit(benchmark::kMillisecond);
