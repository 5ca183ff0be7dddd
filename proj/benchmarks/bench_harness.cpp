#include <benchmark/benchmark.h>

#include "viomc/harness.hpp"

using namespace viomc;

// One desk-scale trial (shared scenario built once).
static void BM_RunTrial(benchmark::State& st) {
  auto spec = harness::desk_spec();
  spec.trajectory.duration = static_cast<double>(st.range(0));
  spec.sweep_values = {1.0};
  const auto sc = harness::build_scenario(spec);
  int trial = 0;
  for (auto _ : st) benchmark::DoNotOptimize(harness::run_trial(spec, sc, 0, trial++));
}
BENCHMARK(BM_RunTrial)->Arg(5)->Arg(20)->Unit(benchmark::kMillisecond);

static void BM_BuildScenario(benchmark::State& st) {
  const auto spec = harness::desk_spec();
  for (auto _ : st) benchmark::DoNotOptimize(harness::build_scenario(spec));
}
BENCHMARK(BM_BuildScenario)->Unit(benchmark::kMillisecond);
