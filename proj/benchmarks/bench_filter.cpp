#include <algorithm>

#include <benchmark/benchmark.h>

#include "viomc/ekf.hpp"

using namespace viomc;
using namespace viomc::ekf;

namespace {

// Filter at the origin with n in-state features on a grid in front of it.
struct Scene {
  FilterConfig cfg;
  FilterState state;
  TrackTable tracks;
  sensors::VisionFrame frame;

  explicit Scene(int n) {
    cfg.max_state_features = std::max(n, 1);
    state = init_filter(cfg, {});
    for (int i = 0; i < n; ++i) {
      const Vec3 X(0.3 * (i % 10) - 1.5, 0.3 * (i / 10) - 1.0, 4.0 + 0.1 * (i % 7));
      auto& tr = tracks.insert_candidate(i, 0.0);
      tr.seeded = true;
      tr.X_s = X;
      tr.cov = 1e-4 * Mat3::Identity();
      frame.observations.push_back({i, *geom::project(X, cfg.camera)});
    }
    select_in_state_features(state, tracks, cfg, 0.0);
  }
};

}  // namespace

static void BM_Propagate(benchmark::State& st) {
  Scene sc(static_cast<int>(st.range(0)));
  const sensors::ImuSample imu{0.0, Vec3(0.01, -0.02, 0.03), Vec3(0.1, 0.0, 9.81)};
  for (auto _ : st) {
    propagate(sc.state, imu, 1.0 / 400.0, sc.cfg);
    benchmark::DoNotOptimize(sc.state.P.data());
  }
}
BENCHMARK(BM_Propagate)->Arg(0)->Arg(20)->Arg(60);

static void BM_ProcessFrame(benchmark::State& st) {
  const Scene base(static_cast<int>(st.range(0)));
  for (auto _ : st) {
    st.PauseTiming();
    Scene sc = base;
    st.ResumeTiming();
    benchmark::DoNotOptimize(process_frame(sc.state, sc.tracks, sc.frame, sc.cfg));
  }
}
BENCHMARK(BM_ProcessFrame)->Arg(20)->Arg(60);

static void BM_TransitionJacobians(benchmark::State& st) {
  const MotionState x{geom::exp_rotation(Vec3(0.1, 0.2, 0.3)), Vec3::Ones(), Vec3::UnitX(), Vec3::Zero(), Vec3::Zero()};
  const sensors::ImuSample imu{0.0, Vec3(0.01, -0.02, 0.03), Vec3(0.1, 0.0, 9.81)};
  for (auto _ : st) benchmark::DoNotOptimize(transition_jacobians(x, imu, 1.0 / 400.0));
}
BENCHMARK(BM_TransitionJacobians);
