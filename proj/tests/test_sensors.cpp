#include <cmath>
#include <filesystem>
#include <numbers>
#include <set>

#include <gtest/gtest.h>

#include "viomc/ekf.hpp"
#include "viomc/sensors.hpp"
#include "viomc/trajgen.hpp"

using namespace viomc;
using namespace viomc::sensors;

namespace {

trajgen::Trajectory paper_trajectory(double duration = 80.0) {
  trajgen::TrajectoryConfig c;
  c.seed = 1;
  c.duration = duration;
  c.initial_w = Vec3(0.0, std::numbers::pi / 2, 0.0);
  return trajgen::generate_brownian_trajectory(c);
}

trajgen::Trajectory still_trajectory(double duration) {
  trajgen::TrajectoryConfig c;
  c.sigma_alpha = c.sigma_omega = 0.0;
  c.duration = duration;
  return trajgen::generate_brownian_trajectory(c);
}

}  // namespace

TEST(Imu, StaticSpecificForce) {
  const auto imu = simulate_imu(still_trajectory(1.0), ImuConfig::noiseless(), 1);
  for (const auto& m : imu.samples) {
    EXPECT_EQ(m.gyro, Vec3::Zero());
    EXPECT_LT((m.accel - Vec3(0, 0, 9.81)).norm(), 1e-15);
  }
}

TEST(Imu, NoiselessPassThrough) {
  const auto traj = paper_trajectory(5.0);
  const auto imu = simulate_imu(traj, ImuConfig::noiseless(), 1);
  ASSERT_EQ(imu.samples.size(), traj.samples.size());
  for (std::size_t k = 0; k < traj.samples.size(); ++k) {
    const auto& s = traj.samples[k];
    EXPECT_EQ(imu.samples[k].t, s.t);
    EXPECT_LT((imu.samples[k].gyro - s.omega_b).norm(), 1e-15);
    EXPECT_LT((imu.samples[k].accel - s.R_sb.transpose() * (s.alpha_s - Vec3(0, 0, -9.81))).norm(), 1e-13);
    EXPECT_EQ(imu.biases[k].b_a, Vec3::Zero());
  }
}

TEST(Imu, WhiteAccelNoiseAveragesOut) {
  const auto traj = paper_trajectory(80.0);
  ImuConfig cfg = ImuConfig::noiseless();
  cfg.sigma_a = 1e-4;
  const auto imu = simulate_imu(traj, cfg, 3);
  const std::size_t n = 32000;
  Vec3 mean = Vec3::Zero();
  double var = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const auto& s = traj.samples[k];
    const Vec3 e = imu.samples[k].accel - s.R_sb.transpose() * (s.alpha_s - cfg.gravity);
    mean += e / static_cast<double>(n);
    var += e.squaredNorm() / (3.0 * n);
  }
  const double per_sample = cfg.sigma_a * std::sqrt(cfg.rate);
  EXPECT_LT(mean.cwiseAbs().maxCoeff(), 4.0 * per_sample / std::sqrt(static_cast<double>(n)));
  EXPECT_NEAR(std::sqrt(var), per_sample, 0.02 * per_sample);
}

TEST(Imu, BiasWalkStartsAtZeroAndSpreadsAsSqrtTime) {
  const auto traj = still_trajectory(10.0);
  ImuConfig cfg = ImuConfig::noiseless();
  cfg.sigma_bg = 5e-3;
  double var = 0.0;
  const int reps = 400;
  for (int r = 0; r < reps; ++r) {
    const auto imu = simulate_imu(traj, cfg, 100 + r);
    EXPECT_EQ(imu.biases.front().b_g, Vec3::Zero());
    var += imu.biases.back().b_g.squaredNorm() / (3.0 * reps);
  }
  // 4000 increments of std sigma/sqrt(rate): total std sigma*sqrt(10 s).
  const double expected = cfg.sigma_bg * std::sqrt(10.0);
  EXPECT_NEAR(std::sqrt(var), expected, 0.06 * expected);
}

TEST(Imu, DeterministicAndRateChecked) {
  const auto traj = paper_trajectory(1.0);
  const auto a = simulate_imu(traj, ImuConfig{}, 5);
  const auto b = simulate_imu(traj, ImuConfig{}, 5);
  for (std::size_t k = 0; k < a.samples.size(); ++k) ASSERT_EQ(a.samples[k].accel, b.samples[k].accel);
  ImuConfig wrong;
  wrong.rate = 200.0;
  EXPECT_THROW(simulate_imu(traj, wrong, 5), std::invalid_argument);
}

TEST(Imu, NoiselessStreamIntegratesBackToTruth) {
  const auto traj = paper_trajectory(80.0);
  const auto imu = simulate_imu(traj, ImuConfig::noiseless(), 1);
  const auto& s0 = traj.samples.front();
  ekf::MotionState x{s0.R_sb, s0.T_sb, s0.v_sb, Vec3::Zero(), Vec3::Zero()};
  double worst = 0.0;
  for (std::size_t k = 0; k + 1 < traj.samples.size(); ++k) {
    x = ekf::propagate_motion(x, imu.samples[k], traj.dt(), Vec3(0, 0, -9.81));
    worst = std::max(worst, (x.T - traj.samples[k + 1].T_sb).norm());
  }
  EXPECT_LT(worst, 1e-3);
  EXPECT_LT(worst, 1e-6);  // the generator and the filter share one discretisation
}

TEST(Imu, CsvRoundTrip) {
  const auto imu = simulate_imu(paper_trajectory(0.5), ImuConfig{}, 2);
  const auto path = std::filesystem::temp_directory_path() / "viomc_imu.csv";
  write_imu_csv(imu, path);
  const auto back = read_imu_csv(path);
  std::filesystem::remove(path);
  ASSERT_EQ(back.samples.size(), imu.samples.size());
  for (std::size_t k = 0; k < imu.samples.size(); ++k) {
    ASSERT_EQ(back.samples[k].t, imu.samples[k].t);
    ASSERT_EQ(back.samples[k].gyro, imu.samples[k].gyro);
    ASSERT_EQ(back.samples[k].accel, imu.samples[k].accel);
  }
}

TEST(Cloud, DegenerateBoxGivesThatPoint) {
  const auto c = generate_point_cloud(1, Box{Vec3(1, 2, 3), Vec3(1, 2, 3)}, 4);
  ASSERT_EQ(c.points.size(), 1u);
  EXPECT_EQ(c.points[0].X_s, Vec3(1, 2, 3));
}

TEST(Cloud, UniformOverPaperBox) {
  trajgen::TrajectoryConfig tc;
  const Box box = default_cloud_box(tc);
  EXPECT_EQ(box.hi, Vec3(10.5, 5.25, 5.25));
  const auto c = generate_point_cloud(1000, box, 2);
  Vec3 mean = Vec3::Zero();
  std::set<FeatureId> ids;
  for (const auto& p : c.points) {
    mean += p.X_s / 1000.0;
    ids.insert(p.id);
    ASSERT_TRUE((p.X_s.array() >= box.lo.array()).all() && (p.X_s.array() <= box.hi.array()).all());
  }
  EXPECT_EQ(ids.size(), 1000u);
  const Vec3 center = 0.5 * (box.lo + box.hi);
  const Vec3 span = box.hi - box.lo;
  for (int a = 0; a < 3; ++a) EXPECT_LT(std::abs(mean[a] - center[a]), 0.05 * span[a]);
}

TEST(Cloud, Deterministic) {
  const Box box{Vec3(-1, -1, -1), Vec3(1, 1, 1)};
  const auto a = generate_point_cloud(50, box, 9);
  const auto b = generate_point_cloud(50, box, 9);
  for (std::size_t i = 0; i < a.points.size(); ++i) ASSERT_EQ(a.points[i].X_s, b.points[i].X_s);
  EXPECT_THROW(generate_point_cloud(0, box, 9), std::invalid_argument);
}

TEST(Render, PointOnOpticalAxis) {
  PointCloud cloud{{{7, Vec3(0, 0, 1)}, {8, Vec3(0, 0, -1)}}};
  const auto f = render_frame(0.5, geom::Pose::identity(), cloud, geom::CameraIntrinsics{});
  ASSERT_EQ(f.observations.size(), 1u);
  EXPECT_EQ(f.observations[0].id, 7);
  EXPECT_DOUBLE_EQ(f.observations[0].px.u, 320.0);
  EXPECT_DOUBLE_EQ(f.observations[0].px.v, 240.0);
  EXPECT_EQ(f.t, 0.5);
}

TEST(Render, MatchesBruteForceVisibility) {
  trajgen::TrajectoryConfig tc;
  const auto cloud = generate_point_cloud(1000, default_cloud_box(tc), 2);
  const geom::CameraIntrinsics K;
  const geom::Pose cam{geom::exp_rotation(Vec3(0.2, 1.4, -0.1)), Vec3(1.0, -0.5, 0.3)};
  const auto frame = render_frame(0.0, cam, cloud, K);
  int count = 0;
  for (const auto& p : cloud.points) {
    const Vec3 d = p.X_s - cam.translation;
    // Camera coordinates by dot products with the rotation's columns.
    const double x = cam.rotation.col(0).dot(d), y = cam.rotation.col(1).dot(d), z = cam.rotation.col(2).dot(d);
    if (z <= 0.05) continue;
    const double u = K.fx * x / z + K.cx, v = K.fy * y / z + K.cy;
    count += (u >= 0 && u < K.width && v >= 0 && v < K.height);
  }
  EXPECT_GT(count, 20);
  EXPECT_EQ(static_cast<int>(frame.observations.size()), count);
  for (std::size_t i = 1; i < frame.observations.size(); ++i) {
    EXPECT_LT(frame.observations[i - 1].id, frame.observations[i].id);
  }
}

TEST(Render, FramesJsonlRoundTrip) {
  trajgen::TrajectoryConfig tc;
  const auto cloud = generate_point_cloud(300, default_cloud_box(tc), 2);
  std::vector<VisionFrame> frames;
  for (int i = 0; i < 3; ++i) {
    frames.push_back(render_frame(0.04 * i, {geom::exp_rotation(Vec3(0, 1.5 + 0.1 * i, 0)), Vec3::Zero()}, cloud,
                                  geom::CameraIntrinsics{}));
  }
  const auto path = std::filesystem::temp_directory_path() / "viomc_frames.jsonl";
  write_frames_jsonl(frames, path);
  const auto back = read_frames_jsonl(path);
  std::filesystem::remove(path);
  ASSERT_EQ(back.size(), frames.size());
  for (std::size_t i = 0; i < frames.size(); ++i) {
    EXPECT_EQ(back[i].t, frames[i].t);
    ASSERT_EQ(back[i].observations.size(), frames[i].observations.size());
    for (std::size_t j = 0; j < frames[i].observations.size(); ++j) {
      EXPECT_EQ(back[i].observations[j].id, frames[i].observations[j].id);
      EXPECT_EQ(back[i].observations[j].px.u, frames[i].observations[j].px.u);
      EXPECT_EQ(back[i].observations[j].px.v, frames[i].observations[j].px.v);
    }
  }
}
