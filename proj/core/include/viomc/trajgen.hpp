#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <numbers>
#include <span>
#include <vector>

#include "viomc/geom.hpp"

namespace viomc::trajgen {

/// Brownian-motion trajectory parameters. Random-walk step deviations are
/// per IMU step: alpha in m/s^2, omega in rad/s.
struct TrajectoryConfig {
  double sigma_alpha = 0.1;
  double sigma_omega = 0.001;
  Vec3 v_min{-3.0, -1.0, -1.0};
  Vec3 v_max{3.0, 1.0, 1.0};
  Vec3 t_min{-6.0, -3.0, -3.0};
  Vec3 t_max{6.0, 3.0, 3.0};
  double w_bound = std::numbers::pi;
  double duration = 80.0;
  double imu_rate = 400.0;
  std::uint64_t seed = 0;

  // Initial conditions.
  Vec3 initial_w = Vec3::Zero();
  Vec3 initial_T = Vec3::Zero();
  Vec3 initial_v = Vec3::Zero();
  Vec3 initial_alpha = Vec3::Zero();
  Vec3 initial_omega = Vec3::Zero();

  void validate() const;
  std::size_t sample_count() const;
};

struct GroundTruthSample {
  double t = 0.0;
  Vec3 w_sb = Vec3::Zero();
  Mat3 R_sb = Mat3::Identity();
  Vec3 T_sb = Vec3::Zero();
  Vec3 v_sb = Vec3::Zero();
  Vec3 alpha_s = Vec3::Zero();
  Vec3 omega_s = Vec3::Zero();
  Vec3 alpha_b = Vec3::Zero();
  Vec3 omega_b = Vec3::Zero();

  geom::Pose pose() const { return {R_sb, T_sb}; }
};

struct Trajectory {
  std::vector<GroundTruthSample> samples;
  double path_length = 0.0;
  double rate = 400.0;

  double dt() const { return 1.0 / rate; }
};

/// Spatial-frame linear acceleration and angular velocity follow random
/// walks. States integrate with explicit Euler on the rotation group:
///   R' = Exp(omega_s dt) R,  v' = v + alpha dt,  T' = T + v' dt.
/// A box-constraint hit on T or v clamps the state and flips the offending
/// acceleration component back inward; the alpha recorded for that step is
/// the one that produced the clamped state, so the body-frame inputs
/// reproduce the states exactly. A rotation-vector component leaving
/// [-w_bound, w_bound] flips the matching omega component.
Trajectory generate_brownian_trajectory(const TrajectoryConfig& cfg);

/// inf over unit x of sup over samples of |f x x|. Fibonacci sphere
/// sampling followed by pattern-search refinement in a tangent chart.
double minimum_excitation(std::span<const Vec3> f);

struct ExcitationReport {
  double angular_velocity = 0.0;
  double angular_acceleration = 0.0;
  double angular_jerk = 0.0;
  double linear_jerk = 0.0;

  bool sufficient() const {
    return angular_velocity > 0.0 && angular_acceleration > 0.0 && angular_jerk > 0.0 &&
           linear_jerk > 0.0;
  }
};

ExcitationReport excitation_report(const Trajectory& traj);

/// Recompute rotation, body-frame inputs and path length from the stored
/// rotation vectors, positions and spatial inputs.
Trajectory rebuild(std::vector<GroundTruthSample> samples, double rate);

void write_trajectory_csv(const Trajectory& traj, const std::filesystem::path& path);
Trajectory read_trajectory_csv(const std::filesystem::path& path);

}  // namespace viomc::trajgen
