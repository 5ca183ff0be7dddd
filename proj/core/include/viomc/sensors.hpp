#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "viomc/geom.hpp"
#include "viomc/trajgen.hpp"

namespace viomc::sensors {

/// Noise densities are continuous-time: white noise per-sample std is
/// sigma * sqrt(rate); bias random-walk per-sample increment std is
/// sigma_b / sqrt(rate).
struct ImuConfig {
  double sigma_a = 1e-4;   // m/s^2/sqrt(Hz)
  double sigma_g = 1e-5;   // rad/s/sqrt(Hz)
  double sigma_ba = 3e-4;  // m/s^2/sqrt(Hz)
  double sigma_bg = 5e-6;  // rad/s/sqrt(Hz)
  double rate = 400.0;
  Vec3 gravity{0.0, 0.0, -9.81};

  void validate() const;
  static ImuConfig noiseless() {
    ImuConfig c;
    c.sigma_a = c.sigma_g = c.sigma_ba = c.sigma_bg = 0.0;
    return c;
  }
};

struct ImuBias {
  Vec3 b_a = Vec3::Zero();
  Vec3 b_g = Vec3::Zero();
};

struct ImuSample {
  double t = 0.0;
  Vec3 gyro = Vec3::Zero();
  Vec3 accel = Vec3::Zero();
};

struct ImuStream {
  std::vector<ImuSample> samples;
  std::vector<ImuBias> biases;  // ground truth, one per sample
};

/// gyro = omega_b + b_g + n_g,  accel = R^T (alpha_s - g) + b_a + n_a.
/// Throws std::invalid_argument when the trajectory rate differs from
/// cfg.rate.
ImuStream simulate_imu(const trajgen::Trajectory& traj, const ImuConfig& cfg, std::uint64_t seed);

struct CloudPoint {
  FeatureId id = 0;
  Vec3 X_s = Vec3::Zero();
};

struct PointCloud {
  std::vector<CloudPoint> points;
};

struct Box {
  Vec3 lo = Vec3::Zero();
  Vec3 hi = Vec3::Zero();
};

/// Trajectory translation bounds inflated by 1.75 per axis.
Box default_cloud_box(const trajgen::TrajectoryConfig& traj);

PointCloud generate_point_cloud(int count, const Box& box, std::uint64_t seed);

struct Observation {
  FeatureId id = 0;
  geom::PixelPoint px;
};

struct VisionFrame {
  double t = 0.0;
  std::vector<Observation> observations;  // sorted by id
};

inline constexpr double kDefaultNearPlane = 0.05;

/// Observes every cloud point in front of the near plane whose projection
/// lands inside the image. camera_to_spatial maps camera coordinates into
/// the spatial frame.
VisionFrame render_frame(double t, const geom::Pose& camera_to_spatial, const PointCloud& cloud,
                         const geom::CameraIntrinsics& K, double z_near = kDefaultNearPlane);

void write_imu_csv(const ImuStream& imu, const std::filesystem::path& path);
ImuStream read_imu_csv(const std::filesystem::path& path);

/// One JSON object per line: {"t": ..., "obs": [[id, u, v], ...]}.
void write_frames_jsonl(const std::vector<VisionFrame>& frames, const std::filesystem::path& path);
std::vector<VisionFrame> read_frames_jsonl(const std::filesystem::path& path);

void write_cloud_csv(const PointCloud& cloud, const std::filesystem::path& path);

}  // namespace viomc::sensors
