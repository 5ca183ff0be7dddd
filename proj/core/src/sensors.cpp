#include "viomc/sensors.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>
#include <string>

#include <nlohmann/json.hpp>

#include "viomc/rng.hpp"

namespace viomc::sensors {

void ImuConfig::validate() const {
  if (!(sigma_a >= 0.0 && sigma_g >= 0.0 && sigma_ba >= 0.0 && sigma_bg >= 0.0)) {
    throw std::invalid_argument("imu: noise densities must be non-negative");
  }
  if (!(rate > 0.0)) throw std::invalid_argument("imu: rate must be positive");
}

ImuStream simulate_imu(const trajgen::Trajectory& traj, const ImuConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  if (std::abs(traj.rate - cfg.rate) > 1e-9 * cfg.rate) {
    throw std::invalid_argument("simulate_imu: trajectory sampled at " + std::to_string(traj.rate) +
                                " Hz, IMU configured for " + std::to_string(cfg.rate) + " Hz");
  }
  Rng rng(seed);
  const double white_a = cfg.sigma_a * std::sqrt(cfg.rate);
  const double white_g = cfg.sigma_g * std::sqrt(cfg.rate);
  const double walk_a = cfg.sigma_ba / std::sqrt(cfg.rate);
  const double walk_g = cfg.sigma_bg / std::sqrt(cfg.rate);

  ImuStream out;
  out.samples.reserve(traj.samples.size());
  out.biases.reserve(traj.samples.size());
  ImuBias bias;
  for (const auto& s : traj.samples) {
    ImuSample m;
    m.t = s.t;
    m.gyro = s.omega_b + bias.b_g + rng.normal3(white_g);
    m.accel = s.R_sb.transpose() * (s.alpha_s - cfg.gravity) + bias.b_a + rng.normal3(white_a);
    out.samples.push_back(m);
    out.biases.push_back(bias);
    bias.b_a += rng.normal3(walk_a);
    bias.b_g += rng.normal3(walk_g);
  }
  return out;
}

Box default_cloud_box(const trajgen::TrajectoryConfig& traj) {
  return {1.75 * traj.t_min, 1.75 * traj.t_max};
}

PointCloud generate_point_cloud(int count, const Box& box, std::uint64_t seed) {
  if (count <= 0) throw std::invalid_argument("generate_point_cloud: count must be positive");
  if (!(box.lo.array() <= box.hi.array()).all()) {
    throw std::invalid_argument("generate_point_cloud: inverted box");
  }
  Rng rng(derive_seed({static_cast<std::uint64_t>(Stream::cloud), seed}));
  PointCloud cloud;
  cloud.points.reserve(count);
  for (int i = 0; i < count; ++i) {
    Vec3 p;
    for (int a = 0; a < 3; ++a) {
      p[a] = box.lo[a] == box.hi[a] ? box.lo[a] : rng.uniform(box.lo[a], box.hi[a]);
    }
    cloud.points.push_back({i, p});
  }
  return cloud;
}

VisionFrame render_frame(double t, const geom::Pose& camera_to_spatial, const PointCloud& cloud,
                         const geom::CameraIntrinsics& K, double z_near) {
  VisionFrame frame;
  frame.t = t;
  const Mat3 Rt = camera_to_spatial.rotation.transpose();
  for (const auto& p : cloud.points) {
    const Vec3 X_c = Rt * (p.X_s - camera_to_spatial.translation);
    if (!(X_c.z() > z_near)) continue;
    const auto px = geom::project(X_c, K);
    if (px && geom::in_image(*px, K)) frame.observations.push_back({p.id, *px});
  }
  return frame;
}

void write_imu_csv(const ImuStream& imu, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << "t,gx,gy,gz,ax,ay,az\n" << std::setprecision(17);
  for (const auto& m : imu.samples) {
    out << m.t << ',' << m.gyro.x() << ',' << m.gyro.y() << ',' << m.gyro.z() << ',' << m.accel.x()
        << ',' << m.accel.y() << ',' << m.accel.z() << '\n';
  }
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

ImuStream read_imu_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::string line;
  std::getline(in, line);
  ImuStream imu;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    double v[7];
    int n = 0;
    while (n < 7 && std::getline(ss, cell, ',')) v[n++] = std::stod(cell);
    if (n != 7) throw std::runtime_error(path.string() + ": expected 7 columns");
    imu.samples.push_back({v[0], {v[1], v[2], v[3]}, {v[4], v[5], v[6]}});
  }
  return imu;
}

void write_frames_jsonl(const std::vector<VisionFrame>& frames, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  for (const auto& f : frames) {
    nlohmann::json j;
    j["t"] = f.t;
    auto obs = nlohmann::json::array();
    for (const auto& o : f.observations) obs.push_back({o.id, o.px.u, o.px.v});
    j["obs"] = std::move(obs);
    out << j.dump() << '\n';
  }
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

std::vector<VisionFrame> read_frames_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::vector<VisionFrame> frames;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto j = nlohmann::json::parse(line);
    VisionFrame f;
    f.t = j.at("t").get<double>();
    for (const auto& o : j.at("obs")) {
      f.observations.push_back({o.at(0).get<FeatureId>(), {o.at(1).get<double>(), o.at(2).get<double>()}});
    }
    frames.push_back(std::move(f));
  }
  return frames;
}

void write_cloud_csv(const PointCloud& cloud, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << "id,x,y,z\n" << std::setprecision(17);
  for (const auto& p : cloud.points) {
    out << p.id << ',' << p.X_s.x() << ',' << p.X_s.y() << ',' << p.X_s.z() << '\n';
  }
}

}  // namespace viomc::sensors
