#include "viomc/trajgen.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>
#include <string>

#include "viomc/rng.hpp"

namespace viomc::trajgen {
namespace {

constexpr double kPi = std::numbers::pi;

// Rotation vector for R closest to the previous (continuous) vector, so the
// components evolve without the jump at angle pi of the principal log.
Vec3 unwrap_rotation(const Mat3& R, const Vec3& previous) {
  const Vec3 principal = geom::log_rotation(R);
  const double theta = principal.norm();
  Vec3 axis;
  if (theta > 1e-9) {
    axis = principal / theta;
  } else if (previous.norm() > 1.0) {
    axis = previous.normalized();
  } else {
    return principal;
  }
  Vec3 best = principal;
  double best_dist = (principal - previous).squaredNorm();
  for (int k : {-2, -1, 1, 2}) {
    const Vec3 cand = axis * (theta + 2.0 * kPi * k);
    const double d = (cand - previous).squaredNorm();
    if (d < best_dist) {
      best_dist = d;
      best = cand;
    }
  }
  return best;
}

bool within(const Vec3& x, const Vec3& lo, const Vec3& hi) {
  return (x.array() >= lo.array()).all() && (x.array() <= hi.array()).all();
}

Vec3 parse_vec3(const std::vector<double>& row, std::size_t offset) {
  return {row[offset], row[offset + 1], row[offset + 2]};
}

}  // namespace

void TrajectoryConfig::validate() const {
  if (!(sigma_alpha >= 0.0) || !(sigma_omega >= 0.0)) {
    throw std::invalid_argument("trajectory: random-walk deviations must be non-negative");
  }
  if (!(v_min.array() < v_max.array()).all() || !(t_min.array() < t_max.array()).all()) {
    throw std::invalid_argument("trajectory: lower bounds must be below upper bounds");
  }
  if (!(imu_rate > 0.0) || !(duration > 0.0)) {
    throw std::invalid_argument("trajectory: rate and duration must be positive");
  }
  if (!(w_bound > 0.0)) {
    throw std::invalid_argument("trajectory: rotation bound must be positive");
  }
  if (!within(initial_T, t_min, t_max) || !within(initial_v, v_min, v_max) ||
      initial_w.cwiseAbs().maxCoeff() > w_bound) {
    throw std::invalid_argument("trajectory: initial state outside the bounds");
  }
}

std::size_t TrajectoryConfig::sample_count() const {
  return static_cast<std::size_t>(std::llround(duration * imu_rate)) + 1;
}

Trajectory generate_brownian_trajectory(const TrajectoryConfig& cfg) {
  cfg.validate();
  Rng rng(derive_seed({static_cast<std::uint64_t>(Stream::trajectory), cfg.seed}));

  const std::size_t n = cfg.sample_count();
  const double dt = 1.0 / cfg.imu_rate;

  Trajectory traj;
  traj.rate = cfg.imu_rate;
  traj.samples.reserve(n);

  Vec3 w = cfg.initial_w;
  Mat3 R = geom::exp_rotation(w);
  Vec3 T = cfg.initial_T;
  Vec3 v = cfg.initial_v;
  Vec3 alpha = cfg.initial_alpha;
  Vec3 omega = cfg.initial_omega;

  for (std::size_t k = 0; k < n; ++k) {
    GroundTruthSample s;
    s.t = static_cast<double>(k) * dt;
    s.w_sb = w;
    s.R_sb = R;
    s.T_sb = T;
    s.v_sb = v;

    if (k + 1 == n) {
      s.alpha_s = alpha;
      s.omega_s = omega;
    } else {
      // Drift is added before the state is integrated.
      alpha += rng.normal3(cfg.sigma_alpha);
      omega += rng.normal3(cfg.sigma_omega);

      Mat3 R_next = geom::exp_rotation(omega * dt) * R;
      Vec3 w_next = unwrap_rotation(R_next, w);
      if (w_next.cwiseAbs().maxCoeff() > cfg.w_bound) {
        for (int i = 0; i < 3; ++i) {
          if (std::abs(w_next[i]) > cfg.w_bound) omega[i] = -omega[i];
        }
        R_next = geom::exp_rotation(omega * dt) * R;
        w_next = unwrap_rotation(R_next, w);
        if (w_next.cwiseAbs().maxCoeff() > cfg.w_bound) w_next = geom::log_rotation(R_next);
      }
      s.omega_s = omega;

      const Vec3 applied = alpha;
      Vec3 v_next = v + applied * dt;
      std::array<bool, 3> clamped{false, false, false};
      for (int i = 0; i < 3; ++i) {
        if (v_next[i] > cfg.v_max[i]) {
          v_next[i] = cfg.v_max[i];
          clamped[i] = true;
          if (alpha[i] > 0.0) alpha[i] = -alpha[i];
        } else if (v_next[i] < cfg.v_min[i]) {
          v_next[i] = cfg.v_min[i];
          clamped[i] = true;
          if (alpha[i] < 0.0) alpha[i] = -alpha[i];
        }
      }
      Vec3 T_next = T + v_next * dt;
      for (int i = 0; i < 3; ++i) {
        if (T_next[i] > cfg.t_max[i]) {
          T_next[i] = cfg.t_max[i];
          v_next[i] = (T_next[i] - T[i]) / dt;
          clamped[i] = true;
          if (alpha[i] > 0.0) alpha[i] = -alpha[i];
        } else if (T_next[i] < cfg.t_min[i]) {
          T_next[i] = cfg.t_min[i];
          v_next[i] = (T_next[i] - T[i]) / dt;
          clamped[i] = true;
          if (alpha[i] < 0.0) alpha[i] = -alpha[i];
        }
      }
      s.alpha_s = applied;
      for (int i = 0; i < 3; ++i) {
        if (clamped[i]) s.alpha_s[i] = (v_next[i] - v[i]) / dt;
      }

      traj.path_length += (T_next - T).norm();
      R = geom::orthonormalize(R_next);
      w = w_next;
      v = v_next;
      T = T_next;
    }
    s.alpha_b = s.R_sb.transpose() * s.alpha_s;
    s.omega_b = s.R_sb.transpose() * s.omega_s;
    traj.samples.push_back(s);
  }
  return traj;
}

namespace {

double max_cross_norm2(std::span<const Vec3> f, const Vec3& x) {
  double m = 0.0;
  for (const auto& v : f) {
    const double d = v.dot(x);
    m = std::max(m, v.squaredNorm() - d * d);
  }
  return m;
}

std::vector<Vec3> fibonacci_sphere(int count) {
  std::vector<Vec3> pts;
  pts.reserve(count);
  const double golden = kPi * (3.0 - std::sqrt(5.0));
  for (int i = 0; i < count; ++i) {
    const double z = 1.0 - (2.0 * i + 1.0) / count;
    const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
    const double phi = golden * i;
    pts.emplace_back(r * std::cos(phi), r * std::sin(phi), z);
  }
  return pts;
}

// Compass search over the sphere in a tangent chart at the incumbent. The
// direction set rotates by the golden angle at each contraction so narrow
// valleys of the max-of-norms objective are not missed.
std::pair<Vec3, double> refine(std::span<const Vec3> f, Vec3 x, double value) {
  constexpr int kDirections = 8;
  const double golden = kPi * (3.0 - std::sqrt(5.0));
  double step = 0.15;
  double phase = 0.0;
  int evaluations = 0;
  while (step > 1e-10 && evaluations < 20000) {
    const Vec3 helper = std::abs(x.x()) < 0.9 ? Vec3::UnitX() : Vec3::UnitY();
    const Vec3 e1 = x.cross(helper).normalized();
    const Vec3 e2 = x.cross(e1);
    bool improved = false;
    for (int d = 0; d < kDirections; ++d) {
      const double ang = phase + 2.0 * kPi * d / kDirections;
      const Vec3 cand = (x + step * (std::cos(ang) * e1 + std::sin(ang) * e2)).normalized();
      const double val = max_cross_norm2(f, cand);
      ++evaluations;
      if (val < value) {
        value = val;
        x = cand;
        improved = true;
        break;
      }
    }
    if (!improved) {
      step *= 0.5;
      phase += golden;
    }
  }
  return {x, value};
}

}  // namespace

double minimum_excitation(std::span<const Vec3> f) {
  if (f.empty()) {
    throw std::invalid_argument("minimum_excitation: empty interval");
  }
  const auto grid = fibonacci_sphere(1000);
  std::vector<std::pair<double, int>> scored;
  scored.reserve(grid.size());
  for (int i = 0; i < static_cast<int>(grid.size()); ++i) {
    scored.emplace_back(max_cross_norm2(f, grid[i]), i);
  }
  constexpr std::size_t kStarts = 4;
  std::partial_sort(scored.begin(), scored.begin() + kStarts, scored.end());

  double best = scored.front().first;
  for (std::size_t s = 0; s < kStarts; ++s) {
    const auto [x, val] = refine(f, grid[scored[s].second], scored[s].first);
    best = std::min(best, val);
  }
  return std::sqrt(std::max(best, 0.0));
}

ExcitationReport excitation_report(const Trajectory& traj) {
  const auto& s = traj.samples;
  if (s.size() < 4) {
    throw std::invalid_argument("excitation_report: need at least 4 samples");
  }
  const double dt = traj.dt();
  std::vector<Vec3> omega, domega, ddomega, dalpha;
  omega.reserve(s.size());
  for (const auto& x : s) omega.push_back(x.omega_s);
  for (std::size_t k = 1; k + 1 < s.size(); ++k) {
    domega.push_back((s[k + 1].omega_s - s[k - 1].omega_s) / (2.0 * dt));
    ddomega.push_back((s[k + 1].omega_s - 2.0 * s[k].omega_s + s[k - 1].omega_s) / (dt * dt));
    dalpha.push_back((s[k + 1].alpha_s - s[k - 1].alpha_s) / (2.0 * dt));
  }
  ExcitationReport r;
  r.angular_velocity = minimum_excitation(omega);
  r.angular_acceleration = minimum_excitation(domega);
  r.angular_jerk = minimum_excitation(ddomega);
  r.linear_jerk = minimum_excitation(dalpha);
  return r;
}

Trajectory rebuild(std::vector<GroundTruthSample> samples, double rate) {
  Trajectory traj;
  traj.rate = rate;
  for (std::size_t k = 0; k < samples.size(); ++k) {
    auto& s = samples[k];
    s.R_sb = geom::exp_rotation(s.w_sb);
    s.alpha_b = s.R_sb.transpose() * s.alpha_s;
    s.omega_b = s.R_sb.transpose() * s.omega_s;
    if (k > 0) traj.path_length += (s.T_sb - samples[k - 1].T_sb).norm();
  }
  traj.samples = std::move(samples);
  return traj;
}

void write_trajectory_csv(const Trajectory& traj, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << "t,wx,wy,wz,Tx,Ty,Tz,vx,vy,vz,alpha_sx,alpha_sy,alpha_sz,omega_sx,omega_sy,omega_sz\n";
  out << std::setprecision(17);
  for (const auto& s : traj.samples) {
    out << s.t;
    for (const Vec3* v : {&s.w_sb, &s.T_sb, &s.v_sb, &s.alpha_s, &s.omega_s}) {
      out << ',' << v->x() << ',' << v->y() << ',' << v->z();
    }
    out << '\n';
  }
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

Trajectory read_trajectory_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error(path.string() + ": missing header");
  std::vector<GroundTruthSample> samples;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) row.push_back(std::stod(cell));
    if (row.size() != 16) {
      throw std::runtime_error(path.string() + ":" + std::to_string(lineno) + ": expected 16 columns");
    }
    GroundTruthSample s;
    s.t = row[0];
    s.w_sb = parse_vec3(row, 1);
    s.T_sb = parse_vec3(row, 4);
    s.v_sb = parse_vec3(row, 7);
    s.alpha_s = parse_vec3(row, 10);
    s.omega_s = parse_vec3(row, 13);
    samples.push_back(s);
  }
  double rate = 400.0;
  if (samples.size() >= 2) rate = std::round(1e6 / (samples[1].t - samples[0].t)) / 1e6;
  return rebuild(std::move(samples), rate);
}

}  // namespace viomc::trajgen
