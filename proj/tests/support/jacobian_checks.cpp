#include "jacobian_checks.hpp"

#include <algorithm>
#include <random>

#include "oracles.hpp"
#include "viomc/ekf.hpp"

using namespace viomc;
using namespace viomc::ekf;

namespace checks {
namespace {

struct Source {
  std::mt19937_64 gen;
  std::normal_distribution<double> n;
  std::uniform_real_distribution<double> u{-1.0, 1.0};
  explicit Source(std::uint64_t seed) : gen(seed) {}
  Vec3 normal3(double s) { return Vec3(n(gen), n(gen), n(gen)) * s; }
  Vec3 uniform3(double s) { return Vec3(u(gen), u(gen), u(gen)) * s; }
};

// Error-state chart written independently of retract/local_difference:
// R = R_hat Exp(dtheta), additive elsewhere.
MotionState perturb(const MotionState& x, const Eigen::VectorXd& d) {
  MotionState y = x;
  y.R = x.R * oracle::rot_exp(d.segment<3>(0));
  y.T += d.segment<3>(3);
  y.v += d.segment<3>(6);
  y.bg += d.segment<3>(9);
  y.ba += d.segment<3>(12);
  return y;
}

Eigen::VectorXd chart(const MotionState& from, const MotionState& to) {
  Eigen::VectorXd d(15);
  const Eigen::AngleAxisd aa(Mat3(from.R.transpose() * to.R));
  d.segment<3>(0) = aa.angle() * aa.axis();
  d.segment<3>(3) = to.T - from.T;
  d.segment<3>(6) = to.v - from.v;
  d.segment<3>(9) = to.bg - from.bg;
  d.segment<3>(12) = to.ba - from.ba;
  return d;
}

Vec2 pinhole(const geom::CameraIntrinsics& K, const Vec3& X) {
  return {K.fx * X.x() / X.z() + K.cx, K.fy * X.y() / X.z() + K.cy};
}

}  // namespace

double JacobianReport::worst() const { return std::max({transition, noise, measurement}); }

JacobianReport jacobian_errors(int states, std::uint64_t seed, double dt) {
  Source r(seed);
  const Vec3 g(0, 0, -9.81);
  const geom::CameraIntrinsics K;
  std::uniform_real_distribution<double> depth(0.5, 15.0);
  JacobianReport out;
  for (int i = 0; i < states; ++i) {
    MotionState x;
    x.R = oracle::rot_exp(r.uniform3(3.0));
    x.T = r.uniform3(6.0);
    x.v = r.uniform3(3.0);
    x.bg = r.normal3(0.01);
    x.ba = r.normal3(0.1);
    sensors::ImuSample imu;
    imu.gyro = r.normal3(1.0);
    imu.accel = r.normal3(3.0) - g;

    const auto J = transition_jacobians(x, imu, dt);
    const auto x1 = propagate_motion(x, imu, dt, g);
    const auto f = [&](const Eigen::VectorXd& d) { return chart(x1, propagate_motion(perturb(x, d), imu, dt, g)); };
    out.transition =
        std::max(out.transition, oracle::relative_error(J.F, oracle::numeric_jacobian(f, Eigen::VectorXd::Zero(15))));
    const auto fn = [&](const Eigen::VectorXd& n) {
      const ImuNoise w{n.segment<3>(0), n.segment<3>(3), n.segment<3>(6), n.segment<3>(9)};
      return chart(x1, propagate_motion(x, imu, dt, g, w));
    };
    out.noise = std::max(out.noise, oracle::relative_error(J.G, oracle::numeric_jacobian(fn, Eigen::VectorXd::Zero(12))));

    const double z = depth(r.gen);
    const Vec3 X_c(r.u(r.gen) * 0.9 * z, r.u(r.gen) * 0.7 * z, z);
    const Vec3 X_s = x.R * X_c + x.T;
    const auto m = predict_measurement(x.R, x.T, X_s, K, 0.05);
    if (!m) {
      out.measurement = std::numeric_limits<double>::infinity();
      continue;
    }
    // Unknowns: [dtheta, dT, dX].
    const auto h = [&](const Eigen::VectorXd& d) -> Eigen::VectorXd {
      const Mat3 R = x.R * oracle::rot_exp(d.segment<3>(0));
      return pinhole(K, R.transpose() * (X_s + d.segment<3>(6) - x.T - d.segment<3>(3)));
    };
    const Eigen::MatrixXd N = oracle::numeric_jacobian(h, Eigen::VectorXd::Zero(9));
    Eigen::Matrix<double, 2, 9> H;
    H << m->H_theta, m->H_pos, m->H_feature;
    out.measurement = std::max({out.measurement, oracle::relative_error(H, N),
                                oracle::relative_error(m->H_theta, N.leftCols(3)),
                                oracle::relative_error(m->H_pos, N.middleCols(3, 3)),
                                oracle::relative_error(m->H_feature, N.rightCols(3))});
  }
  return out;
}

}  // namespace checks
