// Analytic Jacobians of the filter against central differences of the
// nonlinear functions they linearise, at random states.

#include <random>

#include <gtest/gtest.h>

#include "jacobian_checks.hpp"
#include "oracles.hpp"
#include "viomc/ekf.hpp"

using namespace viomc;
using namespace viomc::ekf;

namespace {

constexpr int kStates = 100;
constexpr double kTol = 1e-5;

struct RandomSource {
  std::mt19937_64 gen{2024};
  std::uniform_real_distribution<double> u{-1.0, 1.0};
  Vec3 uniform3(double s) { return Vec3(u(gen), u(gen), u(gen)) * s; }
};

}  // namespace

TEST(Jacobians, PropagationAndMeasurement) {
  const auto r = checks::jacobian_errors(kStates, 2024);
  EXPECT_LT(r.transition, kTol);
  EXPECT_LT(r.noise, kTol);
  EXPECT_LT(r.measurement, kTol);
}

TEST(Jacobians, LongStep) {
  // A large step makes the rotation-bias coupling strongly nonlinear.
  const auto r = checks::jacobian_errors(20, 7, 0.2);
  EXPECT_LT(r.transition, kTol);
  EXPECT_LT(r.noise, kTol);
}

TEST(Jacobians, PromotionCrossCovariance) {
  // A promoted feature inherits the pose error through X = R X_c + T; its
  // covariance rows must equal d X / d(dtheta, dT) times the pose rows.
  RandomSource r;
  FilterConfig cfg;
  for (int i = 0; i < 20; ++i) {
    trajgen::GroundTruthSample truth;
    truth.R_sb = oracle::rot_exp(r.uniform3(3.0));
    truth.T_sb = r.uniform3(6.0);
    const MotionState x{truth.R_sb, truth.T_sb, Vec3::Zero(), Vec3::Zero(), Vec3::Zero()};
    auto state = init_filter(cfg, truth);
    Eigen::MatrixXd A = Eigen::MatrixXd::Random(15, 15) * 1e-2;
    state.P = A * A.transpose();

    const Vec3 X_c(0.3, -0.2, 4.0);
    TrackTable tracks;
    auto& tr = tracks.insert_candidate(1, 0.0);
    tr.seeded = true;
    tr.X_s = x.R * X_c + x.T;
    tr.cov = Mat3::Zero();
    ASSERT_EQ(select_in_state_features(state, tracks, cfg, 0.0), 1);

    const auto g = [&](const Eigen::VectorXd& d) -> Eigen::VectorXd {
      return x.R * oracle::rot_exp(d.segment<3>(0)) * X_c + x.T + d.segment<3>(3);
    };
    const Eigen::MatrixXd J = oracle::numeric_jacobian(g, Eigen::VectorXd::Zero(6));
    const Eigen::MatrixXd expected_cross = J * state.P.topLeftCorner(6, 15);
    EXPECT_LT(oracle::relative_error(state.P.block(15, 0, 3, 15), expected_cross), kTol);
    EXPECT_LT(oracle::relative_error(state.P.block(15, 15, 3, 3), J * state.P.topLeftCorner(6, 6) * J.transpose()),
              kTol);
  }
}
