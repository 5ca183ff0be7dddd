#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "viomc/geom.hpp"

using namespace viomc;
using namespace viomc::geom;

namespace {

constexpr double kPi = std::numbers::pi;

Vec3 random_rotation_vector(std::mt19937_64& gen, double max_angle) {
  std::normal_distribution<double> n;
  std::uniform_real_distribution<double> u(0.0, max_angle);
  return Vec3(n(gen), n(gen), n(gen)).normalized() * u(gen);
}

}  // namespace

TEST(Rotation, ExpAtOriginIsIdentity) {
  EXPECT_TRUE(exp_rotation(Vec3::Zero()).isApprox(Mat3::Identity(), 0.0));
}

TEST(Rotation, QuarterTurnAboutZ) {
  const Mat3 R = exp_rotation(Vec3(0, 0, kPi / 2));
  EXPECT_LT((R * Vec3::UnitX() - Vec3::UnitY()).norm(), 1e-15);
}

TEST(Rotation, LogOfIdentity) { EXPECT_EQ(log_rotation(Mat3::Identity()), Vec3::Zero()); }

TEST(Rotation, LogRecoversKnownVector) {
  const Vec3 w(0.1, 0.2, 0.3);
  EXPECT_LT((log_rotation(exp_rotation(w)) - w).norm(), 1e-9);
}

TEST(Rotation, LogAtPiUsesPositiveFirstComponent) {
  Mat3 R = Vec3(1, -1, -1).asDiagonal();  // pi about x
  const Vec3 w = log_rotation(R);
  EXPECT_NEAR(w.x(), kPi, 1e-12);
  EXPECT_NEAR(w.y(), 0.0, 1e-12);
  EXPECT_NEAR(w.z(), 0.0, 1e-12);

  // The same rotation written with the opposite axis.
  const Vec3 w2 = log_rotation(exp_rotation(Vec3(0, -kPi, 0)));
  EXPECT_GT(w2.y(), 0.0);
  EXPECT_NEAR(w2.norm(), kPi, 1e-9);
}

TEST(Rotation, LogRejectsNonRotation) {
  EXPECT_THROW(log_rotation(2.0 * Mat3::Identity()), std::invalid_argument);
  EXPECT_THROW(log_rotation(Vec3(1, 1, -1).asDiagonal().toDenseMatrix()), std::invalid_argument);
}

TEST(Rotation, RoundTripUpToPi) {
  std::mt19937_64 gen(7);
  for (int i = 0; i < 2000; ++i) {
    const Vec3 w = random_rotation_vector(gen, kPi - 1e-3);
    const Mat3 R = exp_rotation(w);
    ASSERT_TRUE(is_rotation(R, 1e-9));
    ASSERT_LT((log_rotation(R) - w).norm(), 1e-9) << w.transpose();
  }
}

TEST(Rotation, ExpMatchesAngleAxis) {
  std::mt19937_64 gen(8);
  for (int i = 0; i < 200; ++i) {
    const Vec3 w = random_rotation_vector(gen, kPi);
    EXPECT_LT((exp_rotation(w) - oracle::rot_exp(w)).norm(), 1e-13);
  }
}

TEST(Rotation, SmallAnglesStayAccurate) {
  const Vec3 w(1e-10, -2e-10, 3e-10);
  EXPECT_LT((exp_rotation(w) - oracle::rot_exp(w)).norm(), 1e-18);
  EXPECT_LT((log_rotation(exp_rotation(w)) - w).norm(), 1e-18);
}

TEST(Rotation, RightJacobianMatchesFiniteDifferences) {
  std::mt19937_64 gen(9);
  for (int i = 0; i < 50; ++i) {
    const Vec3 w = random_rotation_vector(gen, 2.5);
    const Mat3 Jr = right_jacobian(w);
    // Exp(w + d) = Exp(w) Exp(Jr d)  =>  d/dd log(Exp(w)^T Exp(w + d)) = Jr
    const Mat3 Rw = exp_rotation(w);
    const auto f = [&](const Eigen::VectorXd& d) -> Eigen::VectorXd {
      return log_rotation(Rw.transpose() * exp_rotation(w + Vec3(d)));
    };
    EXPECT_LT(oracle::relative_error(Jr, oracle::numeric_jacobian(f, Eigen::VectorXd::Zero(3))), 1e-7);
  }
}

TEST(Rotation, SkewIsCrossProduct) {
  const Vec3 a(1, -2, 3), b(0.5, 4, -1);
  EXPECT_LT((skew(a) * b - a.cross(b)).norm(), 1e-15);
}

TEST(Rotation, OrthonormalizeRestoresGroup) {
  Mat3 R = exp_rotation(Vec3(0.3, -0.2, 1.0));
  R(0, 1) += 1e-7;
  EXPECT_FALSE(is_rotation(R, 1e-9));
  EXPECT_TRUE(is_rotation(orthonormalize(R), 1e-12));
}

TEST(PoseOps, InverseAndComposition) {
  const Pose a{exp_rotation(Vec3(0.1, 0.2, -0.3)), Vec3(1, 2, 3)};
  const Pose b{exp_rotation(Vec3(-0.4, 0.0, 0.2)), Vec3(-1, 0.5, 2)};
  const Pose id = a * a.inverse();
  EXPECT_LT((id.rotation - Mat3::Identity()).norm(), 1e-15);
  EXPECT_LT(id.translation.norm(), 1e-15);
  const Vec3 x(0.3, -0.7, 2.0);
  EXPECT_LT(((a * b).apply(x) - a.apply(b.apply(x))).norm(), 1e-14);
}

TEST(Camera, OpticalAxisHitsPrincipalPoint) {
  const CameraIntrinsics K;
  const auto p = project(Vec3(0, 0, 1), K);
  ASSERT_TRUE(p);
  EXPECT_DOUBLE_EQ(p->u, 320.0);
  EXPECT_DOUBLE_EQ(p->v, 240.0);
}

TEST(Camera, UnitLateralOffset) {
  const auto p = project(Vec3(1, 0, 1), CameraIntrinsics{});
  ASSERT_TRUE(p);
  EXPECT_DOUBLE_EQ(p->u, 595.0);
  EXPECT_DOUBLE_EQ(p->v, 240.0);
}

TEST(Camera, BehindCameraIsNotVisible) {
  EXPECT_FALSE(project(Vec3(0, 0, -1), CameraIntrinsics{}));
  EXPECT_FALSE(project(Vec3(1, 1, 0), CameraIntrinsics{}));
}

TEST(Camera, BearingExamples) {
  const CameraIntrinsics K;
  EXPECT_LT((bearing({320, 240}, K) - Vec3::UnitZ()).norm(), 1e-15);
  EXPECT_LT((bearing({595, 240}, K) - Vec3(1, 0, 1).normalized()).norm(), 1e-15);
}

TEST(Camera, BearingProjectRoundTrip) {
  const CameraIntrinsics K;
  std::mt19937_64 gen(11);
  std::uniform_real_distribution<double> u(0.0, K.width), v(0.0, K.height);
  for (int i = 0; i < 100; ++i) {
    const PixelPoint p{u(gen), v(gen)};
    const Vec3 b = bearing(p, K);
    EXPECT_NEAR(b.norm(), 1.0, 1e-15);
    for (double z : {0.5, 1.0, 10.0}) {
      const auto q = project(b / b.z() * z, K);
      ASSERT_TRUE(q);
      EXPECT_NEAR(q->u, p.u, 1e-9);
      EXPECT_NEAR(q->v, p.v, 1e-9);
    }
  }
}

TEST(Camera, InImageBounds) {
  const CameraIntrinsics K;
  EXPECT_TRUE(in_image({0.0, 0.0}, K));
  EXPECT_TRUE(in_image({639.999, 479.999}, K));
  EXPECT_FALSE(in_image({640.0, 10.0}, K));
  EXPECT_FALSE(in_image({10.0, -0.001}, K));
}

TEST(Camera, ValidateRejectsBadIntrinsics) {
  CameraIntrinsics K;
  K.fx = 0.0;
  EXPECT_THROW(K.validate(), std::invalid_argument);
  K = {};
  K.cx = 700.0;
  EXPECT_THROW(K.validate(), std::invalid_argument);
  EXPECT_NO_THROW(CameraIntrinsics{}.validate());
}

TEST(Camera, ProjectJacobianMatchesFiniteDifferences) {
  const CameraIntrinsics K;
  const Vec3 X(0.4, -0.3, 2.5);
  const auto f = [&](const Eigen::VectorXd& x) -> Eigen::VectorXd { return project(Vec3(x), K)->vec(); };
  EXPECT_LT(oracle::relative_error(project_jacobian(X, K), oracle::numeric_jacobian(f, X)), 1e-8);
}

class Alignment : public ::testing::Test {
 protected:
  void SetUp() override {
    std::mt19937_64 gen(3);
    std::normal_distribution<double> n(0.0, 2.0);
    for (int i = 0; i < 40; ++i) {
      gt.push_back({exp_rotation(Vec3(n(gen), n(gen), n(gen)) * 0.1), Vec3(n(gen), n(gen), n(gen))});
    }
  }
  std::vector<Pose> gt;
};

TEST_F(Alignment, IdenticalSequencesGiveIdentity) {
  const Pose a = umeyama_align(std::span<const Pose>(gt), std::span<const Pose>(gt));
  EXPECT_LT((a.rotation - Mat3::Identity()).norm(), 1e-12);
  EXPECT_LT(a.translation.norm(), 1e-12);
}

TEST_F(Alignment, PureOffsetIsRecovered) {
  std::vector<Pose> est = gt;
  for (auto& p : est) p.translation += Vec3(1, 2, 3);
  const Pose a = umeyama_align(std::span<const Pose>(est), std::span<const Pose>(gt));
  EXPECT_LT((a.rotation - Mat3::Identity()).norm(), 1e-12);
  EXPECT_LT((a.translation - Vec3(-1, -2, -3)).norm(), 1e-12);
}

TEST_F(Alignment, RotationAboutZIsInverted) {
  const Mat3 Rz = exp_rotation(Vec3(0, 0, kPi / 6));
  std::vector<Pose> est = gt;
  for (auto& p : est) p.translation = Rz * p.translation;
  const Pose a = umeyama_align(std::span<const Pose>(est), std::span<const Pose>(gt));
  EXPECT_LT((a.rotation - Rz.transpose()).norm(), 1e-12);
  double worst = 0.0;
  for (std::size_t i = 0; i < gt.size(); ++i) {
    worst = std::max(worst, (a.apply(est[i].translation) - gt[i].translation).norm());
  }
  EXPECT_LT(worst, 1e-9);
}

TEST_F(Alignment, MatchesHornOnNoisyData) {
  std::mt19937_64 gen(5);
  std::normal_distribution<double> n(0.0, 0.05);
  const Pose rigid{exp_rotation(Vec3(0.3, -1.2, 2.0)), Vec3(4, -5, 6)};
  std::vector<Vec3> est, truth;
  for (const auto& p : gt) {
    truth.push_back(p.translation);
    est.push_back(rigid.apply(p.translation) + Vec3(n(gen), n(gen), n(gen)));
  }
  const Pose a = umeyama_align(std::span<const Vec3>(est), std::span<const Vec3>(truth));
  const Eigen::Matrix4d h = oracle::horn_align(est, truth);
  EXPECT_LT((a.rotation - h.topLeftCorner<3, 3>()).norm(), 1e-9);
  EXPECT_LT((a.translation - h.topRightCorner<3, 1>()).norm(), 1e-9);
  EXPECT_TRUE(is_rotation(a.rotation, 1e-9));
}

TEST(AlignmentErrors, DegenerateSetsAreRejected) {
  std::vector<Vec3> line{{0, 0, 0}, {1, 0, 0}, {2, 0, 0}, {3, 0, 0}};
  EXPECT_THROW(umeyama_align(std::span<const Vec3>(line), std::span<const Vec3>(line)), AlignmentError);
  std::vector<Vec3> two{{0, 0, 0}, {1, 0, 0}};
  EXPECT_THROW(umeyama_align(std::span<const Vec3>(two), std::span<const Vec3>(two)), std::invalid_argument);
}
