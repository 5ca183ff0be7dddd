#include "viomc/triangulation.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Eigenvalues>

namespace viomc::ekf {

double parallax_angle(const Vec3& ray1, const Vec3& ray2) {
  return std::atan2(ray1.cross(ray2).norm(), ray1.dot(ray2));
}

std::optional<Triangulation> triangulate_angular(const Vec3& bearing1, const Vec3& bearing2,
                                                 const geom::Pose& second_in_first,
                                                 double parallax_min) {
  const Vec3 t = second_in_first.translation;
  const double baseline = t.norm();
  if (baseline < 1e-12) return std::nullopt;

  const Vec3 a = bearing1.normalized();
  const Vec3 b = (second_in_first.rotation * bearing2).normalized();
  if (parallax_angle(a, b) < parallax_min) return std::nullopt;

  // Epipolar plane normals are orthogonal to the baseline; pick the one
  // minimizing (a.n)^2 + (b.n)^2, the summed squared sines of the angles
  // between each ray and the plane.
  const Vec3 t_hat = t / baseline;
  const Vec3 helper = std::abs(t_hat.x()) < 0.9 ? Vec3::UnitX() : Vec3::UnitY();
  const Vec3 u1 = t_hat.cross(helper).normalized();
  const Vec3 u2 = t_hat.cross(u1);
  Eigen::Matrix2d A;
  A << a.dot(u1), a.dot(u2), b.dot(u1), b.dot(u2);
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> eig(A.transpose() * A);
  const Eigen::Vector2d c = eig.eigenvectors().col(0);
  const Vec3 n = (c.x() * u1 + c.y() * u2).normalized();

  Triangulation out;
  out.residual = std::max(0.0, eig.eigenvalues()(0));

  const Vec3 a_c = a - a.dot(n) * n;
  const Vec3 b_c = b - b.dot(n) * n;

  // lambda1 * a_c = t + lambda2 * b_c
  Eigen::Matrix<double, 3, 2> M;
  M.col(0) = a_c;
  M.col(1) = -b_c;
  Eigen::Vector2d lambda;
  if (parallax_angle(a_c, b_c) >= 0.5 * parallax_min) {
    lambda = M.colPivHouseholderQr().solve(t);
    out.point = lambda(0) * a_c;
  } else {
    M.col(0) = a;
    M.col(1) = -b;
    lambda = M.colPivHouseholderQr().solve(t);
    out.point = 0.5 * (lambda(0) * a + t + lambda(1) * b);
    out.midpoint_fallback = true;
  }
  if (!(lambda(0) > 0.0) || !(lambda(1) > 0.0) || !out.point.allFinite()) return std::nullopt;
  return out;
}

}  // namespace viomc::ekf
