#pragma once

#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace viomc {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat2 = Eigen::Matrix2d;
using Mat3 = Eigen::Matrix3d;

using FeatureId = int;

namespace geom {

/// Raised when a point set cannot determine a rigid alignment.
class AlignmentError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

Mat3 skew(const Vec3& w);

/// Axis-angle exponential. Exact series limit at the origin.
Mat3 exp_rotation(const Vec3& w);

/// Principal logarithm, ||w|| <= pi. At an angle of exactly pi the first
/// nonzero axis component is made positive. Throws std::invalid_argument
/// if R is not orthonormal with det +1 to 1e-6.
Vec3 log_rotation(const Mat3& R);

/// Right Jacobian of SO(3): Exp(w + d) ~= Exp(w) Exp(Jr(w) d).
Mat3 right_jacobian(const Vec3& w);

bool is_rotation(const Mat3& R, double tol = 1e-9);

/// Re-orthonormalize a rotation that accumulated rounding drift.
Mat3 orthonormalize(const Mat3& R);

/// Rigid transform x_parent = rotation * x_child + translation.
struct Pose {
  Mat3 rotation = Mat3::Identity();
  Vec3 translation = Vec3::Zero();

  static Pose identity() { return {}; }

  Pose inverse() const;
  Vec3 apply(const Vec3& x) const { return rotation * x + translation; }
  Pose operator*(const Pose& other) const;
};

struct CameraIntrinsics {
  double fx = 275.0;
  double fy = 275.0;
  double cx = 320.0;
  double cy = 240.0;
  int width = 640;
  int height = 480;

  /// Throws std::invalid_argument on non-positive focal lengths or a
  /// principal point outside the image.
  void validate() const;
};

struct PixelPoint {
  double u = 0.0;
  double v = 0.0;

  Vec2 vec() const { return {u, v}; }
  static PixelPoint from(const Vec2& p) { return {p.x(), p.y()}; }
};

bool in_image(const PixelPoint& p, const CameraIntrinsics& K);

/// Pinhole projection without distortion. Returns nullopt for points at or
/// behind the camera (z <= 0).
std::optional<PixelPoint> project(const Vec3& X_c, const CameraIntrinsics& K);

/// Jacobian of project() with respect to X_c. Requires z > 0.
Eigen::Matrix<double, 2, 3> project_jacobian(const Vec3& X_c, const CameraIntrinsics& K);

/// Unit ray through a pixel, camera frame.
Vec3 bearing(const PixelPoint& p, const CameraIntrinsics& K);

/// Closed-form least-squares rigid alignment (SVD, no scale). The returned
/// transform maps estimated translations onto the ground truth:
/// gt ~= align.apply(est).
Pose umeyama_align(std::span<const Vec3> estimated, std::span<const Vec3> ground_truth);
Pose umeyama_align(std::span<const Pose> estimated, std::span<const Pose> ground_truth);

std::vector<Vec3> translations(std::span<const Pose> poses);

}  // namespace geom
}  // namespace viomc
