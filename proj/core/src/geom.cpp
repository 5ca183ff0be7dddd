#include "viomc/geom.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <Eigen/SVD>

namespace viomc::geom {

Mat3 skew(const Vec3& w) {
  Mat3 S;
  S << 0.0, -w.z(), w.y(),
       w.z(), 0.0, -w.x(),
       -w.y(), w.x(), 0.0;
  return S;
}

Mat3 exp_rotation(const Vec3& w) {
  const double theta2 = w.squaredNorm();
  const Mat3 W = skew(w);
  double a, b;
  if (theta2 < 1e-12) {
    // Taylor terms beyond theta^4 are below double precision here.
    a = 1.0 - theta2 / 6.0 + theta2 * theta2 / 120.0;
    b = 0.5 - theta2 / 24.0 + theta2 * theta2 / 720.0;
  } else {
    const double theta = std::sqrt(theta2);
    a = std::sin(theta) / theta;
    b = (1.0 - std::cos(theta)) / theta2;
  }
  return Mat3::Identity() + a * W + b * W * W;
}

Vec3 log_rotation(const Mat3& R) {
  if (!is_rotation(R, 1e-6)) {
    throw std::invalid_argument("log_rotation: input is not a rotation matrix");
  }
  const double c = std::clamp((R.trace() - 1.0) / 2.0, -1.0, 1.0);
  // s = sin(theta) * axis
  const Vec3 s = 0.5 * Vec3(R(2, 1) - R(1, 2), R(0, 2) - R(2, 0), R(1, 0) - R(0, 1));
  const double sn = s.norm();
  const double theta = std::atan2(sn, c);

  if (theta < 1e-6) {
    return s * (1.0 + sn * sn / 6.0);
  }
  if (theta < std::numbers::pi - 1e-2) {
    return s * (theta / sn);
  }

  // Near pi the antisymmetric part vanishes; recover the axis from the
  // symmetric part, which equals cos(theta) I + (1 - cos(theta)) a a^T.
  const Mat3 B = 0.5 * (R + R.transpose()) - c * Mat3::Identity();
  int i = 0;
  B.diagonal().maxCoeff(&i);
  Vec3 axis = B.col(i) / std::sqrt(std::max(B(i, i), 1e-300));
  axis.normalize();
  if (sn > 1e-10) {
    if (axis.dot(s) < 0.0) axis = -axis;
  } else {
    for (int k = 0; k < 3; ++k) {
      if (std::abs(axis[k]) > 1e-12) {
        if (axis[k] < 0.0) axis = -axis;
        break;
      }
    }
  }
  return theta * axis;
}

Mat3 right_jacobian(const Vec3& w) {
  const double theta2 = w.squaredNorm();
  const Mat3 W = skew(w);
  if (theta2 < 1e-10) {
    return Mat3::Identity() - 0.5 * W + W * W / 6.0;
  }
  const double theta = std::sqrt(theta2);
  return Mat3::Identity() - (1.0 - std::cos(theta)) / theta2 * W +
         (theta - std::sin(theta)) / (theta2 * theta) * W * W;
}

bool is_rotation(const Mat3& R, double tol) {
  if (!R.allFinite()) return false;
  const double ortho = (R.transpose() * R - Mat3::Identity()).cwiseAbs().maxCoeff();
  return ortho <= tol && std::abs(R.determinant() - 1.0) <= tol;
}

Mat3 orthonormalize(const Mat3& R) {
  Eigen::JacobiSVD<Mat3> svd(R, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Mat3 out = svd.matrixU() * svd.matrixV().transpose();
  if (out.determinant() < 0.0) {
    Mat3 U = svd.matrixU();
    U.col(2) *= -1.0;
    out = U * svd.matrixV().transpose();
  }
  return out;
}

Pose Pose::inverse() const {
  Pose out;
  out.rotation = rotation.transpose();
  out.translation = -(out.rotation * translation);
  return out;
}

Pose Pose::operator*(const Pose& other) const {
  Pose out;
  out.rotation = rotation * other.rotation;
  out.translation = rotation * other.translation + translation;
  return out;
}

void CameraIntrinsics::validate() const {
  if (!(fx > 0.0) || !(fy > 0.0)) {
    throw std::invalid_argument("camera: focal lengths must be positive");
  }
  if (width <= 0 || height <= 0) {
    throw std::invalid_argument("camera: image size must be positive");
  }
  if (!(cx > 0.0 && cx < width) || !(cy > 0.0 && cy < height)) {
    throw std::invalid_argument("camera: principal point outside the image");
  }
}

bool in_image(const PixelPoint& p, const CameraIntrinsics& K) {
  return p.u >= 0.0 && p.u < K.width && p.v >= 0.0 && p.v < K.height;
}

std::optional<PixelPoint> project(const Vec3& X_c, const CameraIntrinsics& K) {
  if (!(X_c.z() > 0.0)) return std::nullopt;
  return PixelPoint{K.fx * X_c.x() / X_c.z() + K.cx, K.fy * X_c.y() / X_c.z() + K.cy};
}

Eigen::Matrix<double, 2, 3> project_jacobian(const Vec3& X_c, const CameraIntrinsics& K) {
  const double iz = 1.0 / X_c.z();
  Eigen::Matrix<double, 2, 3> J;
  J << K.fx * iz, 0.0, -K.fx * X_c.x() * iz * iz,
       0.0, K.fy * iz, -K.fy * X_c.y() * iz * iz;
  return J;
}

Vec3 bearing(const PixelPoint& p, const CameraIntrinsics& K) {
  return Vec3((p.u - K.cx) / K.fx, (p.v - K.cy) / K.fy, 1.0).normalized();
}

Pose umeyama_align(std::span<const Vec3> estimated, std::span<const Vec3> ground_truth) {
  if (estimated.size() != ground_truth.size()) {
    throw std::invalid_argument("umeyama_align: sequences differ in length");
  }
  const auto n = estimated.size();
  if (n < 3) {
    throw std::invalid_argument("umeyama_align: need at least 3 samples");
  }
  Vec3 mu_e = Vec3::Zero();
  Vec3 mu_g = Vec3::Zero();
  for (std::size_t i = 0; i < n; ++i) {
    mu_e += estimated[i];
    mu_g += ground_truth[i];
  }
  mu_e /= static_cast<double>(n);
  mu_g /= static_cast<double>(n);

  Mat3 cov = Mat3::Zero();
  double spread = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    cov += (ground_truth[i] - mu_g) * (estimated[i] - mu_e).transpose();
    spread += (estimated[i] - mu_e).squaredNorm() + (ground_truth[i] - mu_g).squaredNorm();
  }
  cov /= static_cast<double>(n);

  Eigen::JacobiSVD<Mat3> svd(cov, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Vec3 sv = svd.singularValues();
  const double scale = spread / static_cast<double>(n);
  if (!(sv(0) > 1e-12 * std::max(scale, 1e-300)) || sv(1) <= 1e-10 * sv(0)) {
    throw AlignmentError("umeyama_align: degenerate (collinear or coincident) point set");
  }
  Mat3 D = Mat3::Identity();
  if (svd.matrixU().determinant() * svd.matrixV().determinant() < 0.0) D(2, 2) = -1.0;

  Pose out;
  out.rotation = svd.matrixU() * D * svd.matrixV().transpose();
  out.translation = mu_g - out.rotation * mu_e;
  return out;
}

std::vector<Vec3> translations(std::span<const Pose> poses) {
  std::vector<Vec3> out;
  out.reserve(poses.size());
  for (const auto& p : poses) out.push_back(p.translation);
  return out;
}

Pose umeyama_align(std::span<const Pose> estimated, std::span<const Pose> ground_truth) {
  const auto e = translations(estimated);
  const auto g = translations(ground_truth);
  return umeyama_align(std::span<const Vec3>(e), std::span<const Vec3>(g));
}

}  // namespace viomc::geom
