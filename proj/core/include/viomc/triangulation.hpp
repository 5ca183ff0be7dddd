#pragma once

#include <optional>

#include "viomc/geom.hpp"

namespace viomc::ekf {

struct Triangulation {
  Vec3 point = Vec3::Zero();  // first camera frame
  double residual = 0.0;      // sum of squared sines of the bearing corrections
  bool midpoint_fallback = false;
};

/// Two-view triangulation minimizing the squared angular reprojection
/// error. bearing1 lives in camera 1, bearing2 in camera 2, and
/// second_in_first maps camera-2 coordinates into camera 1. Both bearings
/// are corrected minimally onto a common epipolar plane and intersected.
///
/// Returns nullopt when the parallax between the rays is below
/// parallax_min (radians), the baseline vanishes, or the corrected rays
/// meet behind either camera.
std::optional<Triangulation> triangulate_angular(const Vec3& bearing1, const Vec3& bearing2,
                                                 const geom::Pose& second_in_first,
                                                 double parallax_min);

/// Angle between two rays expressed in a common frame.
double parallax_angle(const Vec3& ray1, const Vec3& ray2);

}  // namespace viomc::ekf
