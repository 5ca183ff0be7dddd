#pragma once

#include <span>
#include <stdexcept>
#include <vector>

#include <Eigen/Core>

#include "viomc/geom.hpp"

namespace viomc::metrics {

using Vec9 = Eigen::Matrix<double, 9, 1>;
using Mat9 = Eigen::Matrix<double, 9, 9>;

/// Second moment of error states across runs at one timestep:
/// Sigma = 1/(N-1) sum e e^T. With `centered`, the run mean is removed first
/// (ordinary sample covariance). Throws std::invalid_argument for N < 2.
Mat9 sample_covariance(std::span<const Vec9> errors, bool centered = false);

/// Time average of a covariance series. Throws on an empty series.
Mat9 mean_sample_covariance(std::span<const Mat9> series);

struct CovarianceSeries {
  std::vector<double> t;
  std::vector<Mat9> sigma;
  Mat9 mean = Mat9::Zero();
  std::vector<double> frobenius;  // |Sigma(t)|_F
  double mean_frobenius = 0.0;    // |mean|_F
};

/// Builds Sigma(t) over runs aligned by index. All runs must share the
/// timestamps in `t`.
CovarianceSeries covariance_series(std::span<const double> t, std::span<const std::vector<Vec9>> runs,
                                   bool centered = false);

/// Mean ratio of centered translation norms over timesteps where the
/// centered ground-truth norm exceeds `guard`. Throws when no timestep
/// qualifies or lengths mismatch.
double scale_factor(std::span<const Vec3> estimated, std::span<const Vec3> ground_truth, double guard = 0.1);

/// RMSE of translation residuals after rigid alignment of the estimate.
double absolute_trajectory_error(std::span<const geom::Pose> estimated, std::span<const geom::Pose> ground_truth);

/// Translational RMSE of relative-motion mismatch over windows of length
/// `delta` seconds. Pairs are (i, j) with j the first sample at or after
/// t_i + delta. Throws when delta exceeds the covered time.
double relative_pose_error(std::span<const geom::Pose> estimated, std::span<const geom::Pose> ground_truth,
                           std::span<const double> t, double delta);

/// Box-and-whisker statistics. Quartiles by linear interpolation between
/// order statistics (position (N-1)p); whiskers reach the most extreme data
/// within 1.5 IQR of the box; everything beyond is a flier.
struct BoxStats {
  double q1 = 0.0;
  double median = 0.0;
  double q3 = 0.0;
  double mean = 0.0;
  double whisker_lo = 0.0;
  double whisker_hi = 0.0;
  std::vector<double> fliers;  // ascending
  std::size_t count = 0;

  double iqr() const { return q3 - q1; }
};

BoxStats box_stats(std::span<const double> values);

}  // namespace viomc::metrics
