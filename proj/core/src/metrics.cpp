#include "viomc/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace viomc::metrics {

Mat9 sample_covariance(std::span<const Vec9> errors, bool centered) {
  const auto n = errors.size();
  if (n < 2) throw std::invalid_argument("sample_covariance: need at least 2 runs");
  Vec9 mean = Vec9::Zero();
  if (centered) {
    for (const auto& e : errors) mean += e;
    mean /= static_cast<double>(n);
  }
  Mat9 S = Mat9::Zero();
  for (const auto& e : errors) {
    const Vec9 d = e - mean;
    S.noalias() += d * d.transpose();
  }
  return S / static_cast<double>(n - 1);
}

Mat9 mean_sample_covariance(std::span<const Mat9> series) {
  if (series.empty()) throw std::invalid_argument("mean_sample_covariance: empty series");
  Mat9 M = Mat9::Zero();
  for (const auto& S : series) M += S;
  return M / static_cast<double>(series.size());
}

CovarianceSeries covariance_series(std::span<const double> t, std::span<const std::vector<Vec9>> runs,
                                   bool centered) {
  CovarianceSeries out;
  if (runs.size() < 2) throw std::invalid_argument("covariance_series: need at least 2 runs");
  for (const auto& r : runs) {
    if (r.size() != t.size()) throw std::invalid_argument("covariance_series: runs are not time aligned");
  }
  std::vector<Vec9> slice(runs.size());
  for (std::size_t k = 0; k < t.size(); ++k) {
    for (std::size_t n = 0; n < runs.size(); ++n) slice[n] = runs[n][k];
    out.t.push_back(t[k]);
    out.sigma.push_back(sample_covariance(slice, centered));
    out.frobenius.push_back(out.sigma.back().norm());
  }
  if (!out.sigma.empty()) {
    out.mean = mean_sample_covariance(out.sigma);
    out.mean_frobenius = out.mean.norm();
  }
  return out;
}

double scale_factor(std::span<const Vec3> estimated, std::span<const Vec3> ground_truth, double guard) {
  if (estimated.size() != ground_truth.size()) {
    throw std::invalid_argument("scale_factor: sequences differ in length");
  }
  if (estimated.size() < 2) throw std::invalid_argument("scale_factor: need at least 2 samples");
  const double n = static_cast<double>(estimated.size());
  const Vec3 ce = std::accumulate(estimated.begin(), estimated.end(), Vec3(Vec3::Zero())) / n;
  const Vec3 cg = std::accumulate(ground_truth.begin(), ground_truth.end(), Vec3(Vec3::Zero())) / n;
  double sum = 0.0;
  std::size_t used = 0;
  for (std::size_t i = 0; i < estimated.size(); ++i) {
    const double g = (ground_truth[i] - cg).norm();
    if (g > guard) {
      sum += (estimated[i] - ce).norm() / g;
      ++used;
    }
  }
  if (used == 0) throw std::invalid_argument("scale_factor: no timestep passes the norm guard");
  return sum / static_cast<double>(used);
}

double absolute_trajectory_error(std::span<const geom::Pose> estimated, std::span<const geom::Pose> ground_truth) {
  const auto align = geom::umeyama_align(estimated, ground_truth);
  double sse = 0.0;
  for (std::size_t i = 0; i < estimated.size(); ++i) {
    sse += (align.apply(estimated[i].translation) - ground_truth[i].translation).squaredNorm();
  }
  return std::sqrt(sse / static_cast<double>(estimated.size()));
}

double relative_pose_error(std::span<const geom::Pose> estimated, std::span<const geom::Pose> ground_truth,
                           std::span<const double> t, double delta) {
  if (estimated.size() != ground_truth.size() || t.size() != estimated.size()) {
    throw std::invalid_argument("relative_pose_error: sequences differ in length");
  }
  if (t.empty() || t.back() - t.front() < delta - 1e-9) {
    throw std::invalid_argument("relative_pose_error: delta longer than the trajectory");
  }
  double sse = 0.0;
  std::size_t pairs = 0;
  std::size_t j = 0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    j = std::max(j, i + 1);
    while (j < t.size() && t[j] < t[i] + delta - 1e-9) ++j;
    if (j >= t.size()) break;
    const geom::Pose dq = ground_truth[i].inverse() * ground_truth[j];
    const geom::Pose dp = estimated[i].inverse() * estimated[j];
    sse += (dq.inverse() * dp).translation.squaredNorm();
    ++pairs;
  }
  if (pairs == 0) throw std::invalid_argument("relative_pose_error: no pair spans delta");
  return std::sqrt(sse / static_cast<double>(pairs));
}

namespace {

double quantile_sorted(const std::vector<double>& x, double p) {
  const double h = (static_cast<double>(x.size()) - 1.0) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, x.size() - 1);
  return x[lo] + (h - static_cast<double>(lo)) * (x[hi] - x[lo]);
}

}  // namespace

BoxStats box_stats(std::span<const double> values) {
  if (values.empty()) throw std::invalid_argument("box_stats: empty input");
  std::vector<double> x(values.begin(), values.end());
  std::sort(x.begin(), x.end());
  BoxStats b;
  b.count = x.size();
  b.q1 = quantile_sorted(x, 0.25);
  b.median = quantile_sorted(x, 0.5);
  b.q3 = quantile_sorted(x, 0.75);
  b.mean = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
  const double lo_limit = b.q1 - 1.5 * b.iqr();
  const double hi_limit = b.q3 + 1.5 * b.iqr();
  b.whisker_lo = b.q1;
  b.whisker_hi = b.q3;
  for (double v : x) {
    if (v < lo_limit || v > hi_limit) {
      b.fliers.push_back(v);
    } else {
      b.whisker_lo = std::min(b.whisker_lo, v);
      b.whisker_hi = std::max(b.whisker_hi, v);
    }
  }
  return b;
}

}  // namespace viomc::metrics
