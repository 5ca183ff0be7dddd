#pragma once

#include <filesystem>
#include <limits>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <vector>

#include <Eigen/Core>

#include "viomc/geom.hpp"
#include "viomc/sensors.hpp"
#include "viomc/tracks.hpp"
#include "viomc/trajgen.hpp"
#include "viomc/triangulation.hpp"

namespace viomc::ekf {

/// Raised when an update meets a singular innovation covariance or the
/// state stops being finite.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Error-state layout: [dtheta, dT, dv, dbg, dba, dX_1, dX_2, ...].
inline constexpr int kMotionDim = 15;
inline constexpr int kTheta = 0;
inline constexpr int kPos = 3;
inline constexpr int kVel = 6;
inline constexpr int kBg = 9;
inline constexpr int kBa = 12;
inline constexpr int kNoiseDim = 12;  // gyro, accel, gyro walk, accel walk

using MotionVector = Eigen::Matrix<double, kMotionDim, 1>;
using MotionMatrix = Eigen::Matrix<double, kMotionDim, kMotionDim>;
using NoiseMatrix = Eigen::Matrix<double, kMotionDim, kNoiseDim>;

struct InitialCovariance {
  double rotation = 1e-6;
  double position = 1e-6;
  double velocity = 1e-6;
  double gyro_bias = 1e-4;
  double accel_bias = 1e-4;
};

struct FilterConfig {
  double sigma_p_filter = 0.5;  // px, measurement std assumed by the filter
  int max_state_features = 60;
  int tracker_min = 250;
  int tracker_max = 500;
  double gate_prob = 0.95;
  int max_gate_failures = 3;
  double max_candidate_age = 2.0;                      // s
  double parallax_min = std::numbers::pi / 180.0;      // rad
  double max_promotion_trace = std::numeric_limits<double>::infinity();  // m^2
  double z_near = sensors::kDefaultNearPlane;
  std::size_t history_length = 8;
  InitialCovariance init_cov;

  // Mirrors the IMU noise densities.
  double sigma_a = 1e-4;
  double sigma_g = 1e-5;
  double sigma_ba = 3e-4;
  double sigma_bg = 5e-6;
  Vec3 gravity{0.0, 0.0, -9.81};

  geom::CameraIntrinsics camera;

  void validate() const;
  double gate_threshold() const;
};

/// Nominal motion: body-to-spatial rotation, position, velocity, biases.
/// The true state relates to it through R = R_hat Exp(dtheta) and additive
/// errors everywhere else.
struct MotionState {
  Mat3 R = Mat3::Identity();
  Vec3 T = Vec3::Zero();
  Vec3 v = Vec3::Zero();
  Vec3 bg = Vec3::Zero();
  Vec3 ba = Vec3::Zero();
};

MotionState retract(const MotionState& x, const MotionVector& dx);
MotionVector local_difference(const MotionState& from, const MotionState& to);

struct ImuNoise {
  Vec3 gyro = Vec3::Zero();
  Vec3 accel = Vec3::Zero();
  Vec3 gyro_walk = Vec3::Zero();
  Vec3 accel_walk = Vec3::Zero();
};

/// Discrete strapdown step: R' = R Exp((w - bg - ng) dt),
/// v' = v + (R (a - ba - na) + g) dt, T' = T + v' dt, biases random walk.
MotionState propagate_motion(const MotionState& x, const sensors::ImuSample& imu, double dt,
                             const Vec3& gravity, const ImuNoise& noise = {});

struct TransitionJacobians {
  MotionMatrix F;
  NoiseMatrix G;
};

/// Exact first-order Jacobians of propagate_motion in the error-state chart.
TransitionJacobians transition_jacobians(const MotionState& x, const sensors::ImuSample& imu, double dt);

/// Discrete covariance of ImuNoise for one step of length dt.
Eigen::Matrix<double, kNoiseDim, kNoiseDim> discrete_noise(const FilterConfig& cfg, double dt);

struct FeatureMeasurement {
  geom::PixelPoint predicted;
  Vec3 X_c = Vec3::Zero();
  Eigen::Matrix<double, 2, 3> H_theta;
  Eigen::Matrix<double, 2, 3> H_pos;
  Eigen::Matrix<double, 2, 3> H_feature;
};

/// Predicted pixel of a spatial point; nullopt when it sits in front of the
/// near plane.
std::optional<FeatureMeasurement> predict_measurement(const Mat3& R, const Vec3& T, const Vec3& X_s,
                                                      const geom::CameraIntrinsics& K, double z_near);

/// Chi-square quantile for two degrees of freedom.
double chi2_quantile_2dof(double prob);

struct GateDecision {
  bool accepted = false;
  double distance2 = 0.0;
};

/// Accept iff r^T S^-1 r <= chi2(gate_prob, 2). Throws NumericalError when S
/// is not positive definite.
GateDecision mahalanobis_gate(const Vec2& r, const Mat2& S, double gate_prob);

struct FilterState {
  double t = 0.0;
  Mat3 R = Mat3::Identity();
  Vec3 T = Vec3::Zero();
  Vec3 v = Vec3::Zero();
  Vec3 bg = Vec3::Zero();
  Vec3 ba = Vec3::Zero();
  std::vector<FeatureId> feature_ids;
  std::vector<Vec3> features;  // spatial positions, parallel to feature_ids
  Eigen::MatrixXd P;

  int feature_count() const { return static_cast<int>(feature_ids.size()); }
  int dim() const { return kMotionDim + 3 * feature_count(); }
  /// Offset of the feature block in P, or -1.
  int feature_offset(FeatureId id) const;

  MotionState motion() const { return {R, T, v, bg, ba}; }
  void set_motion(const MotionState& m);
  geom::Pose pose() const { return {R, T}; }
  bool finite() const;
};

struct ErrorStateSample {
  double t = 0.0;
  Eigen::Matrix<double, 9, 1> e = Eigen::Matrix<double, 9, 1>::Zero();
};

struct GateRecord {
  FeatureId id = 0;
  bool accepted = false;
  double distance2 = 0.0;
};

struct FrameDiagnostics {
  double t = 0.0;
  int n_tracked = 0;
  int n_in_state = 0;
  int n_gated_out = 0;
  int n_new = 0;
  int n_promoted = 0;
  int n_dropped = 0;
  std::vector<GateRecord> gates;  // in-state features only
};

FilterState init_filter(const FilterConfig& cfg, const trajgen::GroundTruthSample& truth0);

void propagate(FilterState& state, const sensors::ImuSample& imu, double dt, const FilterConfig& cfg);

FrameDiagnostics process_frame(FilterState& state, TrackTable& tracks, const sensors::VisionFrame& frame,
                               const FilterConfig& cfg);

/// Seeds a candidate by two-view triangulation, then refines it with a
/// three-state EKF on the spatial position. Pose uncertainty of the main
/// filter enters the innovation covariance. Moves the track to dead when it
/// ages out unseeded or fails the gate max_gate_failures times in a row.
void subfilter_depth_update(Track& track, const FilterState& state, const geom::PixelPoint& px, double t,
                            const FilterConfig& cfg);

/// Promotes seeded candidates observed at time t, most confident first,
/// until the state holds max_state_features. Returns the promotion count.
int select_in_state_features(FilterState& state, TrackTable& tracks, const FilterConfig& cfg, double t);

/// Drops the feature block of `id` from the state and covariance.
void remove_feature(FilterState& state, FeatureId id);

/// e = [log(R_hat R^T), T_hat - T, v_hat - v].
ErrorStateSample error_state(const FilterState& state, const trajgen::GroundTruthSample& truth);

/// Owns one trial's filter state and track table.
class Estimator {
 public:
  Estimator(const FilterConfig& cfg, const trajgen::GroundTruthSample& truth0);

  void propagate(const sensors::ImuSample& imu, double dt);
  FrameDiagnostics process(const sensors::VisionFrame& frame);

  /// Whether the bookkeeping tracker is (or would start) tracking `id`.
  bool tracks_feature(FeatureId id) const;

  const FilterState& state() const { return state_; }
  const TrackTable& tracks() const { return tracks_; }
  const FilterConfig& config() const { return cfg_; }

 private:
  FilterConfig cfg_;
  FilterState state_;
  TrackTable tracks_;
};

struct EstimateSample {
  double t = 0.0;
  Vec3 w = Vec3::Zero();
  Vec3 T = Vec3::Zero();
  Vec3 v = Vec3::Zero();
};

void write_estimate_csv(const std::vector<EstimateSample>& samples, const std::filesystem::path& path);
void write_diagnostics_jsonl(const std::vector<FrameDiagnostics>& diags, const std::filesystem::path& path);

}  // namespace viomc::ekf
