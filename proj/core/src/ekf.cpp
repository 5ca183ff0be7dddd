#include "viomc/ekf.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <set>
#include <string>

#include <Eigen/Cholesky>
#include <Eigen/LU>
#include <nlohmann/json.hpp>

namespace viomc::ekf {

using geom::exp_rotation;
using geom::skew;

void FilterConfig::validate() const {
  if (!(sigma_p_filter > 0.0)) throw std::invalid_argument("filter: sigma_p_filter must be positive");
  if (max_state_features < 1) throw std::invalid_argument("filter: max_state_features must be >= 1");
  if (tracker_min > tracker_max || tracker_max < 1) {
    throw std::invalid_argument("filter: need 1 <= tracker_max and tracker_min <= tracker_max");
  }
  if (!(gate_prob > 0.0 && gate_prob < 1.0)) throw std::invalid_argument("filter: gate_prob must be in (0, 1)");
  if (max_gate_failures < 1) throw std::invalid_argument("filter: max_gate_failures must be >= 1");
  if (!(parallax_min > 0.0)) throw std::invalid_argument("filter: parallax_min must be positive");
  if (!(sigma_a >= 0.0 && sigma_g >= 0.0 && sigma_ba >= 0.0 && sigma_bg >= 0.0)) {
    throw std::invalid_argument("filter: noise densities must be non-negative");
  }
  camera.validate();
}

double FilterConfig::gate_threshold() const { return chi2_quantile_2dof(gate_prob); }

MotionState retract(const MotionState& x, const MotionVector& dx) {
  MotionState out;
  out.R = x.R * exp_rotation(dx.segment<3>(kTheta));
  out.T = x.T + dx.segment<3>(kPos);
  out.v = x.v + dx.segment<3>(kVel);
  out.bg = x.bg + dx.segment<3>(kBg);
  out.ba = x.ba + dx.segment<3>(kBa);
  return out;
}

MotionVector local_difference(const MotionState& from, const MotionState& to) {
  MotionVector d;
  d.segment<3>(kTheta) = geom::log_rotation(from.R.transpose() * to.R);
  d.segment<3>(kPos) = to.T - from.T;
  d.segment<3>(kVel) = to.v - from.v;
  d.segment<3>(kBg) = to.bg - from.bg;
  d.segment<3>(kBa) = to.ba - from.ba;
  return d;
}

MotionState propagate_motion(const MotionState& x, const sensors::ImuSample& imu, double dt,
                             const Vec3& gravity, const ImuNoise& noise) {
  MotionState out;
  out.R = x.R * exp_rotation((imu.gyro - x.bg - noise.gyro) * dt);
  out.v = x.v + (x.R * (imu.accel - x.ba - noise.accel) + gravity) * dt;
  out.T = x.T + out.v * dt;
  out.bg = x.bg + noise.gyro_walk;
  out.ba = x.ba + noise.accel_walk;
  return out;
}

TransitionJacobians transition_jacobians(const MotionState& x, const sensors::ImuSample& imu, double dt) {
  const Vec3 phi = (imu.gyro - x.bg) * dt;
  const Vec3 a = imu.accel - x.ba;
  const Mat3 Jr = geom::right_jacobian(phi);
  const Mat3 Ra_x = x.R * skew(a);
  const Mat3 I = Mat3::Identity();

  TransitionJacobians J;
  J.F.setIdentity();
  J.F.block<3, 3>(kTheta, kTheta) = exp_rotation(phi).transpose();
  J.F.block<3, 3>(kTheta, kBg) = -Jr * dt;
  J.F.block<3, 3>(kVel, kTheta) = -Ra_x * dt;
  J.F.block<3, 3>(kVel, kBa) = -x.R * dt;
  J.F.block<3, 3>(kPos, kTheta) = -Ra_x * dt * dt;
  J.F.block<3, 3>(kPos, kVel) = I * dt;
  J.F.block<3, 3>(kPos, kBa) = -x.R * dt * dt;

  J.G.setZero();
  J.G.block<3, 3>(kTheta, 0) = -Jr * dt;
  J.G.block<3, 3>(kVel, 3) = -x.R * dt;
  J.G.block<3, 3>(kPos, 3) = -x.R * dt * dt;
  J.G.block<3, 3>(kBg, 6) = I;
  J.G.block<3, 3>(kBa, 9) = I;
  return J;
}

Eigen::Matrix<double, kNoiseDim, kNoiseDim> discrete_noise(const FilterConfig& cfg, double dt) {
  Eigen::Matrix<double, kNoiseDim, 1> d;
  d.segment<3>(0).setConstant(cfg.sigma_g * cfg.sigma_g / dt);
  d.segment<3>(3).setConstant(cfg.sigma_a * cfg.sigma_a / dt);
  d.segment<3>(6).setConstant(cfg.sigma_bg * cfg.sigma_bg * dt);
  d.segment<3>(9).setConstant(cfg.sigma_ba * cfg.sigma_ba * dt);
  return d.asDiagonal();
}

std::optional<FeatureMeasurement> predict_measurement(const Mat3& R, const Vec3& T, const Vec3& X_s,
                                                      const geom::CameraIntrinsics& K, double z_near) {
  FeatureMeasurement m;
  m.X_c = R.transpose() * (X_s - T);
  if (!(m.X_c.z() > z_near)) return std::nullopt;
  m.predicted = *geom::project(m.X_c, K);
  const auto Jp = geom::project_jacobian(m.X_c, K);
  m.H_theta = Jp * skew(m.X_c);
  m.H_feature = Jp * R.transpose();
  m.H_pos = -m.H_feature;
  return m;
}

double chi2_quantile_2dof(double prob) { return -2.0 * std::log1p(-prob); }

GateDecision mahalanobis_gate(const Vec2& r, const Mat2& S, double gate_prob) {
  Eigen::LLT<Mat2> llt(S);
  if (llt.info() != Eigen::Success || !(S.determinant() > 0.0)) {
    throw NumericalError("mahalanobis_gate: innovation covariance is not positive definite");
  }
  GateDecision d;
  d.distance2 = r.dot(llt.solve(r));
  d.accepted = d.distance2 <= chi2_quantile_2dof(gate_prob);
  return d;
}

int FilterState::feature_offset(FeatureId id) const {
  for (int i = 0; i < feature_count(); ++i) {
    if (feature_ids[i] == id) return kMotionDim + 3 * i;
  }
  return -1;
}

void FilterState::set_motion(const MotionState& m) {
  R = m.R;
  T = m.T;
  v = m.v;
  bg = m.bg;
  ba = m.ba;
}

bool FilterState::finite() const {
  if (!R.allFinite() || !T.allFinite() || !v.allFinite() || !bg.allFinite() || !ba.allFinite()) return false;
  for (const auto& X : features) {
    if (!X.allFinite()) return false;
  }
  return P.allFinite();
}

FilterState init_filter(const FilterConfig& cfg, const trajgen::GroundTruthSample& truth0) {
  cfg.validate();
  FilterState s;
  s.t = truth0.t;
  s.R = truth0.R_sb;
  s.T = truth0.T_sb;
  s.v = truth0.v_sb;
  s.P = Eigen::MatrixXd::Zero(kMotionDim, kMotionDim);
  const auto& c = cfg.init_cov;
  s.P.diagonal().segment<3>(kTheta).setConstant(c.rotation);
  s.P.diagonal().segment<3>(kPos).setConstant(c.position);
  s.P.diagonal().segment<3>(kVel).setConstant(c.velocity);
  s.P.diagonal().segment<3>(kBg).setConstant(c.gyro_bias);
  s.P.diagonal().segment<3>(kBa).setConstant(c.accel_bias);
  return s;
}

namespace {

void symmetrize(Eigen::MatrixXd& P) { P = 0.5 * (P + P.transpose()).eval(); }

}  // namespace

void propagate(FilterState& state, const sensors::ImuSample& imu, double dt, const FilterConfig& cfg) {
  if (!(dt > 0.0)) throw std::invalid_argument("propagate: dt must be positive");
  if (!imu.gyro.allFinite() || !imu.accel.allFinite()) {
    throw NumericalError("propagate: non-finite IMU sample");
  }
  const MotionState x = state.motion();
  const auto J = transition_jacobians(x, imu, dt);
  state.set_motion(propagate_motion(x, imu, dt, cfg.gravity));
  state.t += dt;

  const int nf = 3 * state.feature_count();
  MotionMatrix Pmm = state.P.topLeftCorner<kMotionDim, kMotionDim>();
  Pmm = J.F * Pmm * J.F.transpose() + J.G * discrete_noise(cfg, dt) * J.G.transpose();
  Pmm = 0.5 * (Pmm + Pmm.transpose()).eval();
  state.P.topLeftCorner<kMotionDim, kMotionDim>() = Pmm;
  if (nf > 0) {
    const Eigen::MatrixXd cross = J.F * state.P.topRightCorner(kMotionDim, nf);
    state.P.topRightCorner(kMotionDim, nf) = cross;
    state.P.bottomLeftCorner(nf, kMotionDim) = cross.transpose();
  }
}

void remove_feature(FilterState& state, FeatureId id) {
  const int off = state.feature_offset(id);
  if (off < 0) return;
  const int n = state.dim();
  const int tail = n - off - 3;
  Eigen::MatrixXd P(n - 3, n - 3);
  P.topLeftCorner(off, off) = state.P.topLeftCorner(off, off);
  P.topRightCorner(off, tail) = state.P.topRightCorner(off, tail);
  P.bottomLeftCorner(tail, off) = state.P.bottomLeftCorner(tail, off);
  P.bottomRightCorner(tail, tail) = state.P.bottomRightCorner(tail, tail);
  state.P = std::move(P);
  const auto i = static_cast<std::size_t>((off - kMotionDim) / 3);
  state.feature_ids.erase(state.feature_ids.begin() + static_cast<std::ptrdiff_t>(i));
  state.features.erase(state.features.begin() + static_cast<std::ptrdiff_t>(i));
}

namespace {

struct AcceptedMeasurement {
  int offset;
  Vec2 residual;
  Eigen::Matrix<double, 2, 6> H_motion;  // [theta, pos]
  Eigen::Matrix<double, 2, 3> H_feature;
};

// Joint update over all accepted features. H is sparse: each row block
// touches the rotation/position errors and one feature block.
void joint_update(FilterState& state, const std::vector<AcceptedMeasurement>& meas, double sigma) {
  const int n = state.dim();
  const int m = 2 * static_cast<int>(meas.size());
  Eigen::MatrixXd PHt(n, m);
  for (int j = 0; j < static_cast<int>(meas.size()); ++j) {
    const auto& a = meas[j];
    PHt.middleCols<2>(2 * j) = state.P.leftCols<6>() * a.H_motion.transpose() +
                               state.P.middleCols<3>(a.offset) * a.H_feature.transpose();
  }
  Eigen::MatrixXd S(m, m);
  Eigen::VectorXd r(m);
  for (int i = 0; i < static_cast<int>(meas.size()); ++i) {
    const auto& a = meas[i];
    r.segment<2>(2 * i) = a.residual;
    S.middleRows<2>(2 * i) = a.H_motion * PHt.topRows<6>() + a.H_feature * PHt.middleRows<3>(a.offset);
  }
  S = 0.5 * (S + S.transpose()).eval();
  S.diagonal().array() += sigma * sigma;

  Eigen::LLT<Eigen::MatrixXd> llt(S);
  if (llt.info() != Eigen::Success) {
    throw NumericalError("update: innovation covariance is not positive definite");
  }
  const Eigen::MatrixXd K = llt.solve(PHt.transpose()).transpose();
  const Eigen::VectorXd dx = K * r;
  state.P.noalias() -= K * PHt.transpose();
  symmetrize(state.P);

  state.set_motion(retract(state.motion(), dx.head<kMotionDim>()));
  for (int i = 0; i < state.feature_count(); ++i) {
    state.features[i] += dx.segment<3>(kMotionDim + 3 * i);
  }
}

bool seen_in(const std::set<FeatureId>& ids, FeatureId id) { return ids.count(id) > 0; }

}  // namespace

namespace {
// Required parallax in units of two-view ray noise std.
constexpr double kParallaxNoiseRatio = 4.0;
}  // namespace

void subfilter_depth_update(Track& track, const FilterState& state, const geom::PixelPoint& px, double t,
                            const FilterConfig& cfg) {
  if (track.status != TrackStatus::candidate) return;
  const auto& K = cfg.camera;
  const Vec3 b = geom::bearing(px, K);
  const double sigma2 = cfg.sigma_p_filter * cfg.sigma_p_filter;

  if (!track.anchor) {
    track.anchor = Anchor{state.R, state.T, b, t};
    return;
  }

  if (!track.seeded) {
    if (t - track.first_seen > cfg.max_candidate_age) {
      track.transition(TrackStatus::dead);
      return;
    }
    const Anchor& an = *track.anchor;

    // Relative pose between the anchor and now is uncertain through the
    // bias, velocity and attitude errors accumulated over the interval.
    const double dt = t - an.t;
    const auto& P = state.P;
    const double var_bg = P.block<3, 3>(kBg, kBg).trace() / 3.0;
    const double var_ba = P.block<3, 3>(kBa, kBa).trace() / 3.0;
    const double var_v = P.block<3, 3>(kVel, kVel).trace() / 3.0;
    const double g = cfg.gravity.norm();
    const double rot_var = var_bg * dt * dt + cfg.sigma_g * cfg.sigma_g * dt;
    const double trans_var = var_v * dt * dt + var_ba * std::pow(dt, 4) / 4.0 +
                             g * g * var_bg * std::pow(dt, 6) / 36.0 + cfg.sigma_a * cfg.sigma_a * std::pow(dt, 3) / 3.0;
    const double f = std::min(K.fx, K.fy);
    const double ray_var = sigma2 / (f * f) + rot_var;

    // Parallax must dominate the two-view ray noise, otherwise noise alone
    // fakes it and the point lands at a meaningless depth.
    const double parallax_min = std::max(cfg.parallax_min, kParallaxNoiseRatio * std::sqrt(2.0 * ray_var));
    geom::Pose second_in_first;
    second_in_first.rotation = an.R.transpose() * state.R;
    second_in_first.translation = an.R.transpose() * (state.T - an.T);
    const auto tri = triangulate_angular(an.bearing, b, second_in_first, parallax_min);
    if (!tri) return;

    // A corrupted anchor (e.g. a swapped measurement) cannot be explained by
    // one point; restart from the current observation.
    if (tri->residual > 2.0 * cfg.gate_threshold() * ray_var) {
      track.anchor = Anchor{state.R, state.T, b, t};
      return;
    }
    const Vec3 X = an.R * tri->point + an.T;
    Mat3 info = 1e-6 * Mat3::Identity();
    for (const auto& [R, T, extra] : {std::tuple{an.R, an.T, false}, std::tuple{state.R, state.T, true}}) {
      const Vec3 X_c = R.transpose() * (X - T);
      if (!(X_c.z() > cfg.z_near)) {
        track.anchor = Anchor{state.R, state.T, b, t};
        return;
      }
      const double px_var = extra ? sigma2 + f * f * (rot_var + trans_var / X_c.squaredNorm()) : sigma2;
      const Eigen::Matrix<double, 2, 3> H = geom::project_jacobian(X_c, K) * R.transpose();
      info += H.transpose() * H / px_var;
    }
    track.X_s = X;
    track.cov = info.inverse();
    track.cov = 0.5 * (track.cov + track.cov.transpose()).eval();
    track.seeded = true;
    track.gate_failures = 0;
    return;
  }

  const auto pred = predict_measurement(state.R, state.T, track.X_s, K, cfg.z_near);
  bool accepted = false;
  if (pred) {
    Eigen::Matrix<double, 2, 6> H_pose;
    H_pose << pred->H_theta, pred->H_pos;
    const Mat2 S = pred->H_feature * track.cov * pred->H_feature.transpose() +
                   H_pose * state.P.topLeftCorner<6, 6>() * H_pose.transpose() + sigma2 * Mat2::Identity();
    const Vec2 r = px.vec() - pred->predicted.vec();
    const auto gate = mahalanobis_gate(r, S, cfg.gate_prob);
    if (gate.accepted) {
      const Eigen::Matrix<double, 3, 2> Kg = track.cov * pred->H_feature.transpose() * S.inverse();
      track.X_s += Kg * r;
      track.cov = (Mat3::Identity() - Kg * pred->H_feature) * track.cov;
      track.cov = 0.5 * (track.cov + track.cov.transpose()).eval();
      ++track.subfilter_updates;
      accepted = true;
    }
  }
  if (accepted) {
    track.gate_failures = 0;
  } else if (++track.gate_failures >= cfg.max_gate_failures) {
    track.transition(TrackStatus::dead);
  }
}

int select_in_state_features(FilterState& state, TrackTable& tracks, const FilterConfig& cfg, double t) {
  int vacancies = cfg.max_state_features - state.feature_count();
  if (vacancies <= 0) return 0;

  std::vector<std::pair<double, FeatureId>> ranked;
  for (const auto& [id, tr] : tracks) {
    if (tr.status == TrackStatus::candidate && tr.seeded && tr.last_seen == t) {
      const double trace = tr.cov.trace();
      if (trace <= cfg.max_promotion_trace) ranked.emplace_back(trace, id);
    }
  }
  std::sort(ranked.begin(), ranked.end());

  int promoted = 0;
  for (const auto& [trace, id] : ranked) {
    if (vacancies == 0) break;
    Track* tr = tracks.find(id);
    // The subfilter point was triangulated from the filter's own poses, so
    // its spatial error inherits the current pose error:
    //   dX = dT - R [X_c]x dtheta + R dX_c.
    const Vec3 X_c = state.R.transpose() * (tr->X_s - state.T);
    Eigen::Matrix<double, 3, 6> J;
    J << -state.R * geom::skew(X_c), Mat3::Identity();
    const int n = state.dim();
    const Eigen::MatrixXd cross = J * state.P.topRows<6>();  // 3 x n
    const Mat3 Pxx = J * cross.leftCols<6>().transpose() + tr->cov;
    state.P.conservativeResize(n + 3, n + 3);
    state.P.bottomLeftCorner(3, n) = cross;
    state.P.topRightCorner(n, 3) = cross.transpose();
    state.P.bottomRightCorner<3, 3>() = 0.5 * (Pxx + Pxx.transpose());
    state.feature_ids.push_back(id);
    state.features.push_back(tr->X_s);
    tr->transition(TrackStatus::in_state);
    tr->gate_failures = 0;
    --vacancies;
    ++promoted;
  }
  return promoted;
}

FrameDiagnostics process_frame(FilterState& state, TrackTable& tracks, const sensors::VisionFrame& frame,
                               const FilterConfig& cfg) {
  FrameDiagnostics diag;
  diag.t = frame.t;
  const double t = frame.t;

  // Bookkeeping: tracks missing from the frame end; new ids become
  // candidates while the tracker has capacity.
  std::set<FeatureId> seen;
  for (const auto& o : frame.observations) seen.insert(o.id);
  std::vector<FeatureId> ended;
  for (auto& [id, tr] : tracks) {
    if (!seen_in(seen, id)) ended.push_back(id);
  }
  for (FeatureId id : ended) {
    Track* tr = tracks.find(id);
    if (tr->status == TrackStatus::in_state) remove_feature(state, id);
    tr->transition(TrackStatus::dead);
    tracks.erase(id);
    ++diag.n_dropped;
  }
  for (const auto& o : frame.observations) {
    Track* tr = tracks.find(o.id);
    if (!tr) {
      if (static_cast<int>(tracks.size()) >= cfg.tracker_max) continue;
      tr = &tracks.insert_candidate(o.id, t);
      ++diag.n_new;
    }
    tr->observe(t, o.px, cfg.history_length);
  }

  // In-state features: per-feature gate, then one joint update.
  const double sigma2 = cfg.sigma_p_filter * cfg.sigma_p_filter;
  std::vector<AcceptedMeasurement> accepted;
  std::vector<FeatureId> rejected;
  for (const auto& o : frame.observations) {
    Track* tr = tracks.find(o.id);
    if (!tr || tr->status != TrackStatus::in_state) continue;
    const int off = state.feature_offset(o.id);
    const auto pred = predict_measurement(state.R, state.T, state.features[(off - kMotionDim) / 3], cfg.camera,
                                          cfg.z_near);
    GateRecord rec{o.id, false, std::numeric_limits<double>::infinity()};
    if (pred) {
      AcceptedMeasurement a;
      a.offset = off;
      a.residual = o.px.vec() - pred->predicted.vec();
      a.H_motion << pred->H_theta, pred->H_pos;
      a.H_feature = pred->H_feature;

      Eigen::Matrix<double, 2, 9> H;
      H << a.H_motion, a.H_feature;
      Eigen::Matrix<double, 9, 9> Ploc;
      Ploc.topLeftCorner<6, 6>() = state.P.topLeftCorner<6, 6>();
      Ploc.topRightCorner<6, 3>() = state.P.block<6, 3>(0, off);
      Ploc.bottomLeftCorner<3, 6>() = state.P.block<3, 6>(off, 0);
      Ploc.bottomRightCorner<3, 3>() = state.P.block<3, 3>(off, off);
      const Mat2 S = H * Ploc * H.transpose() + sigma2 * Mat2::Identity();
      const auto gate = mahalanobis_gate(a.residual, S, cfg.gate_prob);
      rec.accepted = gate.accepted;
      rec.distance2 = gate.distance2;
      if (gate.accepted) accepted.push_back(a);
    }
    diag.gates.push_back(rec);
    if (rec.accepted) {
      tr->gate_failures = 0;
    } else {
      ++diag.n_gated_out;
      if (++tr->gate_failures >= cfg.max_gate_failures) rejected.push_back(o.id);
    }
  }
  if (!accepted.empty()) joint_update(state, accepted, cfg.sigma_p_filter);
  for (FeatureId id : rejected) {
    Track* tr = tracks.find(id);
    remove_feature(state, id);
    tr->transition(TrackStatus::rejected);
    tr->transition(TrackStatus::dead);
    tracks.erase(id);
  }
  if (!state.finite()) throw NumericalError("process_frame: state is no longer finite");

  // Candidates run against the corrected pose.
  std::vector<FeatureId> died;
  for (const auto& o : frame.observations) {
    Track* tr = tracks.find(o.id);
    if (!tr || tr->status != TrackStatus::candidate) continue;
    subfilter_depth_update(*tr, state, o.px, t, cfg);
    if (tr->status == TrackStatus::dead) died.push_back(o.id);
  }
  for (FeatureId id : died) tracks.erase(id);

  diag.n_promoted = select_in_state_features(state, tracks, cfg, t);
  diag.n_tracked = static_cast<int>(tracks.size());
  diag.n_in_state = state.feature_count();
  return diag;
}

ErrorStateSample error_state(const FilterState& state, const trajgen::GroundTruthSample& truth) {
  if (std::abs(state.t - truth.t) > 1e-9) {
    throw std::invalid_argument("error_state: estimate at t=" + std::to_string(state.t) +
                                " compared with truth at t=" + std::to_string(truth.t));
  }
  ErrorStateSample s;
  s.t = truth.t;
  s.e.segment<3>(0) = geom::log_rotation(geom::orthonormalize(state.R * truth.R_sb.transpose()));
  s.e.segment<3>(3) = state.T - truth.T_sb;
  s.e.segment<3>(6) = state.v - truth.v_sb;
  return s;
}

Estimator::Estimator(const FilterConfig& cfg, const trajgen::GroundTruthSample& truth0)
    : cfg_(cfg), state_(init_filter(cfg, truth0)) {}

void Estimator::propagate(const sensors::ImuSample& imu, double dt) { ekf::propagate(state_, imu, dt, cfg_); }

FrameDiagnostics Estimator::process(const sensors::VisionFrame& frame) {
  return process_frame(state_, tracks_, frame, cfg_);
}

bool Estimator::tracks_feature(FeatureId id) const {
  return tracks_.find(id) != nullptr || static_cast<int>(tracks_.size()) < cfg_.tracker_max;
}

void write_estimate_csv(const std::vector<EstimateSample>& samples, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << "t,wx,wy,wz,Tx,Ty,Tz,vx,vy,vz\n" << std::setprecision(17);
  for (const auto& s : samples) {
    out << s.t;
    for (const Vec3* v : {&s.w, &s.T, &s.v}) out << ',' << v->x() << ',' << v->y() << ',' << v->z();
    out << '\n';
  }
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

void write_diagnostics_jsonl(const std::vector<FrameDiagnostics>& diags, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  for (const auto& d : diags) {
    nlohmann::json j = {{"t", d.t},
                        {"n_tracked", d.n_tracked},
                        {"n_in_state", d.n_in_state},
                        {"n_gated_out", d.n_gated_out}};
    out << j.dump() << '\n';
  }
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

}  // namespace viomc::ekf
