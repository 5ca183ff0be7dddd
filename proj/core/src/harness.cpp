#include "viomc/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <limits>
#include <map>
#include <mutex>
#include <numeric>
#include <set>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "viomc/rng.hpp"

namespace viomc::harness {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

Vec3 vec3_or(const ConfigTable& t, const std::string& key, const Vec3& fallback) {
  const auto v = t.numbers(key, {fallback.x(), fallback.y(), fallback.z()});
  if (v.size() != 3) throw ConfigError(key + ": expected 3 numbers");
  return {v[0], v[1], v[2]};
}

nlohmann::json to_json(const Vec3& v) { return {v.x(), v.y(), v.z()}; }

nlohmann::json to_json(const metrics::BoxStats& b) {
  return {{"count", b.count},       {"q1", b.q1},
          {"median", b.median},     {"q3", b.q3},
          {"mean", b.mean},         {"whisker_lo", b.whisker_lo},
          {"whisker_hi", b.whisker_hi}, {"fliers", b.fliers}};
}

nlohmann::json spec_json(const ExperimentSpec& s) {
  nlohmann::json j;
  j["experiment"] = {{"name", s.name},
                     {"seed", s.seed},
                     {"n_trials", s.n_trials},
                     {"sweep_axis", to_string(s.axis)},
                     {"sweep_values", s.sweep_values},
                     {"frame_rate", s.frame_rate},
                     {"rpe_delta", s.rpe_delta},
                     {"noiseless_imu", s.noiseless_imu},
                     {"centered_covariance", s.centered_covariance}};
  const auto& tc = s.trajectory;
  j["trajectory"] = {{"seed", tc.seed},
                     {"duration", tc.duration},
                     {"imu_rate", tc.imu_rate},
                     {"sigma_alpha", tc.sigma_alpha},
                     {"sigma_omega", tc.sigma_omega},
                     {"v_min", to_json(tc.v_min)},
                     {"v_max", to_json(tc.v_max)},
                     {"t_min", to_json(tc.t_min)},
                     {"t_max", to_json(tc.t_max)},
                     {"w_bound", tc.w_bound},
                     {"initial_w", to_json(tc.initial_w)},
                     {"initial_T", to_json(tc.initial_T)},
                     {"initial_v", to_json(tc.initial_v)},
                     {"initial_alpha", to_json(tc.initial_alpha)},
                     {"initial_omega", to_json(tc.initial_omega)}};
  j["imu"] = {{"sigma_a", s.imu.sigma_a},
              {"sigma_g", s.imu.sigma_g},
              {"sigma_ba", s.imu.sigma_ba},
              {"sigma_bg", s.imu.sigma_bg},
              {"gravity", to_json(s.imu.gravity)}};
  j["camera"] = {{"fx", s.camera.fx},       {"fy", s.camera.fy},         {"cx", s.camera.cx},
                 {"cy", s.camera.cy},       {"width", s.camera.width},   {"height", s.camera.height}};
  const sensors::Box box = s.cloud_box.value_or(sensors::default_cloud_box(s.trajectory));
  j["cloud"] = {{"seed", s.cloud_seed}, {"count", s.cloud_count}, {"box_lo", to_json(box.lo)},
                {"box_hi", to_json(box.hi)}};
  const auto& f = s.filter;
  j["filter"] = {{"max_state_features", f.max_state_features},
                 {"tracker_min", f.tracker_min},
                 {"tracker_max", f.tracker_max},
                 {"gate_prob", f.gate_prob},
                 {"max_gate_failures", f.max_gate_failures},
                 {"max_candidate_age", f.max_candidate_age},
                 {"parallax_min_deg", f.parallax_min * 180.0 / std::numbers::pi},
                 {"z_near", f.z_near},
                 {"history_length", f.history_length},
                 {"init_rotation", f.init_cov.rotation},
                 {"init_position", f.init_cov.position},
                 {"init_velocity", f.init_cov.velocity},
                 {"init_gyro_bias", f.init_cov.gyro_bias},
                 {"init_accel_bias", f.init_cov.accel_bias}};
  // JSON has no infinity; an absent limit is written as null.
  j["filter"]["max_promotion_trace"] =
      std::isfinite(f.max_promotion_trace) ? nlohmann::json(f.max_promotion_trace) : nlohmann::json();
  j["perturbation"] = {{"sigma_p", s.sigma_p},
                       {"sigma_b", s.sigma_b},
                       {"eta", s.eta},
                       {"sigma_p_filter_rule", to_string(s.sigma_p_filter_rule.kind)},
                       {"sigma_p_filter", s.sigma_p_filter_rule.value}};
  return j;
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  return out;
}

void check_written(const std::ofstream& out, const std::filesystem::path& path) {
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

double safe_metric(const std::function<double()>& f) {
  try {
    return f();
  } catch (const std::invalid_argument&) {
    return kNaN;
  } catch (const geom::AlignmentError&) {
    return kNaN;
  }
}

}  // namespace

const char* to_string(SweepAxis axis) {
  switch (axis) {
    case SweepAxis::gaussian: return "gaussian";
    case SweepAxis::drift: return "drift";
    case SweepAxis::attribution: return "attribution";
  }
  return "?";
}

SweepAxis parse_sweep_axis(const std::string& name) {
  if (name == "gaussian") return SweepAxis::gaussian;
  if (name == "drift") return SweepAxis::drift;
  if (name == "attribution") return SweepAxis::attribution;
  throw ConfigError("unknown sweep axis '" + name + "' (gaussian, drift, attribution)");
}

const char* to_string(FilterNoiseRule::Kind kind) {
  switch (kind) {
    case FilterNoiseRule::Kind::equal: return "equal";
    case FilterNoiseRule::Kind::plus_quarter: return "plus_quarter";
    case FilterNoiseRule::Kind::fixed: return "fixed";
  }
  return "?";
}

double FilterNoiseRule::resolve(double sigma_p) const {
  switch (kind) {
    case Kind::equal: return sigma_p;
    case Kind::plus_quarter: return sigma_p + 0.25;
    case Kind::fixed: return value;
  }
  return value;
}

// ---------------------------------------------------------------- spec

void ExperimentSpec::validate() const {
  if (n_trials < 2) throw std::invalid_argument("n_trials must be at least 2");
  if (sweep_values.empty()) throw std::invalid_argument("sweep_values must not be empty");
  if (!(frame_rate > 0.0)) throw std::invalid_argument("frame_rate must be positive");
  if (!(rpe_delta > 0.0)) throw std::invalid_argument("rpe_delta must be positive");
  if (cloud_count < 1) throw std::invalid_argument("cloud count must be positive");
  if (threads < 0) throw std::invalid_argument("threads must be non-negative");
  trajectory.validate();
  imu_config().validate();
  camera.validate();
  imu_per_frame();
  for (std::size_t i = 0; i < sweep_values.size(); ++i) {
    perturbation(i, 0).validate();
    if (!(sigma_p_filter(i) > 0.0)) {
      throw std::invalid_argument("filter pixel std must be positive (sweep value " + fmt(sweep_values[i]) +
                                  " resolves to " + fmt(sigma_p_filter(i)) + ")");
    }
    filter_config(i).validate();
  }
  if (cloud_box) {
    if ((cloud_box->hi - cloud_box->lo).minCoeff() <= 0.0) throw std::invalid_argument("cloud box is empty");
  }
}

int ExperimentSpec::imu_per_frame() const {
  const double ratio = trajectory.imu_rate / frame_rate;
  const double r = std::round(ratio);
  if (r < 1.0 || std::abs(ratio - r) > 1e-9) {
    throw std::invalid_argument("imu_rate must be an integer multiple of frame_rate");
  }
  return static_cast<int>(r);
}

std::uint64_t ExperimentSpec::trial_seed(std::size_t value_index, int trial_index) const {
  return derive_seed({seed, static_cast<std::uint64_t>(Stream::perturbation), static_cast<std::uint64_t>(axis),
                      value_index, static_cast<std::uint64_t>(trial_index)});
}

std::uint64_t ExperimentSpec::imu_seed(int trial_index) const {
  return derive_seed({seed, static_cast<std::uint64_t>(Stream::imu), static_cast<std::uint64_t>(trial_index)});
}

perturb::PerturbationConfig ExperimentSpec::perturbation(std::size_t value_index, int trial_index) const {
  perturb::PerturbationConfig p{sigma_p, sigma_b, eta, trial_seed(value_index, trial_index)};
  const double v = sweep_values.at(value_index);
  switch (axis) {
    case SweepAxis::gaussian: p.sigma_p = v; break;
    case SweepAxis::drift: p.sigma_b = v; break;
    case SweepAxis::attribution: p.eta = v; break;
  }
  return p;
}

double ExperimentSpec::sigma_p_filter(std::size_t value_index) const {
  return sigma_p_filter_rule.resolve(perturbation(value_index, 0).sigma_p);
}

sensors::ImuConfig ExperimentSpec::imu_config() const {
  sensors::ImuConfig c = noiseless_imu ? sensors::ImuConfig::noiseless() : imu;
  c.gravity = imu.gravity;
  c.rate = trajectory.imu_rate;
  return c;
}

ekf::FilterConfig ExperimentSpec::filter_config(std::size_t value_index) const {
  ekf::FilterConfig f = filter;
  f.sigma_p_filter = sigma_p_filter(value_index);
  f.camera = camera;
  const auto ic = imu_config();
  f.sigma_a = ic.sigma_a;
  f.sigma_g = ic.sigma_g;
  f.sigma_ba = ic.sigma_ba;
  f.sigma_bg = ic.sigma_bg;
  f.gravity = ic.gravity;
  return f;
}

ExperimentSpec desk_spec() {
  ExperimentSpec s;
  s.n_trials = 20;
  s.trajectory.duration = 20.0;
  s.trajectory.seed = 1;
  // Camera (= body) optical axis along spatial +x, into the long side of
  // the landmark box.
  s.trajectory.initial_w = Vec3(0.0, std::numbers::pi / 2.0, 0.0);
  s.cloud_count = 300;
  return s;
}

ExperimentSpec load_spec(const ConfigTable& t) {
  ExperimentSpec s = desk_spec();
  s.name = t.string("experiment.name", s.name);
  s.seed = t.unsigned_integer("experiment.seed", s.seed);
  s.n_trials = static_cast<int>(t.integer("experiment.n_trials", s.n_trials));
  s.axis = parse_sweep_axis(t.string("experiment.sweep_axis", to_string(s.axis)));
  s.sweep_values = t.numbers("experiment.sweep_values", s.sweep_values);
  s.frame_rate = t.number("experiment.frame_rate", s.frame_rate);
  s.rpe_delta = t.number("experiment.rpe_delta", s.rpe_delta);
  s.noiseless_imu = t.boolean("experiment.noiseless_imu", s.noiseless_imu);
  s.centered_covariance = t.boolean("experiment.centered_covariance", s.centered_covariance);
  s.threads = static_cast<int>(t.integer("experiment.threads", s.threads));

  auto& tc = s.trajectory;
  tc.seed = t.unsigned_integer("trajectory.seed", tc.seed);
  tc.duration = t.number("trajectory.duration", tc.duration);
  tc.imu_rate = t.number("trajectory.imu_rate", tc.imu_rate);
  tc.sigma_alpha = t.number("trajectory.sigma_alpha", tc.sigma_alpha);
  tc.sigma_omega = t.number("trajectory.sigma_omega", tc.sigma_omega);
  tc.v_min = vec3_or(t, "trajectory.v_min", tc.v_min);
  tc.v_max = vec3_or(t, "trajectory.v_max", tc.v_max);
  tc.t_min = vec3_or(t, "trajectory.t_min", tc.t_min);
  tc.t_max = vec3_or(t, "trajectory.t_max", tc.t_max);
  tc.w_bound = t.number("trajectory.w_bound", tc.w_bound);
  tc.initial_w = vec3_or(t, "trajectory.initial_w", tc.initial_w);
  tc.initial_T = vec3_or(t, "trajectory.initial_T", tc.initial_T);
  tc.initial_v = vec3_or(t, "trajectory.initial_v", tc.initial_v);
  tc.initial_alpha = vec3_or(t, "trajectory.initial_alpha", tc.initial_alpha);
  tc.initial_omega = vec3_or(t, "trajectory.initial_omega", tc.initial_omega);

  s.imu.sigma_a = t.number("imu.sigma_a", s.imu.sigma_a);
  s.imu.sigma_g = t.number("imu.sigma_g", s.imu.sigma_g);
  s.imu.sigma_ba = t.number("imu.sigma_ba", s.imu.sigma_ba);
  s.imu.sigma_bg = t.number("imu.sigma_bg", s.imu.sigma_bg);
  s.imu.gravity = vec3_or(t, "imu.gravity", s.imu.gravity);

  s.camera.fx = t.number("camera.fx", s.camera.fx);
  s.camera.fy = t.number("camera.fy", s.camera.fy);
  s.camera.cx = t.number("camera.cx", s.camera.cx);
  s.camera.cy = t.number("camera.cy", s.camera.cy);
  s.camera.width = static_cast<int>(t.integer("camera.width", s.camera.width));
  s.camera.height = static_cast<int>(t.integer("camera.height", s.camera.height));

  s.cloud_seed = t.unsigned_integer("cloud.seed", s.cloud_seed);
  s.cloud_count = static_cast<int>(t.integer("cloud.count", s.cloud_count));
  if (t.has("cloud.box_lo") || t.has("cloud.box_hi")) {
    const auto def = sensors::default_cloud_box(s.trajectory);
    s.cloud_box = sensors::Box{vec3_or(t, "cloud.box_lo", def.lo), vec3_or(t, "cloud.box_hi", def.hi)};
  }

  auto& f = s.filter;
  f.max_state_features = static_cast<int>(t.integer("filter.max_state_features", f.max_state_features));
  f.tracker_min = static_cast<int>(t.integer("filter.tracker_min", f.tracker_min));
  f.tracker_max = static_cast<int>(t.integer("filter.tracker_max", f.tracker_max));
  f.gate_prob = t.number("filter.gate_prob", f.gate_prob);
  f.max_gate_failures = static_cast<int>(t.integer("filter.max_gate_failures", f.max_gate_failures));
  f.max_candidate_age = t.number("filter.max_candidate_age", f.max_candidate_age);
  f.parallax_min = t.number("filter.parallax_min_deg", f.parallax_min * 180.0 / std::numbers::pi) *
                   std::numbers::pi / 180.0;
  f.max_promotion_trace = t.number("filter.max_promotion_trace", f.max_promotion_trace);
  f.z_near = t.number("filter.z_near", f.z_near);
  f.history_length = static_cast<std::size_t>(t.integer("filter.history_length", static_cast<std::int64_t>(f.history_length)));
  f.init_cov.rotation = t.number("filter.init_rotation", f.init_cov.rotation);
  f.init_cov.position = t.number("filter.init_position", f.init_cov.position);
  f.init_cov.velocity = t.number("filter.init_velocity", f.init_cov.velocity);
  f.init_cov.gyro_bias = t.number("filter.init_gyro_bias", f.init_cov.gyro_bias);
  f.init_cov.accel_bias = t.number("filter.init_accel_bias", f.init_cov.accel_bias);

  s.sigma_p = t.number("perturbation.sigma_p", s.sigma_p);
  s.sigma_b = t.number("perturbation.sigma_b", s.sigma_b);
  s.eta = t.number("perturbation.eta", s.eta);
  const std::string rule = t.string("perturbation.sigma_p_filter_rule", to_string(s.sigma_p_filter_rule.kind));
  if (rule == "equal") {
    s.sigma_p_filter_rule.kind = FilterNoiseRule::Kind::equal;
  } else if (rule == "plus_quarter") {
    s.sigma_p_filter_rule.kind = FilterNoiseRule::Kind::plus_quarter;
  } else if (rule == "fixed") {
    s.sigma_p_filter_rule.kind = FilterNoiseRule::Kind::fixed;
  } else {
    throw ConfigError("unknown sigma_p_filter_rule '" + rule + "' (equal, plus_quarter, fixed)");
  }
  s.sigma_p_filter_rule.value = t.number("perturbation.sigma_p_filter", s.sigma_p_filter_rule.value);

  const auto unknown = t.unread_keys();
  if (!unknown.empty()) {
    std::string msg = "unknown config key(s):";
    for (const auto& k : unknown) msg += " " + k;
    throw ConfigError(msg);
  }
  s.validate();
  return s;
}

ExperimentSpec load_spec(const std::filesystem::path& path, const std::vector<std::string>& overrides) {
  auto table = ConfigTable::load(path);
  for (const auto& o : overrides) table.set_override(o);
  return load_spec(table);
}

// ---------------------------------------------------------------- trials

Scenario build_scenario(const ExperimentSpec& spec) {
  Scenario sc;
  sc.trajectory = trajgen::generate_brownian_trajectory(spec.trajectory);
  const auto box = spec.cloud_box.value_or(sensors::default_cloud_box(spec.trajectory));
  sc.cloud = sensors::generate_point_cloud(spec.cloud_count, box, derive_seed({static_cast<std::uint64_t>(Stream::cloud), spec.cloud_seed}));
  const auto step = static_cast<std::size_t>(spec.imu_per_frame());
  for (std::size_t k = 0; k < sc.trajectory.samples.size(); k += step) {
    const auto& g = sc.trajectory.samples[k];
    sc.frames.push_back(sensors::render_frame(g.t, g.pose(), sc.cloud, spec.camera, spec.filter.z_near));
    sc.frame_samples.push_back(k);
  }
  return sc;
}

bool TrialResult::in_statistics() const {
  if (!std::isfinite(ate) || !std::isfinite(rpe) || !std::isfinite(rho)) return false;
  return !divergent || 2 * frames_completed >= frames_total;
}

TrialResult run_trial(const ExperimentSpec& spec, const Scenario& sc, std::size_t value_index, int trial_index,
                      TrialTrace* trace) {
  TrialResult res;
  res.value_index = value_index;
  res.sweep_value = spec.sweep_values.at(value_index);
  res.trial_index = trial_index;
  res.seed = spec.trial_seed(value_index, trial_index);
  res.frames_total = sc.frames.size();

  const auto& traj = sc.trajectory;
  const double dt = traj.dt();
  const auto imu = sensors::simulate_imu(traj, spec.imu_config(), spec.imu_seed(trial_index));
  ekf::Estimator est(spec.filter_config(value_index), traj.samples.front());
  perturb::FramePerturber perturber(spec.perturbation(value_index, trial_index));

  std::vector<geom::Pose> est_poses, gt_poses;
  std::vector<double> times;
  double tracked_sum = 0.0, in_state_sum = 0.0;
  auto& d = res.diagnostics;
  std::size_t k = 0;
  try {
    for (std::size_t fi = 0; fi < sc.frames.size(); ++fi) {
      const std::size_t kf = sc.frame_samples[fi];
      for (; k < kf; ++k) est.propagate(imu.samples[k], dt);
      const auto corrupted = perturber(sc.frames[fi], [&est](FeatureId id) { return est.tracks_feature(id); });
      const auto diag = est.process(corrupted.frame);
      if (!est.state().finite()) throw ekf::NumericalError("non-finite filter state");

      const std::set<FeatureId> swapped(corrupted.swapped.begin(), corrupted.swapped.end());
      for (const auto& g : diag.gates) {
        if (swapped.count(g.id)) {
          ++d.swapped_checked;
          d.swapped_rejected += !g.accepted;
        } else {
          ++d.clean_checked;
          d.clean_rejected += !g.accepted;
        }
      }
      d.gated_out += static_cast<std::size_t>(diag.n_gated_out);
      tracked_sum += diag.n_tracked;
      in_state_sum += diag.n_in_state;

      const auto& truth = traj.samples[kf];
      res.errors.push_back(ekf::error_state(est.state(), truth));
      est_poses.push_back(est.state().pose());
      gt_poses.push_back(truth.pose());
      times.push_back(truth.t);
      if (trace) {
        const auto& s = est.state();
        trace->estimates.push_back({s.t, geom::log_rotation(s.R), s.T, s.v});
        trace->frames.push_back(diag);
      }
      res.frames_completed = fi + 1;
    }
  } catch (const ekf::NumericalError&) {
    res.divergent = true;
  }

  if (res.frames_completed > 0) {
    d.mean_tracked = tracked_sum / static_cast<double>(res.frames_completed);
    d.mean_in_state = in_state_sum / static_cast<double>(res.frames_completed);
  }
  res.ate = safe_metric([&] { return metrics::absolute_trajectory_error(est_poses, gt_poses); });
  res.rpe = safe_metric([&] { return metrics::relative_pose_error(est_poses, gt_poses, times, spec.rpe_delta); });
  res.rho = safe_metric([&] {
    return metrics::scale_factor(geom::translations(est_poses), geom::translations(gt_poses));
  });
  return res;
}

TrialResult run_trial(const ExperimentSpec& spec, std::size_t value_index, int trial_index) {
  spec.validate();
  return run_trial(spec, build_scenario(spec), value_index, trial_index);
}

// ---------------------------------------------------------------- experiments

double SweepResult::swapped_rejection_rate() const {
  std::size_t n = 0, r = 0;
  for (const auto& t : trials) {
    n += t.diagnostics.swapped_checked;
    r += t.diagnostics.swapped_rejected;
  }
  return n ? static_cast<double>(r) / static_cast<double>(n) : kNaN;
}

double SweepResult::clean_rejection_rate() const {
  std::size_t n = 0, r = 0;
  for (const auto& t : trials) {
    n += t.diagnostics.clean_checked;
    r += t.diagnostics.clean_rejected;
  }
  return n ? static_cast<double>(r) / static_cast<double>(n) : kNaN;
}

ExperimentResult aggregate(const ExperimentSpec& spec, double path_length, std::vector<TrialResult> trials) {
  ExperimentResult out;
  out.spec = spec;
  out.path_length = path_length;
  std::sort(trials.begin(), trials.end(), [](const TrialResult& a, const TrialResult& b) {
    return std::tie(a.value_index, a.trial_index) < std::tie(b.value_index, b.trial_index);
  });
  out.sweeps.resize(spec.sweep_values.size());
  for (std::size_t i = 0; i < out.sweeps.size(); ++i) {
    out.sweeps[i].value = spec.sweep_values[i];
    out.sweeps[i].sigma_p_filter = spec.sigma_p_filter(i);
  }
  for (auto& t : trials) out.sweeps.at(t.value_index).trials.push_back(std::move(t));

  for (auto& sw : out.sweeps) {
    std::vector<double> ate, rpe, rho;
    std::vector<std::vector<metrics::Vec9>> runs;
    std::vector<double> times;
    for (const auto& t : sw.trials) {
      sw.n_divergent += t.divergent;
      if (t.in_statistics()) {
        ate.push_back(t.ate);
        rpe.push_back(t.rpe);
        rho.push_back(t.rho);
      } else if (t.divergent) {
        ++sw.n_excluded;
      }
      if (t.divergent) continue;
      std::vector<metrics::Vec9> e;
      e.reserve(t.errors.size());
      for (const auto& s : t.errors) e.push_back(s.e);
      if (times.empty()) {
        for (const auto& s : t.errors) times.push_back(s.t);
      }
      runs.push_back(std::move(e));
    }
    if (!ate.empty()) {
      sw.ate = metrics::box_stats(ate);
      sw.rpe = metrics::box_stats(rpe);
      sw.rho = metrics::box_stats(rho);
    }
    if (runs.size() >= 2) {
      sw.covariance = metrics::covariance_series(times, runs, spec.centered_covariance);
      sw.cov_norm = metrics::box_stats(sw.covariance->frobenius);
    }
  }
  return out;
}

ExperimentResult run_experiment(const ExperimentSpec& spec, const RunOptions& options) {
  spec.validate();
  const Scenario sc = build_scenario(spec);

  std::vector<std::pair<std::size_t, int>> work;
  for (std::size_t v = 0; v < spec.sweep_values.size(); ++v) {
    for (int i = 0; i < spec.n_trials; ++i) work.emplace_back(v, i);
  }
  if (!options.order.empty()) {
    if (options.order.size() != work.size()) throw std::invalid_argument("run order must permute the work list");
    std::vector<std::pair<std::size_t, int>> permuted;
    for (auto idx : options.order) permuted.push_back(work.at(idx));
    work = std::move(permuted);
  }

  int threads = options.threads >= 0 ? options.threads : spec.threads;
  if (threads == 0) threads = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  threads = std::min<int>(threads, static_cast<int>(work.size()));

  std::vector<TrialResult> results(work.size());
  std::atomic<std::size_t> next{0}, done{0};
  std::exception_ptr failure;
  std::mutex mu;
  auto worker = [&] {
    for (;;) {
      const std::size_t w = next.fetch_add(1);
      if (w >= work.size()) return;
      try {
        results[w] = run_trial(spec, sc, work[w].first, work[w].second);
      } catch (...) {
        std::lock_guard lock(mu);
        if (!failure) failure = std::current_exception();
        next = work.size();
        return;
      }
      const std::size_t n = ++done;
      if (options.progress) {
        std::lock_guard lock(mu);
        options.progress(n, work.size());
      }
    }
  };
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int i = 0; i < threads; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (failure) std::rethrow_exception(failure);
  return aggregate(spec, sc.trajectory.path_length, std::move(results));
}

// ---------------------------------------------------------------- export

void export_results(const ExperimentResult& result, const std::filesystem::path& dir, bool write_errors) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw std::runtime_error("cannot create " + dir.string() + ": " + ec.message());

  {
    const auto path = dir / "trials.csv";
    auto out = open_out(path);
    out << "sweep_value,trial_index,seed,ate,rpe,rho,divergent\n";
    for (const auto& sw : result.sweeps) {
      for (const auto& t : sw.trials) {
        out << fmt(t.sweep_value) << ',' << t.trial_index << ',' << t.seed << ',' << fmt(t.ate) << ','
            << fmt(t.rpe) << ',' << fmt(t.rho) << ',' << (t.divergent ? 1 : 0) << '\n';
      }
    }
    check_written(out, path);
  }
  {
    const auto path = dir / "covariance.csv";
    auto out = open_out(path);
    out << "t,sweep_value,frobenius";
    for (int i = 0; i < 9; ++i) out << ",sigma_" << i << i;
    out << '\n';
    for (const auto& sw : result.sweeps) {
      if (!sw.covariance) continue;
      const auto& c = *sw.covariance;
      for (std::size_t k = 0; k < c.t.size(); ++k) {
        out << fmt(c.t[k]) << ',' << fmt(sw.value) << ',' << fmt(c.frobenius[k]);
        for (int i = 0; i < 9; ++i) out << ',' << fmt(c.sigma[k](i, i));
        out << '\n';
      }
    }
    check_written(out, path);
  }
  if (write_errors) {
    const auto path = dir / "errors.csv";
    auto out = open_out(path);
    out << "sweep_value,trial_index,t,e_rx,e_ry,e_rz,e_px,e_py,e_pz,e_vx,e_vy,e_vz\n";
    for (const auto& sw : result.sweeps) {
      for (const auto& t : sw.trials) {
        for (const auto& s : t.errors) {
          out << fmt(t.sweep_value) << ',' << t.trial_index << ',' << fmt(s.t);
          for (int i = 0; i < 9; ++i) out << ',' << fmt(s.e(i));
          out << '\n';
        }
      }
    }
    check_written(out, path);
  }
  {
    const auto path = dir / "experiment.json";
    nlohmann::json j;
    j["spec"] = spec_json(result.spec);
    j["path_length"] = result.path_length;
    auto& sweeps = j["sweeps"] = nlohmann::json::array();
    auto nan_null = [](double x) { return std::isfinite(x) ? nlohmann::json(x) : nlohmann::json(); };
    for (const auto& sw : result.sweeps) {
      nlohmann::json s;
      s["value"] = sw.value;
      s["sigma_p_filter"] = sw.sigma_p_filter;
      s["n_trials"] = sw.trials.size();
      s["n_divergent"] = sw.n_divergent;
      s["n_excluded"] = sw.n_excluded;
      for (const auto& [name, box] : {std::pair{"ate", &sw.ate}, std::pair{"rpe", &sw.rpe},
                                      std::pair{"rho", &sw.rho}, std::pair{"cov_norm", &sw.cov_norm}}) {
        s[name] = *box ? to_json(**box) : nlohmann::json();
      }
      s["mean_covariance_frobenius"] = sw.covariance ? nlohmann::json(sw.covariance->mean_frobenius) : nlohmann::json();
      s["swapped_rejection_rate"] = nan_null(sw.swapped_rejection_rate());
      s["clean_rejection_rate"] = nan_null(sw.clean_rejection_rate());
      sweeps.push_back(std::move(s));
    }
    auto out = open_out(path);
    out << j.dump(2) << '\n';
    check_written(out, path);
  }
}

std::vector<TrialRow> read_trials_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != "sweep_value,trial_index,seed,ate,rpe,rho,divergent") {
    throw std::runtime_error(path.string() + ": unexpected header");
  }
  std::vector<TrialRow> rows;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::vector<std::string> cells;
    std::string c;
    while (std::getline(ss, c, ',')) cells.push_back(c);
    if (cells.size() != 7) throw std::runtime_error(path.string() + ":" + std::to_string(lineno) + ": expected 7 columns");
    try {
      TrialRow r;
      r.sweep_value = std::stod(cells[0]);
      r.trial_index = std::stoi(cells[1]);
      r.seed = std::stoull(cells[2]);
      r.ate = std::stod(cells[3]);
      r.rpe = std::stod(cells[4]);
      r.rho = std::stod(cells[5]);
      r.divergent = cells[6] == "1";
      rows.push_back(r);
    } catch (const std::logic_error&) {
      throw std::runtime_error(path.string() + ":" + std::to_string(lineno) + ": malformed row");
    }
  }
  return rows;
}

}  // namespace viomc::harness
