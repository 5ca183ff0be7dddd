// viomc command line: trajectory generation, single trials, Monte-Carlo
// experiments, excitation reports and sensor-data export.
//
// Exit codes: 0 success, 1 usage error, 2 runtime failure.

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "viomc/harness.hpp"

namespace fs = std::filesystem;
using namespace viomc;

namespace {

struct SpecOptions {
  std::string config;
  std::vector<std::string> overrides;
  std::optional<std::uint64_t> seed;
  std::optional<int> trials;
};

void add_spec_options(CLI::App* cmd, SpecOptions& o) {
  cmd->add_option("-c,--config", o.config, "Experiment config file (TOML subset)")->check(CLI::ExistingFile);
  cmd->add_option("--set", o.overrides, "Override a config key, e.g. --set filter.gate_prob=0.99");
}

harness::ExperimentSpec load(const SpecOptions& o) {
  harness::ExperimentSpec spec;
  if (o.config.empty()) {
    ConfigTable table;
    for (const auto& s : o.overrides) table.set_override(s);
    spec = harness::load_spec(table);
  } else {
    spec = harness::load_spec(o.config, o.overrides);
  }
  if (o.seed) spec.seed = *o.seed;
  if (o.trials) spec.n_trials = *o.trials;
  spec.validate();
  return spec;
}

nlohmann::json excitation_json(const trajgen::ExcitationReport& r) {
  return {{"angular_velocity", r.angular_velocity},
          {"angular_acceleration", r.angular_acceleration},
          {"angular_jerk", r.angular_jerk},
          {"linear_jerk", r.linear_jerk},
          {"sufficient", r.sufficient()}};
}

nlohmann::json nan_null(double x) { return std::isfinite(x) ? nlohmann::json(x) : nlohmann::json(); }

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw std::runtime_error("cannot create " + dir.string() + ": " + ec.message());
}

int generate_trajectory(const SpecOptions& o, const std::optional<std::uint64_t>& traj_seed, const fs::path& out) {
  auto spec = load(o);
  if (traj_seed) spec.trajectory.seed = *traj_seed;
  const auto traj = trajgen::generate_brownian_trajectory(spec.trajectory);
  if (out.has_parent_path()) ensure_dir(out.parent_path());
  trajgen::write_trajectory_csv(traj, out);
  nlohmann::json j = {{"samples", traj.samples.size()},
                      {"path_length", traj.path_length},
                      {"excitation", excitation_json(trajgen::excitation_report(traj))}};
  std::cout << j.dump(2) << '\n';
  return 0;
}

int run_trial(const SpecOptions& o, std::size_t value_index, int trial_index, const fs::path& out) {
  const auto spec = load(o);
  if (value_index >= spec.sweep_values.size()) {
    throw CLI::ValidationError("--value-index", "out of range for experiment.sweep_values");
  }
  const auto sc = harness::build_scenario(spec);
  harness::TrialTrace trace;
  const auto r = harness::run_trial(spec, sc, value_index, trial_index, &trace);
  ensure_dir(out);
  ekf::write_estimate_csv(trace.estimates, out / "estimate.csv");
  ekf::write_diagnostics_jsonl(trace.frames, out / "diagnostics.jsonl");
  const auto& d = r.diagnostics;
  nlohmann::json j = {{"sweep_axis", harness::to_string(spec.axis)},
                      {"sweep_value", r.sweep_value},
                      {"trial_index", r.trial_index},
                      {"seed", r.seed},
                      {"ate", nan_null(r.ate)},
                      {"rpe", nan_null(r.rpe)},
                      {"rho", nan_null(r.rho)},
                      {"divergent", r.divergent},
                      {"frames_completed", r.frames_completed},
                      {"frames_total", r.frames_total},
                      {"path_length", sc.trajectory.path_length},
                      {"mean_tracked", d.mean_tracked},
                      {"mean_in_state", d.mean_in_state},
                      {"gated_out", d.gated_out}};
  std::ofstream(out / "trial.json") << j.dump(2) << '\n';
  std::cout << j.dump(2) << '\n';
  return 0;
}

int run_experiment(const SpecOptions& o, std::optional<int> threads, bool write_errors, bool quiet,
                   const fs::path& out) {
  const auto spec = load(o);
  harness::RunOptions ro;
  if (threads) ro.threads = *threads;
  if (!quiet) {
    ro.progress = [](std::size_t done, std::size_t total) {
      std::cerr << "\rtrials " << done << "/" << total << std::flush;
      if (done == total) std::cerr << '\n';
    };
  }
  const auto result = harness::run_experiment(spec, ro);
  harness::export_results(result, out, write_errors);
  if (!quiet) {
    for (const auto& sw : result.sweeps) {
      std::cerr << harness::to_string(spec.axis) << " = " << sw.value;
      if (sw.ate) std::cerr << "  mean ATE " << sw.ate->mean << " m";
      if (sw.covariance) std::cerr << "  |mean Sigma|_F " << sw.covariance->mean_frobenius;
      std::cerr << "  divergent " << sw.n_divergent << '\n';
    }
  }
  return 0;
}

int excitation(const fs::path& in) {
  const auto traj = trajgen::read_trajectory_csv(in);
  std::cout << excitation_json(trajgen::excitation_report(traj)).dump(2) << '\n';
  return 0;
}

int export_data(const SpecOptions& o, int trial_index, const fs::path& out) {
  const auto spec = load(o);
  const auto sc = harness::build_scenario(spec);
  ensure_dir(out);
  trajgen::write_trajectory_csv(sc.trajectory, out / "trajectory.csv");
  sensors::write_cloud_csv(sc.cloud, out / "cloud.csv");
  sensors::write_frames_jsonl(sc.frames, out / "frames.jsonl");
  sensors::write_imu_csv(sensors::simulate_imu(sc.trajectory, spec.imu_config(), spec.imu_seed(trial_index)),
                         out / "imu.csv");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Monte-Carlo workbench for EKF visual-inertial odometry under feature-track perturbations"};
  app.require_subcommand(1);

  SpecOptions gen_opts;
  std::optional<std::uint64_t> gen_seed;
  std::string gen_out;
  auto* gen = app.add_subcommand("generate-trajectory", "Generate a Brownian trajectory CSV and excitation report");
  add_spec_options(gen, gen_opts);
  gen->add_option("--seed", gen_seed, "Trajectory seed (overrides trajectory.seed)");
  gen->add_option("-o,--out", gen_out, "Output trajectory CSV")->required();

  SpecOptions trial_opts;
  std::size_t value_index = 0;
  int trial_index = 0;
  std::string trial_out;
  auto* trial = app.add_subcommand("run-trial", "Run one trial; writes estimate.csv, diagnostics.jsonl, trial.json");
  add_spec_options(trial, trial_opts);
  trial->add_option("--seed", trial_opts.seed, "Experiment seed");
  trial->add_option("--value-index", value_index, "Index into experiment.sweep_values");
  trial->add_option("--trial", trial_index, "Trial index")->check(CLI::NonNegativeNumber);
  trial->add_option("-o,--out", trial_out, "Output directory")->required();

  SpecOptions exp_opts;
  std::optional<int> threads;
  bool write_errors = false;
  bool quiet = false;
  std::string exp_out;
  auto* exp = app.add_subcommand("run-experiment", "Run a Monte-Carlo sweep and export the results");
  add_spec_options(exp, exp_opts);
  exp->add_option("--seed", exp_opts.seed, "Experiment seed");
  exp->add_option("--trials", exp_opts.trials, "Trials per sweep value")->check(CLI::Range(2, 1000000));
  exp->add_option("--threads", threads, "Worker threads (0: all cores)")->check(CLI::NonNegativeNumber);
  exp->add_flag("--errors", write_errors, "Also write per-frame error states (errors.csv)");
  exp->add_flag("-q,--quiet", quiet, "No progress output");
  exp->add_option("-o,--out", exp_out, "Output directory")->required();

  std::string exc_in;
  auto* exc = app.add_subcommand("excitation", "Minimum-excitation report for a trajectory CSV");
  exc->add_option("trajectory", exc_in, "Trajectory CSV")->required()->check(CLI::ExistingFile);

  SpecOptions export_opts;
  int export_trial = 0;
  std::string export_out;
  auto* exd = app.add_subcommand("export", "Write trajectory, cloud, frames and IMU stream of one trial");
  add_spec_options(exd, export_opts);
  exd->add_option("--seed", export_opts.seed, "Experiment seed");
  exd->add_option("--trial", export_trial, "Trial index (selects the IMU noise)")->check(CLI::NonNegativeNumber);
  exd->add_option("-o,--out", export_out, "Output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    if (*gen) return generate_trajectory(gen_opts, gen_seed, gen_out);
    if (*trial) return run_trial(trial_opts, value_index, trial_index, trial_out);
    if (*exp) return run_experiment(exp_opts, threads, write_errors, quiet, exp_out);
    if (*exc) return excitation(exc_in);
    if (*exd) return export_data(export_opts, export_trial, export_out);
  } catch (const CLI::ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 1;
}
