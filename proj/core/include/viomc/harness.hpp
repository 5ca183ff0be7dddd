#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "viomc/config.hpp"
#include "viomc/ekf.hpp"
#include "viomc/metrics.hpp"
#include "viomc/perturb.hpp"
#include "viomc/sensors.hpp"
#include "viomc/trajgen.hpp"

namespace viomc::harness {

enum class SweepAxis { gaussian = 0, drift = 1, attribution = 2 };

const char* to_string(SweepAxis axis);
SweepAxis parse_sweep_axis(const std::string& name);

/// How the filter's assumed pixel std follows the injected noise.
struct FilterNoiseRule {
  enum class Kind { equal, plus_quarter, fixed };
  Kind kind = Kind::fixed;
  double value = 0.5;  // used by `fixed`

  double resolve(double sigma_p) const;
};

const char* to_string(FilterNoiseRule::Kind kind);

struct ExperimentSpec {
  std::string name = "experiment";
  std::uint64_t seed = 1;
  int n_trials = 20;
  SweepAxis axis = SweepAxis::gaussian;
  std::vector<double> sweep_values{0.5};
  FilterNoiseRule sigma_p_filter_rule;

  // Perturbation values on the axes that are not swept.
  double sigma_p = 0.0;
  double sigma_b = 0.0;
  double eta = 0.0;

  trajgen::TrajectoryConfig trajectory;
  sensors::ImuConfig imu;
  geom::CameraIntrinsics camera;
  ekf::FilterConfig filter;  // sigma_p_filter, camera and IMU densities are set per trial

  std::uint64_t cloud_seed = 2;
  int cloud_count = 300;
  std::optional<sensors::Box> cloud_box;  // defaults to the inflated trajectory box

  double frame_rate = 25.0;
  double rpe_delta = 1.0;
  bool noiseless_imu = false;
  bool centered_covariance = false;
  int threads = 0;  // 0: hardware concurrency

  void validate() const;
  int imu_per_frame() const;

  perturb::PerturbationConfig perturbation(std::size_t value_index, int trial_index) const;
  double sigma_p_filter(std::size_t value_index) const;
  ekf::FilterConfig filter_config(std::size_t value_index) const;
  sensors::ImuConfig imu_config() const;

  std::uint64_t trial_seed(std::size_t value_index, int trial_index) const;
  /// IMU noise depends on the trial index only, so every sweep value sees
  /// the same noise realisation for a given trial.
  std::uint64_t imu_seed(int trial_index) const;
};

/// Desk-scale defaults: 20 s, 20 trials, 300 landmarks.
ExperimentSpec desk_spec();

/// Reads a spec from a config table. Unknown keys are an error.
ExperimentSpec load_spec(const ConfigTable& table);
ExperimentSpec load_spec(const std::filesystem::path& path, const std::vector<std::string>& overrides = {});

/// Ground truth shared by every trial of an experiment.
struct Scenario {
  trajgen::Trajectory trajectory;
  sensors::PointCloud cloud;
  std::vector<sensors::VisionFrame> frames;
  std::vector<std::size_t> frame_samples;  // trajectory sample index per frame
};

Scenario build_scenario(const ExperimentSpec& spec);

struct TrialDiagnostics {
  double mean_tracked = 0.0;
  double mean_in_state = 0.0;
  std::size_t gated_out = 0;
  std::size_t swapped_checked = 0;   // gate decisions on swapped measurements
  std::size_t swapped_rejected = 0;
  std::size_t clean_checked = 0;
  std::size_t clean_rejected = 0;
};

struct TrialResult {
  std::size_t value_index = 0;
  double sweep_value = 0.0;
  int trial_index = 0;
  std::uint64_t seed = 0;
  double ate = 0.0;  // NaN when not computable
  double rpe = 0.0;
  double rho = 0.0;
  bool divergent = false;
  std::size_t frames_completed = 0;
  std::size_t frames_total = 0;
  std::vector<ekf::ErrorStateSample> errors;
  TrialDiagnostics diagnostics;

  /// Whether ATE/RPE/rho enter the box statistics.
  bool in_statistics() const;
};

/// Optional per-frame outputs of a trial for the CLI.
struct TrialTrace {
  std::vector<ekf::EstimateSample> estimates;
  std::vector<ekf::FrameDiagnostics> frames;
};

TrialResult run_trial(const ExperimentSpec& spec, const Scenario& scenario, std::size_t value_index,
                      int trial_index, TrialTrace* trace = nullptr);
TrialResult run_trial(const ExperimentSpec& spec, std::size_t value_index, int trial_index);

struct SweepResult {
  double value = 0.0;
  double sigma_p_filter = 0.0;
  std::vector<TrialResult> trials;  // ordered by trial index
  std::size_t n_divergent = 0;
  std::size_t n_excluded = 0;  // divergent trials left out of the box statistics
  std::optional<metrics::BoxStats> ate, rpe, rho, cov_norm;
  std::optional<metrics::CovarianceSeries> covariance;

  double swapped_rejection_rate() const;
  double clean_rejection_rate() const;
};

struct ExperimentResult {
  ExperimentSpec spec;
  double path_length = 0.0;
  std::vector<SweepResult> sweeps;
};

/// Reduces trial results (any order) into per-sweep statistics.
ExperimentResult aggregate(const ExperimentSpec& spec, double path_length, std::vector<TrialResult> trials);

struct RunOptions {
  int threads = -1;                 // -1: use spec.threads
  std::vector<std::size_t> order;   // optional permutation of the work list
  std::function<void(std::size_t done, std::size_t total)> progress;
};

ExperimentResult run_experiment(const ExperimentSpec& spec, const RunOptions& options = {});

/// Writes experiment.json, trials.csv, covariance.csv and, on request,
/// errors.csv into `dir` (created if missing).
void export_results(const ExperimentResult& result, const std::filesystem::path& dir, bool write_errors = false);

struct TrialRow {
  double sweep_value = 0.0;
  int trial_index = 0;
  std::uint64_t seed = 0;
  double ate = 0.0;
  double rpe = 0.0;
  double rho = 0.0;
  bool divergent = false;
};

std::vector<TrialRow> read_trials_csv(const std::filesystem::path& path);

}  // namespace viomc::harness
