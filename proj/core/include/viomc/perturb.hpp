#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <vector>

#include "viomc/rng.hpp"
#include "viomc/sensors.hpp"

namespace viomc::perturb {

struct PerturbationConfig {
  double sigma_p = 0.0;  // px, white noise
  double sigma_b = 0.0;  // px, per-frame drift increment
  double eta = 0.0;      // fraction of tracked features swapped per frame
  std::uint64_t seed = 0;

  void validate() const;
  bool is_identity() const { return sigma_p == 0.0 && sigma_b == 0.0 && eta == 0.0; }
};

/// Per-feature pixel bias. Created at (0, 0) on first detection and purged
/// as soon as the feature is missing from a frame.
class DriftRegistry {
 public:
  const Vec2* find(FeatureId id) const;
  std::size_t size() const { return biases_.size(); }

  // apply_drift is the only writer.
  friend sensors::VisionFrame apply_drift(sensors::VisionFrame, DriftRegistry&, double, Rng&);

 private:
  std::map<FeatureId, Vec2> biases_;
};

sensors::VisionFrame add_gaussian_noise(sensors::VisionFrame frame, double sigma_p, Rng& rng);

sensors::VisionFrame apply_drift(sensors::VisionFrame frame, DriftRegistry& registry, double sigma_b,
                                 Rng& rng);

struct SwapResult {
  sensors::VisionFrame frame;
  std::vector<FeatureId> swapped;  // ids whose pixel now belongs to another feature
};

using TrackedPredicate = std::function<bool(FeatureId)>;

/// Swaps the pixels of 2*floor(eta*M/2) uniformly chosen observations in
/// uniformly random pairs, where M counts the observations accepted by
/// `tracked` (all of them when it is empty).
SwapResult swap_attributions(sensors::VisionFrame frame, double eta, Rng& rng,
                             const TrackedPredicate& tracked = {});

/// Per-trial corruption pipeline: drift, then Gaussian noise, then swaps.
class FramePerturber {
 public:
  explicit FramePerturber(const PerturbationConfig& cfg);

  SwapResult operator()(const sensors::VisionFrame& frame, const TrackedPredicate& tracked = {});

  const DriftRegistry& drift() const { return drift_; }

 private:
  PerturbationConfig cfg_;
  Rng rng_;
  DriftRegistry drift_;
};

}  // namespace viomc::perturb
