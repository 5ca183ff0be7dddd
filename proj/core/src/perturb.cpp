#include "viomc/perturb.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace viomc::perturb {

void PerturbationConfig::validate() const {
  if (!(sigma_p >= 0.0) || !(sigma_b >= 0.0)) {
    throw std::invalid_argument("perturbation: deviations must be non-negative");
  }
  if (!(eta >= 0.0 && eta <= 1.0)) {
    throw std::invalid_argument("perturbation: eta must lie in [0, 1]");
  }
}

const Vec2* DriftRegistry::find(FeatureId id) const {
  auto it = biases_.find(id);
  return it == biases_.end() ? nullptr : &it->second;
}

sensors::VisionFrame add_gaussian_noise(sensors::VisionFrame frame, double sigma_p, Rng& rng) {
  if (sigma_p == 0.0) return frame;
  for (auto& o : frame.observations) {
    o.px.u += rng.normal(sigma_p);
    o.px.v += rng.normal(sigma_p);
  }
  return frame;
}

sensors::VisionFrame apply_drift(sensors::VisionFrame frame, DriftRegistry& registry, double sigma_b,
                                 Rng& rng) {
  std::map<FeatureId, Vec2> next;
  for (auto& o : frame.observations) {
    auto it = registry.biases_.find(o.id);
    Vec2 b = it == registry.biases_.end() ? Vec2::Zero() : it->second;
    b += rng.normal2(sigma_b);
    o.px.u += b.x();
    o.px.v += b.y();
    next.emplace(o.id, b);
  }
  registry.biases_ = std::move(next);
  return frame;
}

SwapResult swap_attributions(sensors::VisionFrame frame, double eta, Rng& rng,
                             const TrackedPredicate& tracked) {
  SwapResult out;
  std::vector<std::size_t> pool;
  for (std::size_t i = 0; i < frame.observations.size(); ++i) {
    if (!tracked || tracked(frame.observations[i].id)) pool.push_back(i);
  }
  const auto m = pool.size();
  const auto k = 2 * static_cast<std::size_t>(std::floor(eta * static_cast<double>(m) / 2.0 + 1e-12));
  if (k >= 2) {
    // Partial Fisher-Yates: the first k entries are a uniform sample in
    // uniform random order, so consecutive entries form uniform pairs.
    for (std::size_t i = 0; i < k; ++i) {
      std::uniform_int_distribution<std::size_t> pick(i, m - 1);
      std::swap(pool[i], pool[pick(rng.engine())]);
    }
    for (std::size_t i = 0; i + 1 < k; i += 2) {
      auto& a = frame.observations[pool[i]];
      auto& b = frame.observations[pool[i + 1]];
      std::swap(a.px, b.px);
      out.swapped.push_back(a.id);
      out.swapped.push_back(b.id);
    }
    std::sort(out.swapped.begin(), out.swapped.end());
  }
  out.frame = std::move(frame);
  return out;
}

FramePerturber::FramePerturber(const PerturbationConfig& cfg) : cfg_(cfg), rng_(cfg.seed) {
  cfg_.validate();
}

SwapResult FramePerturber::operator()(const sensors::VisionFrame& frame, const TrackedPredicate& tracked) {
  auto drifted = apply_drift(frame, drift_, cfg_.sigma_b, rng_);
  auto noisy = add_gaussian_noise(std::move(drifted), cfg_.sigma_p, rng_);
  if (cfg_.eta == 0.0) return {std::move(noisy), {}};
  return swap_attributions(std::move(noisy), cfg_.eta, rng_, tracked);
}

}  // namespace viomc::perturb
