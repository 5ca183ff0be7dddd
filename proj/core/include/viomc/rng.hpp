#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

#include "viomc/geom.hpp"

namespace viomc {

/// Counter-based seed split: mixes a key tuple through SplitMix64 so that
/// every (stream, index...) combination gets an independent seed and adding
/// new keys never shifts existing streams.
std::uint64_t derive_seed(std::initializer_list<std::uint64_t> keys);

/// Stream tags for derive_seed.
enum class Stream : std::uint64_t {
  trajectory = 0x7472616aULL,
  cloud = 0x636c6f75ULL,
  imu = 0x696d7531ULL,
  perturbation = 0x70657274ULL,
};

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double normal() { return normal_(engine_); }
  double normal(double stddev) { return stddev == 0.0 ? 0.0 : stddev * normal_(engine_); }
  Vec3 normal3(double stddev) { return {normal(stddev), normal(stddev), normal(stddev)}; }
  Vec2 normal2(double stddev) { return {normal(stddev), normal(stddev)}; }
  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(engine_); }

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace viomc
