#pragma once

#include <cstddef>
#include <deque>
#include <map>
#include <optional>
#include <string_view>

#include "viomc/geom.hpp"

namespace viomc::ekf {

// candidate -> in_state -> dead, candidate -> dead, in_state -> rejected -> dead
enum class TrackStatus { candidate, in_state, rejected, dead };

std::string_view to_string(TrackStatus s);
bool is_allowed_transition(TrackStatus from, TrackStatus to);

/// First observation of a candidate, kept until triangulation succeeds.
struct Anchor {
  Mat3 R = Mat3::Identity();  // body-to-spatial estimate at the time
  Vec3 T = Vec3::Zero();
  Vec3 bearing = Vec3::UnitZ();  // camera frame
  double t = 0.0;
};

struct Track {
  FeatureId id = 0;
  TrackStatus status = TrackStatus::candidate;
  double first_seen = 0.0;
  double last_seen = 0.0;
  std::deque<geom::PixelPoint> history;  // most recent last, bounded

  // Subfilter estimate, valid once seeded.
  std::optional<Anchor> anchor;
  bool seeded = false;
  Vec3 X_s = Vec3::Zero();
  Mat3 cov = Mat3::Identity();
  int subfilter_updates = 0;

  int gate_failures = 0;  // consecutive

  /// Throws std::logic_error on a transition outside the lifecycle graph.
  void transition(TrackStatus next);
  void observe(double t, const geom::PixelPoint& px, std::size_t history_length);
};

class TrackTable {
 public:
  using Map = std::map<FeatureId, Track>;

  Track* find(FeatureId id);
  const Track* find(FeatureId id) const;
  Track& insert_candidate(FeatureId id, double t);
  void erase(FeatureId id) { tracks_.erase(id); }

  std::size_t size() const { return tracks_.size(); }
  std::size_t count(TrackStatus s) const;

  Map::iterator begin() { return tracks_.begin(); }
  Map::iterator end() { return tracks_.end(); }
  Map::const_iterator begin() const { return tracks_.begin(); }
  Map::const_iterator end() const { return tracks_.end(); }

 private:
  Map tracks_;
};

}  // namespace viomc::ekf
