#include "viomc/tracks.hpp"

#include <stdexcept>
#include <string>

namespace viomc::ekf {

std::string_view to_string(TrackStatus s) {
  switch (s) {
    case TrackStatus::candidate: return "candidate";
    case TrackStatus::in_state: return "in_state";
    case TrackStatus::rejected: return "rejected";
    case TrackStatus::dead: return "dead";
  }
  return "unknown";
}

bool is_allowed_transition(TrackStatus from, TrackStatus to) {
  using S = TrackStatus;
  switch (from) {
    case S::candidate: return to == S::in_state || to == S::dead;
    case S::in_state: return to == S::rejected || to == S::dead;
    case S::rejected: return to == S::dead;
    case S::dead: return false;
  }
  return false;
}

void Track::transition(TrackStatus next) {
  if (!is_allowed_transition(status, next)) {
    throw std::logic_error("track " + std::to_string(id) + ": illegal transition " +
                           std::string(to_string(status)) + " -> " + std::string(to_string(next)));
  }
  status = next;
}

void Track::observe(double t, const geom::PixelPoint& px, std::size_t history_length) {
  last_seen = t;
  history.push_back(px);
  while (history.size() > history_length) history.pop_front();
}

Track* TrackTable::find(FeatureId id) {
  auto it = tracks_.find(id);
  return it == tracks_.end() ? nullptr : &it->second;
}

const Track* TrackTable::find(FeatureId id) const {
  auto it = tracks_.find(id);
  return it == tracks_.end() ? nullptr : &it->second;
}

Track& TrackTable::insert_candidate(FeatureId id, double t) {
  Track tr;
  tr.id = id;
  tr.first_seen = t;
  tr.last_seen = t;
  auto [it, inserted] = tracks_.emplace(id, std::move(tr));
  if (!inserted) throw std::logic_error("track " + std::to_string(id) + " already exists");
  return it->second;
}

std::size_t TrackTable::count(TrackStatus s) const {
  std::size_t n = 0;
  for (const auto& [id, tr] : tracks_) n += tr.status == s ? 1 : 0;
  return n;
}

}  // namespace viomc::ekf
