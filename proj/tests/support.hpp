#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <random>
#include <vector>

#include "hgrl/sim/collision.hpp"

#include "hgrl/sim/idm.hpp"
#include "hgrl/sim/world.hpp"

namespace hgrl::testing {

/// A vehicle `distance` metres (front bumper) short of the conflict zone on `key`.
inline sim::VehicleState vehicle_before_zone(int id, sim::DriverStyle style, sim::RouteKey key, double distance,
                                             double speed, const sim::ScenarioConfig& cfg = {}) {
  const sim::Intersection geo(cfg.geometry);
  sim::VehicleState v;
  v.id = id;
  v.style = style;
  v.route = key;
  v.progress = geo.route(key).zone_entry() - 0.5 * v.length - distance;
  v.speed = speed;
  v.desired_speed = style == sim::DriverStyle::Ego ? speed : sim::idm_params_for(style).v_desired;
  return v;
}

inline sim::VehicleState ego_before_zone(double distance, double speed, int lane = 0,
                                         const sim::ScenarioConfig& cfg = {}) {
  return vehicle_before_zone(0, sim::DriverStyle::Ego, {sim::Approach::South, sim::Maneuver::Left, lane}, distance,
                             speed, cfg);
}

inline sim::RouteKey straight(sim::Approach a, int lane = 0) { return {a, sim::Maneuver::Straight, lane}; }

inline bool close_rel(double a, double b, double rel) {
  return std::abs(a - b) <= rel * std::max({1.0, std::abs(a), std::abs(b)});
}

/// Subject (id 1, aggressive) on the south approach with one to three other
/// drivers from the other approaches. Returns nothing when the draw overlaps
/// or has no conflicting pair with the subject.
inline std::optional<std::vector<sim::VehicleState>> random_conflict_scene(std::mt19937_64& rng,
                                                                           const sim::ScenarioConfig& cfg = {}) {
  std::uniform_real_distribution<double> dist(3.0, 40.0), speed(0.0, 14.0), other_dist(-10.0, 60.0);
  std::uniform_int_distribution<int> approach(1, 3), lane(0, 1), count(1, 3), style(0, 2);
  std::vector<sim::VehicleState> vs{ego_before_zone(90.0, 0.0, 0, cfg)};
  vs.push_back(vehicle_before_zone(1, sim::DriverStyle::Aggressive, straight(sim::Approach::South, lane(rng)),
                                   dist(rng), speed(rng), cfg));
  const int n = count(rng);
  for (int i = 0; i < n; ++i) {
    vs.push_back(vehicle_before_zone(2 + i, sim::style_from_category(style(rng)),
                                     straight(static_cast<sim::Approach>(approach(rng)), lane(rng)), other_dist(rng),
                                     speed(rng), cfg));
  }
  const sim::World w(cfg, vs);
  if (!sim::detect_collisions(w.vehicles()).empty()) return std::nullopt;
  bool any_conflict = false;
  for (std::size_t i = 2; i < vs.size(); ++i) any_conflict |= w.conflicting(vs[1], vs[i]);
  if (!any_conflict) return std::nullopt;
  return vs;
}

/// The same scene with the subject switched to the conservative style.
inline std::vector<sim::VehicleState> as_conservative(std::vector<sim::VehicleState> vs) {
  vs[1].style = sim::DriverStyle::Conservative;
  vs[1].desired_speed = sim::idm_params_for(sim::DriverStyle::Conservative).v_desired;
  return vs;
}

}  // namespace hgrl::testing
