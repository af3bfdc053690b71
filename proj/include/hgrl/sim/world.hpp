#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <random>
#include <vector>

#include "hgrl/sim/geometry.hpp"
#include "hgrl/sim/mobil.hpp"
#include "hgrl/sim/types.hpp"

namespace hgrl::sim {

struct ScenarioConfig {
  int aggressive = 2;
  int normal = 2;
  int conservative = 2;
  std::uint64_t seed = 1;
  GeometryConfig geometry;
  // Spawn distances are measured from the front bumper to the zone entry.
  double ego_spawn_min = 15.0;
  double ego_spawn_max = 40.0;
  double hv_spawn_min = 10.0;
  double hv_spawn_max = 60.0;
  double goal_distance = 20.0;  // past the zone exit
  int max_steps = 300;
  double dt = 0.1;
  double v_max = 20.0;
  double desired_speed_step = 2.0;
  double conservative_horizon = 6.0;  // s
  double lane_change_buffer = 10.0;   // no lane changes this close to the zone (m)
  double lane_change_speed = 4.0;     // lateral speed while changing lanes (m/s)
  double lane_change_cooldown = 3.0;  // s, background traffic only
  MobilParams mobil;
};

struct Leader {
  int index = -1;
  double gap = kInf;
  double speed = 0.0;
};

/// Predicted conflict-zone occupancy, seconds from now. `enter` is 0 while
/// inside and +inf when the vehicle is not expected to reach the zone.
struct ZoneWindow {
  double enter = kInf;
  double leave = kInf;
  bool arrives() const { return enter < kInf; }
};

/// How a vehicle is assumed to move when predicting its zone occupancy.
enum class MotionAssumption {
  Current,  // keep the current acceleration, capped at the desired speed
  Go,       // accelerate at full IDM a_max up to the desired speed
};

/// Time to travel `distance` starting at speed v with constant acceleration a
/// until v_cap is reached. Returns +inf if the vehicle stops first.
double time_to_cover(double distance, double v, double a, double v_cap);

class World {
 public:
  World(ScenarioConfig cfg, std::vector<VehicleState> vehicles);

  const ScenarioConfig& config() const { return cfg_; }
  const Intersection& intersection() const { return *intersection_; }
  const std::vector<VehicleState>& vehicles() const { return vehicles_; }
  std::vector<VehicleState>& mutable_vehicles() { return vehicles_; }
  const VehicleState& ego() const { return vehicles_[ego_index_]; }
  VehicleState& mutable_ego() { return vehicles_[ego_index_]; }
  std::size_t ego_index() const { return ego_index_; }

  int step_count() const { return steps_; }
  bool finished() const { return finished_; }

  const Route& route_of(const VehicleState& v) const { return intersection_->route(v.route); }
  /// Progress at which the ego's episode succeeds.
  double goal_progress() const;

  /// Front bumper to zone entry (m); negative once the front has entered.
  double distance_to_entry(const VehicleState& v) const;
  bool entered_zone(const VehicleState& v) const { return distance_to_entry(v) <= 0.0; }
  bool cleared_zone(const VehicleState& v) const;
  bool conflicting(const VehicleState& a, const VehicleState& b) const;
  bool can_change_lane(const VehicleState& v) const;

  IdmParams idm_for(const VehicleState& v) const;
  ZoneWindow predict_zone_window(const VehicleState& v, MotionAssumption m) const;

  /// Nearest vehicle ahead along `key` (defaults to v's own route).
  Leader find_leader(const VehicleState& v, std::optional<RouteKey> key = std::nullopt) const;
  Leader find_follower(const VehicleState& v, std::optional<RouteKey> key = std::nullopt) const;
  LaneContext lane_context(const VehicleState& v, int lane) const;
  MobilInputs mobil_inputs(const VehicleState& v, int target_lane) const;

  /// Moves v into `lane`, keeping its world position continuous.
  void begin_lane_change(VehicleState& v, int lane) const;
  void refresh_pose(VehicleState& v) const;

  /// Advances one fixed step. Throws hgrl::Error("episode finished") once terminated.
  StepOutcome step(EgoAction action);

 private:
  /// Nearest aligned vehicle ahead of (or behind) v whose centre lies within
  /// `band` of the lane centre line.
  Leader scan_lane(const VehicleState& v, const RouteKey& key, double band, bool ahead) const;

  ScenarioConfig cfg_;
  std::shared_ptr<const Intersection> intersection_;
  std::vector<VehicleState> vehicles_;
  std::size_t ego_index_ = 0;
  int steps_ = 0;
  bool finished_ = false;
};

/// Longitudinal command for a background vehicle, including its style-specific
/// right-of-way behaviour at the conflict zone.
double behavior_step(const VehicleState& hv, const World& world);

/// Applies a decision to the ego: desired-speed steps for longitudinal
/// actions, safety-checked lane change requests. Returns true when a lane
/// change was started.
bool apply_ego_action(World& world, EgoAction action);

/// Reward for one step: goal bonus, collision penalty and dense speed term.
double compute_reward(bool goal_reached, bool collided, double v_ego, double v_max = 20.0);

/// Spawns the ego and background traffic. Deterministic in (config, seed).
World spawn_scenario(std::uint64_t seed, const ScenarioConfig& config);

}  // namespace hgrl::sim
