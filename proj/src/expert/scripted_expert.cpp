#include "hgrl/expert/scripted_expert.hpp"

#include "hgrl/graph/hetero_graph.hpp"

namespace hgrl::expert {

using sim::EgoAction;
using sim::MotionAssumption;
using sim::VehicleState;
using sim::ZoneWindow;

bool windows_conflict(const ZoneWindow& ego, const ZoneWindow& other, double margin) {
  if (!ego.arrives() || !other.arrives()) return false;
  return ego.enter < other.leave + margin && other.enter < ego.leave + margin;
}

namespace {

bool must_wait(const sim::World& world, const ScriptedExpertConfig& cfg) {
  const VehicleState& ego = world.ego();
  const ZoneWindow own = world.predict_zone_window(ego, MotionAssumption::Go);
  const Vec2 forward = unit_from_angle(ego.heading);
  for (const VehicleState& o : world.vehicles()) {
    if (o.is_ego() || world.cleared_zone(o)) continue;
    if (world.conflicting(ego, o)) {
      if (world.entered_zone(o)) {
        // Inside already; a vehicle stopped there blocks indefinitely.
        ZoneWindow w = world.predict_zone_window(o, MotionAssumption::Current);
        w.enter = 0.0;
        if (windows_conflict(own, w, cfg.occupancy_margin)) return true;
      } else {
        // A vehicle waiting at the line may pull away at any moment.
        if (windows_conflict(own, world.predict_zone_window(o, MotionAssumption::Go), cfg.occupancy_margin)) {
          return true;
        }
      }
    }
    const bool ahead = (o.position() - ego.position()).dot(forward) > 0.0;
    if (ahead && graph::edge_ttc(ego, o) < cfg.ttc_threshold) return true;
  }
  return false;
}

}  // namespace

EgoAction scripted_expert(const sim::World& world, const ScriptedExpertConfig& cfg) {
  const VehicleState& ego = world.ego();
  const double d_entry = world.distance_to_entry(ego);
  const bool can_stop = ego.speed * ego.speed / (2.0 * sim::kMaxDeceleration) < d_entry;
  // Reaching the turn lane comes first so the ego never waits in the wrong lane.
  const int inner = ego.route.lane + 1;
  if (inner < world.intersection().lanes() && world.can_change_lane(ego) &&
      sim::mobil_safe(world.mobil_inputs(ego, inner), world.config().mobil)) {
    return EgoAction::LaneLeft;
  }
  if (d_entry > 0.0 && can_stop && must_wait(world, cfg)) return EgoAction::SlowDown;
  if (ego.speed < world.config().v_max - cfg.speed_slack) return EgoAction::Accelerate;
  return EgoAction::Cruise;
}

}  // namespace hgrl::expert
