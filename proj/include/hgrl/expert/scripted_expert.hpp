#pragma once

#include "hgrl/sim/world.hpp"

namespace hgrl::expert {

struct ScriptedExpertConfig {
  double occupancy_margin = 3.0;  // s, required separation of zone windows
  double ttc_threshold = 3.0;     // s
  double speed_slack = 1.0;       // accelerate while v < v_max - slack
};

/// Deterministic gap-acceptance driver used as the demonstration source.
/// It first moves to the inner lane for the turn whenever that is safe.
/// Before the conflict zone, while it can still stop, it slows down for any
/// conflicting vehicle whose predicted zone occupancy comes within the
/// margin of its own, or for a short time to collision with a vehicle ahead.
/// Otherwise it accelerates to v_max.
sim::EgoAction scripted_expert(const sim::World& world, const ScriptedExpertConfig& cfg = {});

/// True when the ego's go-window and the other vehicle's predicted window
/// come within `margin` seconds of each other.
bool windows_conflict(const sim::ZoneWindow& ego, const sim::ZoneWindow& other, double margin);

}  // namespace hgrl::expert
