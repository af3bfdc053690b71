#pragma once

#include <utility>
#include <vector>

#include "hgrl/common/vec2.hpp"
#include "hgrl/sim/types.hpp"

namespace hgrl::sim {

struct OrientedBox {
  Vec2 center;
  double heading = 0.0;
  double length = 5.0;
  double width = 2.0;
};

OrientedBox footprint(const VehicleState& v);

/// Separating-axis test; touching boxes count as overlapping.
bool boxes_overlap(const OrientedBox& a, const OrientedBox& b);

/// All pairs (i, j), i < j by position in `vehicles`, whose footprints overlap.
std::vector<std::pair<int, int>> detect_collisions(const std::vector<VehicleState>& vehicles);

}  // namespace hgrl::sim
