#include "hgrl/sim/collision.hpp"

#include <array>
#include <cmath>

namespace hgrl::sim {
namespace {

std::array<Vec2, 4> corners(const OrientedBox& b) {
  const Vec2 f = unit_from_angle(b.heading) * (0.5 * b.length);
  const Vec2 s = unit_from_angle(b.heading).left() * (0.5 * b.width);
  return {b.center + f + s, b.center + f - s, b.center - f - s, b.center - f + s};
}

bool separated_along(Vec2 axis, const std::array<Vec2, 4>& pa, const std::array<Vec2, 4>& pb) {
  double amin = INFINITY, amax = -INFINITY, bmin = INFINITY, bmax = -INFINITY;
  for (const Vec2& p : pa) {
    const double t = p.dot(axis);
    amin = std::min(amin, t);
    amax = std::max(amax, t);
  }
  for (const Vec2& p : pb) {
    const double t = p.dot(axis);
    bmin = std::min(bmin, t);
    bmax = std::max(bmax, t);
  }
  return amax < bmin || bmax < amin;
}

}  // namespace

OrientedBox footprint(const VehicleState& v) { return {v.position(), v.heading, v.length, v.width}; }

bool boxes_overlap(const OrientedBox& a, const OrientedBox& b) {
  const auto pa = corners(a);
  const auto pb = corners(b);
  const std::array<Vec2, 4> axes{unit_from_angle(a.heading), unit_from_angle(a.heading).left(),
                                 unit_from_angle(b.heading), unit_from_angle(b.heading).left()};
  for (const Vec2& axis : axes) {
    if (separated_along(axis, pa, pb)) return false;
  }
  return true;
}

std::vector<std::pair<int, int>> detect_collisions(const std::vector<VehicleState>& vehicles) {
  std::vector<std::pair<int, int>> pairs;
  for (std::size_t i = 0; i < vehicles.size(); ++i) {
    const OrientedBox bi = footprint(vehicles[i]);
    for (std::size_t j = i + 1; j < vehicles.size(); ++j) {
      // Cheap reject: bounding circles.
      const double reach = 0.5 * (std::hypot(vehicles[i].length, vehicles[i].width) +
                                  std::hypot(vehicles[j].length, vehicles[j].width));
      if ((vehicles[i].position() - vehicles[j].position()).norm() > reach) continue;
      if (boxes_overlap(bi, footprint(vehicles[j]))) {
        pairs.emplace_back(static_cast<int>(i), static_cast<int>(j));
      }
    }
  }
  return pairs;
}

}  // namespace hgrl::sim
