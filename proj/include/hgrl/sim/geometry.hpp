#pragma once

#include <array>
#include <optional>
#include <vector>

#include "hgrl/common/vec2.hpp"
#include "hgrl/sim/types.hpp"

namespace hgrl::sim {

/// Four orthogonal legs meeting at a square conflict zone centred on the origin.
/// Right-hand traffic; lane 0 is the outermost lane of each direction.
struct GeometryConfig {
  double leg_length = 100.0;
  int lanes_per_direction = 2;
  double lane_width = 4.0;
};

struct Pose2 {
  Vec2 position;
  Vec2 tangent;  // unit direction of travel
};

struct RouteProjection {
  double progress = 0.0;
  double lateral = 0.0;  // signed, + = right of the direction of travel
  Vec2 tangent;
};

/// One drivable path: approach leg, passage through the conflict zone
/// (straight or a quarter-circle left turn), and exit leg.
class Route {
 public:
  Route(const GeometryConfig& g, RouteKey key);

  const RouteKey& key() const { return key_; }
  double length() const { return entry_ + zone_length_ + leg_; }
  /// Progress at which the path enters / leaves the conflict zone.
  double zone_entry() const { return entry_; }
  double zone_exit() const { return entry_ + zone_length_; }

  Pose2 at(double progress) const;
  /// Nearest point on the path; nullopt when the point lies beyond both ends.
  std::optional<RouteProjection> project(Vec2 p) const;

 private:
  RouteKey key_;
  double leg_ = 0.0;
  double entry_ = 0.0;
  double zone_length_ = 0.0;
  Vec2 start_;
  Vec2 dir_in_;
  Vec2 zone_start_;
  Vec2 dir_out_;
  Vec2 exit_start_;
  // Left turn only.
  Vec2 center_;
  double radius_ = 0.0;
  double theta0_ = 0.0;
};

class Intersection {
 public:
  explicit Intersection(GeometryConfig g = {});

  const GeometryConfig& config() const { return cfg_; }
  double half_width() const { return cfg_.lanes_per_direction * cfg_.lane_width; }
  int lanes() const { return cfg_.lanes_per_direction; }

  const Route& route(const RouteKey& key) const;
  /// True when the two routes are not the same lane of one approach and their
  /// passages through the conflict zone come closer than 2.5 m.
  bool routes_conflict(const RouteKey& a, const RouteKey& b) const;

  bool inside_zone(Vec2 p) const;

 private:
  std::size_t index(const RouteKey& key) const;

  GeometryConfig cfg_;
  std::vector<Route> routes_;
  std::vector<std::vector<char>> conflicts_;
};

/// Unit direction of travel on an approach leg.
Vec2 approach_direction(Approach a);
/// Approach whose travel direction is rotated +90 degrees (left turn exit).
Approach left_of(Approach a);

}  // namespace hgrl::sim
