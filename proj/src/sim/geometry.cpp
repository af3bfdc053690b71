#include "hgrl/sim/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "hgrl/common/error.hpp"

namespace hgrl::sim {
namespace {

constexpr double kQuarterTurn = std::numbers::pi / 2.0;
// Paths closer than this inside the zone cannot be driven simultaneously.
constexpr double kConflictDistance = 2.5;
constexpr double kProjectionSlack = 1e-9;

double wrap_angle(double a) {
  while (a > std::numbers::pi) a -= 2.0 * std::numbers::pi;
  while (a <= -std::numbers::pi) a += 2.0 * std::numbers::pi;
  return a;
}

}  // namespace

Vec2 approach_direction(Approach a) {
  switch (a) {
    case Approach::South: return {0.0, 1.0};
    case Approach::East: return {-1.0, 0.0};
    case Approach::North: return {0.0, -1.0};
    case Approach::West: return {1.0, 0.0};
  }
  return {0.0, 1.0};
}

Approach left_of(Approach a) {
  // South (north-bound) turning left heads west, i.e. continues as East-origin traffic.
  switch (a) {
    case Approach::South: return Approach::East;
    case Approach::East: return Approach::North;
    case Approach::North: return Approach::West;
    case Approach::West: return Approach::South;
  }
  return Approach::East;
}

Route::Route(const GeometryConfig& g, RouteKey key) : key_(key), leg_(g.leg_length) {
  if (key.lane < 0 || key.lane >= g.lanes_per_direction) throw Error("lane index out of range");
  const double half = g.lanes_per_direction * g.lane_width;
  const double offset = (g.lanes_per_direction - key.lane - 0.5) * g.lane_width;

  dir_in_ = approach_direction(key.approach);
  zone_start_ = dir_in_ * (-half) + dir_in_.right() * offset;
  start_ = zone_start_ - dir_in_ * leg_;
  entry_ = leg_;

  if (key.maneuver == Maneuver::Straight) {
    dir_out_ = dir_in_;
    zone_length_ = 2.0 * half;
    exit_start_ = zone_start_ + dir_in_ * zone_length_;
  } else {
    dir_out_ = dir_in_.left();
    radius_ = half + offset;
    center_ = zone_start_ + dir_in_.left() * radius_;
    const Vec2 r0 = zone_start_ - center_;
    theta0_ = std::atan2(r0.y, r0.x);
    zone_length_ = radius_ * kQuarterTurn;
    exit_start_ = center_ + unit_from_angle(theta0_ + kQuarterTurn) * radius_;
  }
}

Pose2 Route::at(double s) const {
  if (s <= entry_) return {start_ + dir_in_ * s, dir_in_};
  if (s >= zone_exit()) return {exit_start_ + dir_out_ * (s - zone_exit()), dir_out_};
  const double along = s - entry_;
  if (key_.maneuver == Maneuver::Straight) return {zone_start_ + dir_in_ * along, dir_in_};
  const double theta = theta0_ + along / radius_;
  return {center_ + unit_from_angle(theta) * radius_, unit_from_angle(theta).left()};
}

std::optional<RouteProjection> Route::project(Vec2 p) const {
  std::optional<RouteProjection> best;
  auto consider = [&](RouteProjection cand) {
    if (!best || std::abs(cand.lateral) < std::abs(best->lateral)) best = cand;
  };
  auto straight = [&](Vec2 origin, Vec2 dir, double len, double s_base) {
    const Vec2 d = p - origin;
    const double t = d.dot(dir);
    if (t < -kProjectionSlack || t > len + kProjectionSlack) return;
    consider({s_base + std::clamp(t, 0.0, len), d.dot(dir.right()), dir});
  };

  straight(start_, dir_in_, leg_, 0.0);
  if (key_.maneuver == Maneuver::Straight) {
    straight(zone_start_, dir_in_, zone_length_, entry_);
  } else {
    const Vec2 d = p - center_;
    const double rho = d.norm();
    if (rho > 0.0) {
      const double phi = wrap_angle(std::atan2(d.y, d.x) - theta0_);
      if (phi >= -kProjectionSlack && phi <= kQuarterTurn + kProjectionSlack) {
        const double phic = std::clamp(phi, 0.0, kQuarterTurn);
        // Counter-clockwise arc: the right-hand side points away from the centre.
        consider({entry_ + radius_ * phic, rho - radius_, unit_from_angle(theta0_ + phic).left()});
      }
    }
  }
  straight(exit_start_, dir_out_, leg_, zone_exit());
  return best;
}

Intersection::Intersection(GeometryConfig g) : cfg_(g) {
  if (cfg_.lanes_per_direction < 1 || cfg_.lane_width <= 0.0 || cfg_.leg_length <= 0.0) {
    throw Error("invalid intersection geometry");
  }
  for (int a = 0; a < 4; ++a) {
    for (int m = 0; m < 2; ++m) {
      for (int l = 0; l < cfg_.lanes_per_direction; ++l) {
        routes_.emplace_back(cfg_, RouteKey{static_cast<Approach>(a), static_cast<Maneuver>(m), l});
      }
    }
  }

  // Sample each passage through the zone and compare point sets.
  std::vector<std::vector<Vec2>> samples;
  for (const Route& r : routes_) {
    std::vector<Vec2> pts;
    const double len = r.zone_exit() - r.zone_entry();
    const int n = std::max(2, static_cast<int>(std::ceil(len / 0.25)));
    for (int i = 0; i <= n; ++i) pts.push_back(r.at(r.zone_entry() + len * i / n).position);
    samples.push_back(std::move(pts));
  }
  const std::size_t n = routes_.size();
  conflicts_.assign(n, std::vector<char>(n, 0));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      // Same lane on the same approach is car following, not a crossing.
      const RouteKey& ki = routes_[i].key();
      const RouteKey& kj = routes_[j].key();
      if (ki.approach == kj.approach && ki.lane == kj.lane) continue;
      bool close = false;
      for (const Vec2& a : samples[i]) {
        for (const Vec2& b : samples[j]) {
          if ((a - b).norm() < kConflictDistance) {
            close = true;
            break;
          }
        }
        if (close) break;
      }
      conflicts_[i][j] = close ? 1 : 0;
    }
  }
}

std::size_t Intersection::index(const RouteKey& key) const {
  if (key.lane < 0 || key.lane >= cfg_.lanes_per_direction) throw Error("lane index out of range");
  return (static_cast<std::size_t>(key.approach) * 2 + static_cast<std::size_t>(key.maneuver)) *
             cfg_.lanes_per_direction +
         key.lane;
}

const Route& Intersection::route(const RouteKey& key) const { return routes_[index(key)]; }

bool Intersection::routes_conflict(const RouteKey& a, const RouteKey& b) const {
  return conflicts_[index(a)][index(b)] != 0;
}

bool Intersection::inside_zone(Vec2 p) const {
  const double h = half_width();
  return std::abs(p.x) <= h && std::abs(p.y) <= h;
}

}  // namespace hgrl::sim
