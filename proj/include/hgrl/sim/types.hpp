#pragma once

#include <array>
#include <cstdint>
#include <deque>
#include <limits>
#include <string_view>
#include <vector>

#include "hgrl/common/vec2.hpp"

namespace hgrl::sim {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Longitudinal command limit shared by every vehicle (m/s^2).
inline constexpr double kMaxDeceleration = 4.5;
/// Number of steps kept in the acceleration history.
inline constexpr std::size_t kHistoryLength = 5;

enum class DriverStyle : std::uint8_t { Ego, Aggressive, Normal, Conservative };

/// Category value used as a node feature: 0 aggressive, 1 normal, 2 conservative.
/// Returns -1 for the ego.
constexpr int style_category(DriverStyle s) {
  switch (s) {
    case DriverStyle::Aggressive: return 0;
    case DriverStyle::Normal: return 1;
    case DriverStyle::Conservative: return 2;
    case DriverStyle::Ego: break;
  }
  return -1;
}

constexpr DriverStyle style_from_category(int k) {
  return k == 0 ? DriverStyle::Aggressive : k == 1 ? DriverStyle::Normal : DriverStyle::Conservative;
}

std::string_view style_name(DriverStyle s);
DriverStyle parse_style(std::string_view name);

struct IdmParams {
  double a_max = 3.5;      // maximum acceleration
  double delta = 4.0;      // acceleration exponent
  double v_desired = 16.0;
  double s0 = 1.6;         // minimum gap
  double time_gap = 1.5;
  double b_comf = 2.0;     // comfortable deceleration
};

struct MobilParams {
  double politeness = 0.3;
  double accel_threshold = 0.2;
  double b_safe = 4.0;
};

enum class EgoAction : std::uint8_t { Accelerate = 0, SlowDown = 1, Cruise = 2, LaneLeft = 3, LaneRight = 4 };
inline constexpr int kNumActions = 5;

constexpr int to_index(EgoAction a) { return static_cast<int>(a); }
EgoAction action_from_index(int code);
std::string_view action_name(EgoAction a);

/// Which side of the intersection a route starts from.
enum class Approach : std::uint8_t { South = 0, East = 1, North = 2, West = 3 };
enum class Maneuver : std::uint8_t { Straight = 0, Left = 1 };

struct RouteKey {
  Approach approach = Approach::South;
  Maneuver maneuver = Maneuver::Straight;
  int lane = 0;  // 0 = outermost (rightmost) lane
  constexpr bool operator==(const RouteKey&) const = default;
};

struct VehicleState {
  int id = 0;
  DriverStyle style = DriverStyle::Normal;
  RouteKey route;
  double progress = 0.0;  // arc length of the vehicle centre along its route (m)
  double speed = 0.0;     // along-route speed, never negative (m/s)
  double lateral_offset = 0.0;  // residual offset during a lane change, + = right (m)
  double lateral_speed = 0.0;
  double desired_speed = 0.0;   // IDM desired speed (ego: set by actions)
  double length = 5.0;
  double width = 2.0;
  double lane_change_cooldown = 0.0;  // s
  // Pose, refreshed after every update.
  double c_x = 0.0;
  double c_y = 0.0;
  double v_x = 0.0;
  double v_y = 0.0;
  double a_x = 0.0;
  double heading = 0.0;
  std::deque<double> accel_history = std::deque<double>(kHistoryLength, 0.0);

  Vec2 position() const { return {c_x, c_y}; }
  Vec2 velocity() const { return {v_x, v_y}; }
  int lane_index() const { return route.lane; }
  bool is_ego() const { return style == DriverStyle::Ego; }
  double average_acceleration() const;
  void push_acceleration(double a);
};

struct StepOutcome {
  std::vector<VehicleState> next_states;
  double reward = 0.0;
  bool collided = false;
  bool goal_reached = false;
  bool timed_out = false;

  bool done() const { return collided || goal_reached || timed_out; }
};

}  // namespace hgrl::sim
