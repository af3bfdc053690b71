#include "hgrl/sim/world.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "hgrl/common/error.hpp"
#include "hgrl/sim/collision.hpp"
#include "hgrl/sim/idm.hpp"

namespace hgrl::sim {
namespace {

constexpr double kAlignedHeading = 0.5;  // cosine threshold for "same direction"
constexpr int kMaxSpawnAttempts = 100;
constexpr double kSpawnClearance = 2.0;
constexpr double kWaitingSpeed = 1.0;  // below this a vehicle short of the zone counts as waiting

double along_route_speed_cap(const VehicleState& v, const IdmParams& p) {
  return std::max(v.speed, p.v_desired);
}

}  // namespace

std::string_view style_name(DriverStyle s) {
  switch (s) {
    case DriverStyle::Ego: return "ego";
    case DriverStyle::Aggressive: return "aggressive";
    case DriverStyle::Normal: return "normal";
    case DriverStyle::Conservative: return "conservative";
  }
  return "normal";
}

DriverStyle parse_style(std::string_view name) {
  if (name == "ego") return DriverStyle::Ego;
  if (name == "aggressive") return DriverStyle::Aggressive;
  if (name == "normal") return DriverStyle::Normal;
  if (name == "conservative") return DriverStyle::Conservative;
  throw Error("unknown driver style: " + std::string(name));
}

EgoAction action_from_index(int code) {
  if (code < 0 || code >= kNumActions) throw Error("action code out of range: " + std::to_string(code));
  return static_cast<EgoAction>(code);
}

std::string_view action_name(EgoAction a) {
  switch (a) {
    case EgoAction::Accelerate: return "accelerate";
    case EgoAction::SlowDown: return "slow_down";
    case EgoAction::Cruise: return "cruise";
    case EgoAction::LaneLeft: return "lane_left";
    case EgoAction::LaneRight: return "lane_right";
  }
  return "cruise";
}

double VehicleState::average_acceleration() const {
  if (accel_history.empty()) return 0.0;
  return std::accumulate(accel_history.begin(), accel_history.end(), 0.0) /
         static_cast<double>(accel_history.size());
}

void VehicleState::push_acceleration(double a) {
  accel_history.push_back(a);
  while (accel_history.size() > kHistoryLength) accel_history.pop_front();
}

double time_to_cover(double distance, double v, double a, double v_cap) {
  if (distance <= 0.0) return 0.0;
  if (a > 0.0 && v < v_cap) {
    const double t_cap = (v_cap - v) / a;
    const double d_cap = v * t_cap + 0.5 * a * t_cap * t_cap;
    if (d_cap >= distance) return (-v + std::sqrt(v * v + 2.0 * a * distance)) / a;
    return t_cap + (distance - d_cap) / v_cap;
  }
  if (a < 0.0) {
    const double b = -a;
    const double disc = v * v - 2.0 * b * distance;
    if (disc < 0.0) return kInf;
    return (v - std::sqrt(disc)) / b;
  }
  return v > 0.0 ? distance / v : kInf;
}

World::World(ScenarioConfig cfg, std::vector<VehicleState> vehicles)
    : cfg_(cfg),
      intersection_(std::make_shared<const Intersection>(cfg.geometry)),
      vehicles_(std::move(vehicles)) {
  const auto egos = std::count_if(vehicles_.begin(), vehicles_.end(),
                                  [](const VehicleState& v) { return v.is_ego(); });
  if (egos != 1) throw Error("world must contain exactly one ego vehicle");
  for (std::size_t i = 0; i < vehicles_.size(); ++i) {
    if (vehicles_[i].is_ego()) ego_index_ = i;
    refresh_pose(vehicles_[i]);
  }
}

double World::goal_progress() const { return route_of(ego()).zone_exit() + cfg_.goal_distance; }

double World::distance_to_entry(const VehicleState& v) const {
  return route_of(v).zone_entry() - (v.progress + 0.5 * v.length);
}

bool World::cleared_zone(const VehicleState& v) const {
  return v.progress - 0.5 * v.length > route_of(v).zone_exit();
}

bool World::conflicting(const VehicleState& a, const VehicleState& b) const {
  if (a.id == b.id) return false;
  return intersection_->routes_conflict(a.route, b.route);
}

bool World::can_change_lane(const VehicleState& v) const {
  return v.lateral_offset == 0.0 && distance_to_entry(v) > cfg_.lane_change_buffer;
}

IdmParams World::idm_for(const VehicleState& v) const {
  if (v.is_ego()) {
    IdmParams p = ego_idm_params();
    p.v_desired = v.desired_speed;
    return p;
  }
  return idm_params_for(v.style);
}

ZoneWindow World::predict_zone_window(const VehicleState& v, MotionAssumption m) const {
  const Route& r = route_of(v);
  const double to_enter = r.zone_entry() - (v.progress + 0.5 * v.length);
  const double to_leave = r.zone_exit() - (v.progress - 0.5 * v.length);
  if (to_leave < 0.0) return {};  // already through

  const IdmParams p = idm_for(v);
  double a, cap;
  if (m == MotionAssumption::Go) {
    a = p.a_max;
    cap = v.is_ego() ? cfg_.v_max : p.v_desired;
  } else {
    a = v.a_x;
    cap = along_route_speed_cap(v, p);
  }
  ZoneWindow w;
  w.enter = time_to_cover(to_enter, v.speed, a, cap);
  if (w.arrives()) w.leave = time_to_cover(to_leave, v.speed, a, cap);
  return w;
}

Leader World::scan_lane(const VehicleState& v, const RouteKey& key, double band, bool ahead) const {
  const Route& r = intersection_->route(key);
  Leader best;
  for (std::size_t j = 0; j < vehicles_.size(); ++j) {
    const VehicleState& o = vehicles_[j];
    if (o.id == v.id) continue;
    const auto proj = r.project(o.position());
    if (!proj) continue;
    // Vehicles already committed to merging into this lane count from the start.
    const bool merging = o.route.approach == key.approach && o.route.lane == key.lane;
    const double reach = merging ? std::max(band, cfg_.geometry.lane_width) : band;
    if (std::abs(proj->lateral) >= reach) continue;
    if (proj->tangent.dot(unit_from_angle(o.heading)) < kAlignedHeading) continue;
    if (ahead != (proj->progress > v.progress)) continue;
    const double gap = std::abs(proj->progress - v.progress) - 0.5 * (v.length + o.length);
    if (ahead && gap <= 0.0) continue;  // overlapping bodies are a collision, not a leader
    if (gap < best.gap) best = {static_cast<int>(j), gap, o.speed};
  }
  return best;
}

Leader World::find_leader(const VehicleState& v, std::optional<RouteKey> key) const {
  return scan_lane(v, key.value_or(v.route), 0.5 * cfg_.geometry.lane_width, true);
}

Leader World::find_follower(const VehicleState& v, std::optional<RouteKey> key) const {
  return scan_lane(v, key.value_or(v.route), 0.5 * cfg_.geometry.lane_width, false);
}

LaneContext World::lane_context(const VehicleState& v, int lane) const {
  RouteKey key = v.route;
  key.lane = lane;
  // A lane change sweeps the space between the lanes, so anything not fully
  // on the far side of the target lane centre counts.
  const double band = (lane == v.route.lane ? 0.5 : 1.0) * cfg_.geometry.lane_width;
  LaneContext c;
  const Leader lead = scan_lane(v, key, band, true);
  c.leader_gap = lead.gap;
  c.leader_speed = lead.speed;
  const Leader fol = scan_lane(v, key, band, false);
  c.follower_gap = fol.gap;
  c.follower_speed = fol.speed;
  if (fol.index >= 0) c.follower_idm = idm_for(vehicles_[fol.index]);
  // A body alongside (overlapping in progress) blocks the lane outright.
  const Route& r = intersection_->route(key);
  for (const VehicleState& o : vehicles_) {
    if (o.id == v.id) continue;
    const auto proj = r.project(o.position());
    if (!proj || std::abs(proj->lateral) >= band) continue;
    if (std::abs(proj->progress - v.progress) < 0.5 * (v.length + o.length)) c.leader_gap = 0.0;
  }
  return c;
}

MobilInputs World::mobil_inputs(const VehicleState& v, int target_lane) const {
  MobilInputs in;
  in.speed = v.speed;
  in.length = v.length;
  in.current = lane_context(v, v.route.lane);
  in.target = lane_context(v, target_lane);
  return in;
}

void World::begin_lane_change(VehicleState& v, int lane) const {
  const double w = cfg_.geometry.lane_width;
  const int n = cfg_.geometry.lanes_per_direction;
  const double old_offset = (n - v.route.lane - 0.5) * w;
  const double new_offset = (n - lane - 0.5) * w;
  v.lateral_offset = old_offset + v.lateral_offset - new_offset;
  v.route.lane = lane;
  refresh_pose(v);
}

void World::refresh_pose(VehicleState& v) const {
  const Pose2 pose = route_of(v).at(v.progress);
  const Vec2 right = pose.tangent.right();
  const Vec2 p = pose.position + right * v.lateral_offset;
  const Vec2 vel = pose.tangent * v.speed + right * v.lateral_speed;
  v.c_x = p.x;
  v.c_y = p.y;
  v.v_x = vel.x;
  v.v_y = vel.y;
  v.heading = std::atan2(pose.tangent.y, pose.tangent.x);
}

double behavior_step(const VehicleState& hv, const World& world) {
  if (hv.is_ego()) throw Error("behavior_step called for the ego vehicle");
  const IdmParams p = world.idm_for(hv);
  const Leader lead = world.find_leader(hv);
  const double follow = std::isfinite(lead.gap)
                            ? idm_acceleration(hv.speed, hv.speed - lead.speed, lead.gap, p)
                            : idm_acceleration(hv.speed, 0.0, kInf, p);
  if (hv.style == DriverStyle::Aggressive) return follow;

  const double d_entry = world.distance_to_entry(hv);
  if (d_entry <= 0.0) return follow;
  // Committed: cannot stop in front of the zone any more.
  if (hv.speed * hv.speed / (2.0 * kMaxDeceleration) >= d_entry) return follow;

  bool yield = false;
  if (hv.style == DriverStyle::Normal) {
    const double own = world.predict_zone_window(hv, MotionAssumption::Go).enter;
    for (const VehicleState& o : world.vehicles()) {
      if (!world.conflicting(hv, o) || world.cleared_zone(o)) continue;
      const double other = world.entered_zone(o)
                               ? 0.0
                               : world.predict_zone_window(o, MotionAssumption::Current).enter;
      if (other < own || (other == own && other < kInf && o.id < hv.id)) {
        yield = true;
        break;
      }
    }
  } else {
    const double horizon = world.config().conservative_horizon;
    for (const VehicleState& o : world.vehicles()) {
      if (!world.conflicting(hv, o) || world.cleared_zone(o)) continue;
      // Two waiting vehicles would defer to each other forever; the lower id goes.
      if (!world.entered_zone(o) && o.speed < kWaitingSpeed && o.id > hv.id) continue;
      if (world.entered_zone(o) ||
          world.predict_zone_window(o, MotionAssumption::Current).enter <= horizon) {
        yield = true;
        break;
      }
    }
  }
  if (!yield) return follow;
  // Virtual stopped leader at the zone entry.
  return std::min(follow, idm_acceleration(hv.speed, hv.speed, d_entry, p));
}

bool apply_ego_action(World& world, EgoAction action) {
  VehicleState& ego = world.mutable_ego();
  const ScenarioConfig& cfg = world.config();
  switch (action) {
    case EgoAction::Accelerate:
      ego.desired_speed = std::min(ego.desired_speed + cfg.desired_speed_step, cfg.v_max);
      return false;
    case EgoAction::SlowDown:
      ego.desired_speed = std::max(ego.desired_speed - cfg.desired_speed_step, 0.0);
      return false;
    case EgoAction::Cruise:
      return false;
    case EgoAction::LaneLeft:
    case EgoAction::LaneRight: {
      const int target = ego.route.lane + (action == EgoAction::LaneLeft ? 1 : -1);
      if (target < 0 || target >= world.intersection().lanes()) return false;
      if (!world.can_change_lane(ego)) return false;
      if (!mobil_safe(world.mobil_inputs(ego, target), cfg.mobil)) return false;
      world.begin_lane_change(ego, target);
      return true;
    }
  }
  return false;
}

double compute_reward(bool goal_reached, bool collided, double v_ego, double v_max) {
  const double r_goal = goal_reached ? 2.0 : 0.0;
  const double r_col = collided ? -2.0 : 0.0;
  const double r_vel = 0.04 * std::min(std::max(v_ego, 0.0) / v_max, 1.0);
  return r_goal + r_col + r_vel;
}

StepOutcome World::step(EgoAction action) {
  if (finished_) throw Error("episode finished");
  const double dt = cfg_.dt;

  apply_ego_action(*this, action);

  // Commands from a common snapshot.
  std::vector<double> command(vehicles_.size(), 0.0);
  for (std::size_t i = 0; i < vehicles_.size(); ++i) {
    const VehicleState& v = vehicles_[i];
    if (v.is_ego()) {
      const Leader lead = find_leader(v);
      const IdmParams p = idm_for(v);
      command[i] = std::isfinite(lead.gap) ? idm_acceleration(v.speed, v.speed - lead.speed, lead.gap, p)
                                           : idm_acceleration(v.speed, 0.0, kInf, p);
    } else {
      command[i] = behavior_step(v, *this);
    }
  }

  // Background lane changes, decided on the same snapshot.
  std::vector<int> lane_target(vehicles_.size(), -1);
  for (std::size_t i = 0; i < vehicles_.size(); ++i) {
    const VehicleState& v = vehicles_[i];
    if (v.is_ego() || v.lane_change_cooldown > 0.0 || !can_change_lane(v)) continue;
    double best = -kInf;
    for (int target : {v.route.lane + 1, v.route.lane - 1}) {
      if (target < 0 || target >= intersection_->lanes()) continue;
      const MobilEvaluation ev = mobil_evaluate(mobil_inputs(v, target), cfg_.mobil, idm_for(v));
      if (ev.change && ev.incentive > best) {
        best = ev.incentive;
        lane_target[i] = target;
      }
    }
  }

  // Semi-implicit Euler: velocity first, then position.
  for (std::size_t i = 0; i < vehicles_.size(); ++i) {
    VehicleState& v = vehicles_[i];
    if (lane_target[i] >= 0) {
      begin_lane_change(v, lane_target[i]);
      v.lane_change_cooldown = cfg_.lane_change_cooldown;
    }
    const double v_new = std::max(0.0, v.speed + command[i] * dt);
    v.a_x = (v_new - v.speed) / dt;
    v.speed = v_new;
    v.progress += v.speed * dt;
    v.push_acceleration(v.a_x);
    v.lane_change_cooldown = std::max(0.0, v.lane_change_cooldown - dt);
    if (v.lateral_offset != 0.0) {
      const double dir = v.lateral_offset > 0.0 ? -1.0 : 1.0;
      const double move = std::min(std::abs(v.lateral_offset), cfg_.lane_change_speed * dt);
      v.lateral_offset += dir * move;
      v.lateral_speed = dir * cfg_.lane_change_speed;
      if (std::abs(v.lateral_offset) < 1e-12) v.lateral_offset = 0.0;
    } else {
      v.lateral_speed = 0.0;
    }
  }

  // Background vehicles leave at the end of their route.
  const int ego_id = ego().id;
  std::erase_if(vehicles_, [&](const VehicleState& v) {
    return !v.is_ego() && v.progress >= intersection_->route(v.route).length();
  });
  for (std::size_t i = 0; i < vehicles_.size(); ++i) {
    if (vehicles_[i].id == ego_id) ego_index_ = i;
    refresh_pose(vehicles_[i]);
  }
  ++steps_;

  StepOutcome out;
  for (const auto& [i, j] : detect_collisions(vehicles_)) {
    if (static_cast<std::size_t>(i) == ego_index_ || static_cast<std::size_t>(j) == ego_index_) {
      out.collided = true;
    }
  }
  out.goal_reached = !out.collided && ego().progress >= goal_progress();
  out.timed_out = !out.collided && !out.goal_reached && steps_ >= cfg_.max_steps;
  out.reward = compute_reward(out.goal_reached, out.collided, ego().speed, cfg_.v_max);
  out.next_states = vehicles_;
  finished_ = out.done();
  return out;
}

World spawn_scenario(std::uint64_t seed, const ScenarioConfig& config) {
  if (config.aggressive < 0 || config.normal < 0 || config.conservative < 0) {
    throw Error("vehicle counts must be non-negative");
  }
  std::mt19937_64 rng(seed);
  const Intersection geo(config.geometry);
  const int lanes = geo.lanes();
  std::uniform_int_distribution<int> lane_dist(0, lanes - 1);
  std::uniform_int_distribution<int> approach_dist(0, 3);

  std::vector<VehicleState> vehicles;
  auto place = [&](VehicleState v, double distance) {
    const Route& r = geo.route(v.route);
    v.progress = r.zone_entry() - 0.5 * v.length - distance;
    if (v.progress < 0.0) throw Error("spawn distance exceeds the approach leg");
    return v;
  };
  auto overlaps = [&](const VehicleState& v) {
    for (const VehicleState& o : vehicles) {
      if (o.route.approach == v.route.approach && o.route.lane == v.route.lane &&
          std::abs(o.progress - v.progress) < 0.5 * (o.length + v.length) + kSpawnClearance) {
        return true;
      }
    }
    return false;
  };

  VehicleState ego;
  ego.id = 0;
  ego.style = DriverStyle::Ego;
  ego.route = {Approach::South, Maneuver::Left, lane_dist(rng)};
  ego.desired_speed = 0.0;
  std::uniform_real_distribution<double> ego_dist(config.ego_spawn_min, config.ego_spawn_max);
  vehicles.push_back(place(ego, ego_dist(rng)));

  std::uniform_real_distribution<double> hv_dist(config.hv_spawn_min, config.hv_spawn_max);
  int next_id = 1;
  const std::array<std::pair<DriverStyle, int>, 3> groups{{{DriverStyle::Aggressive, config.aggressive},
                                                           {DriverStyle::Normal, config.normal},
                                                           {DriverStyle::Conservative, config.conservative}}};
  for (const auto& [style, count] : groups) {
    for (int n = 0; n < count; ++n) {
      VehicleState hv;
      hv.id = next_id++;
      hv.style = style;
      hv.desired_speed = idm_params_for(style).v_desired;
      int attempts = 0;
      for (;;) {
        hv.route = {static_cast<Approach>(approach_dist(rng)), Maneuver::Straight, lane_dist(rng)};
        VehicleState candidate = place(hv, hv_dist(rng));
        if (!overlaps(candidate)) {
          vehicles.push_back(candidate);
          break;
        }
        if (++attempts >= kMaxSpawnAttempts) throw Error("could not place background vehicles without overlap");
      }
    }
  }

  ScenarioConfig cfg = config;
  cfg.seed = seed;
  return World(cfg, std::move(vehicles));
}

}  // namespace hgrl::sim
