#include "hgrl/sim/mobil.hpp"

#include <cmath>

#include "hgrl/sim/idm.hpp"

namespace hgrl::sim {
namespace {

// Acceleration of a vehicle following a leader described by gap/speed;
// no leader when the gap is infinite.
double follow(double v, double leader_speed, double gap, const IdmParams& p) {
  if (!std::isfinite(gap)) return idm_acceleration(v, 0.0, kInf, p);
  return idm_acceleration(v, v - leader_speed, gap, p);
}

bool has_follower(const LaneContext& c) { return std::isfinite(c.follower_gap); }

// Gap between the lane's follower and leader once the deciding vehicle is gone.
double closed_gap(const LaneContext& c, double length) {
  if (!std::isfinite(c.leader_gap)) return kInf;
  return c.follower_gap + length + c.leader_gap;
}

}  // namespace

MobilEvaluation mobil_evaluate(const MobilInputs& in, const MobilParams& p, const IdmParams& idm) {
  MobilEvaluation ev;
  if (in.target.leader_gap <= 0.0 || in.target.follower_gap <= 0.0) return ev;
  // Overlapping bodies in the own lane: no meaningful gains to compare.
  if (in.current.leader_gap <= 0.0 || in.current.follower_gap <= 0.0) return ev;

  const LaneContext& cur = in.current;
  const LaneContext& tgt = in.target;

  const double a_c = follow(in.speed, cur.leader_speed, cur.leader_gap, idm);
  const double a_c_new = follow(in.speed, tgt.leader_speed, tgt.leader_gap, idm);

  double a_n = 0.0, a_n_new = 0.0;
  if (has_follower(tgt)) {
    a_n = follow(tgt.follower_speed, tgt.leader_speed, closed_gap(tgt, in.length), tgt.follower_idm);
    a_n_new = follow(tgt.follower_speed, in.speed, tgt.follower_gap, tgt.follower_idm);
  }
  double a_o = 0.0, a_o_new = 0.0;
  if (has_follower(cur)) {
    a_o = follow(cur.follower_speed, in.speed, cur.follower_gap, cur.follower_idm);
    a_o_new = follow(cur.follower_speed, cur.leader_speed, closed_gap(cur, in.length), cur.follower_idm);
  }

  ev.own_gain = a_c_new - a_c;
  ev.new_follower_after = a_n_new;
  ev.incentive = ev.own_gain + p.politeness * (a_n_new - a_n + a_o_new - a_o);
  ev.safe = a_n_new >= -p.b_safe;
  ev.change = ev.safe && ev.incentive > p.accel_threshold;
  return ev;
}

bool mobil_decision(const MobilInputs& in, const MobilParams& p, const IdmParams& idm) {
  return mobil_evaluate(in, p, idm).change;
}

bool mobil_safe(const MobilInputs& in, const MobilParams& p) {
  if (in.target.leader_gap <= 0.0 || in.target.follower_gap <= 0.0) return false;
  if (!has_follower(in.target)) return true;
  const double a_n_new =
      follow(in.target.follower_speed, in.speed, in.target.follower_gap, in.target.follower_idm);
  return a_n_new >= -p.b_safe;
}

}  // namespace hgrl::sim
