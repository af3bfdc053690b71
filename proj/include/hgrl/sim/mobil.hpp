#pragma once

#include "hgrl/sim/types.hpp"

namespace hgrl::sim {

/// Neighbourhood of the deciding vehicle in one lane. Gaps are bumper to
/// bumper; absent vehicles have gap = +inf.
struct LaneContext {
  double leader_gap = kInf;
  double leader_speed = 0.0;
  double follower_gap = kInf;
  double follower_speed = 0.0;
  IdmParams follower_idm;
};

struct MobilInputs {
  double speed = 0.0;   // deciding vehicle
  double length = 5.0;
  LaneContext current;
  LaneContext target;
};

struct MobilEvaluation {
  double own_gain = 0.0;        // a~_c - a_c
  double new_follower_after = 0.0;  // a~_n
  double incentive = 0.0;       // full politeness-weighted incentive
  bool safe = false;
  bool change = false;
};

/// Evaluates both MOBIL criteria. Overlapping neighbours (gap <= 0) make the
/// change unsafe.
MobilEvaluation mobil_evaluate(const MobilInputs& in, const MobilParams& p, const IdmParams& idm);

/// True iff the safety and the incentive criterion both hold.
bool mobil_decision(const MobilInputs& in, const MobilParams& p, const IdmParams& idm);

/// Only the safety criterion: the new follower does not brake harder than b_safe.
bool mobil_safe(const MobilInputs& in, const MobilParams& p);

}  // namespace hgrl::sim
