#pragma once

#include "hgrl/sim/types.hpp"

namespace hgrl::sim {

/// Table values for the three background driving styles.
IdmParams idm_params_for(DriverStyle style);

/// Parameters the ego's low-level longitudinal controller starts from; the
/// desired speed is overwritten by the decision layer.
IdmParams ego_idm_params();

/// Desired dynamic gap s*(v, dv) = s0 + max(0, v*T + v*dv / (2*sqrt(a*b))).
double idm_desired_gap(double v, double dv, const IdmParams& p);

/// Intelligent driver model acceleration for speed `v`, approach rate `dv`
/// (own speed minus leader speed) and bumper-to-bumper gap `s`.
/// A missing leader is encoded as s = +inf, dv = 0. The result is clamped to
/// [-kMaxDeceleration, a_max]. Throws hgrl::Error("leader gap violated") when s <= 0.
double idm_acceleration(double v, double dv, double s, const IdmParams& p);

}  // namespace hgrl::sim
