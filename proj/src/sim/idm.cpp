#include "hgrl/sim/idm.hpp"

#include <algorithm>
#include <cmath>

#include "hgrl/common/error.hpp"

namespace hgrl::sim {

IdmParams idm_params_for(DriverStyle style) {
  switch (style) {
    case DriverStyle::Aggressive: return {4.5, 5.0, 20.0, 1.2, 1.0, 2.0};
    case DriverStyle::Normal: return {3.5, 4.0, 16.0, 1.6, 1.5, 2.0};
    case DriverStyle::Conservative: return {2.5, 4.0, 12.0, 2.0, 2.0, 2.0};
    case DriverStyle::Ego: break;
  }
  return ego_idm_params();
}

IdmParams ego_idm_params() { return {3.5, 4.0, 0.0, 1.6, 1.5, 2.0}; }

double idm_desired_gap(double v, double dv, const IdmParams& p) {
  const double dynamic = v * p.time_gap + v * dv / (2.0 * std::sqrt(p.a_max * p.b_comf));
  return p.s0 + std::max(0.0, dynamic);
}

double idm_acceleration(double v, double dv, double s, const IdmParams& p) {
  if (!(s > 0.0)) throw Error("leader gap violated");
  double free_term;
  if (p.v_desired > 0.0) {
    free_term = std::pow(v / p.v_desired, p.delta);
  } else {
    // Desired speed zero: hold a standstill, brake if moving.
    free_term = v > 0.0 ? kInf : 1.0;
  }
  double interaction = 0.0;
  if (std::isfinite(s)) {
    const double ratio = idm_desired_gap(v, dv, p) / s;
    interaction = ratio * ratio;
  }
  const double a = p.a_max * (1.0 - free_term - interaction);
  return std::clamp(a, -kMaxDeceleration, p.a_max);
}

}  // namespace hgrl::sim
