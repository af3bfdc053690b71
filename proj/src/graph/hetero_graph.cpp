#include "hgrl/graph/hetero_graph.hpp"

#include <algorithm>
#include <cmath>

#include "hgrl/common/error.hpp"
#include "hgrl/sim/idm.hpp"

namespace hgrl::graph {

using sim::DriverStyle;
using sim::VehicleState;

HeteroGraphState::HeteroGraphState(int n) : slots(n) {
  if (n <= 0) throw Error("graph needs at least one slot per style");
  for (int k = 0; k < kRelations; ++k) {
    nodes[k].assign(static_cast<std::size_t>(n) * kHvFeatures, 0.0);
    edges[k].assign(n, 0.0);
    masks[k].assign(n, 0);
  }
}

int HeteroGraphState::count(int k) const {
  return static_cast<int>(std::count(masks[k].begin(), masks[k].end(), std::uint8_t{1}));
}

double style_feature(const VehicleState& hv) {
  switch (hv.style) {
    case DriverStyle::Aggressive: return sim::idm_params_for(hv.style).a_max;
    case DriverStyle::Normal: return hv.average_acceleration();
    case DriverStyle::Conservative: return -sim::kMaxDeceleration;
    case DriverStyle::Ego: break;
  }
  throw Error("style feature requested for the ego");
}

namespace {

std::array<std::vector<const VehicleState*>, kRelations> group_by_style(const sim::World& world, int slots) {
  std::array<std::vector<const VehicleState*>, kRelations> groups;
  for (const VehicleState& v : world.vehicles()) {
    if (v.is_ego()) continue;
    groups[sim::style_category(v.style)].push_back(&v);
  }
  for (auto& g : groups) {
    std::sort(g.begin(), g.end(), [](const VehicleState* a, const VehicleState* b) { return a->id < b->id; });
    if (static_cast<int>(g.size()) > slots) g.resize(slots);
  }
  return groups;
}

}  // namespace

HeteroGraphState node_features(const sim::World& world, int slots) {
  HeteroGraphState g(slots);
  const VehicleState& ego = world.ego();
  g.ego = {ego.c_x, ego.c_y, ego.v_x, ego.v_y, ego.a_x};
  const auto groups = group_by_style(world, slots);
  for (int k = 0; k < kRelations; ++k) {
    for (std::size_t s = 0; s < groups[k].size(); ++s) {
      const VehicleState& hv = *groups[k][s];
      double* r = g.row(k, static_cast<int>(s));
      r[0] = hv.c_x;
      r[1] = hv.c_y;
      r[2] = hv.v_x;
      r[3] = hv.v_y;
      r[4] = hv.a_x;
      r[5] = style_feature(hv);
      r[6] = static_cast<double>(k);
      g.masks[k][s] = 1;
    }
  }
  return g;
}

double edge_ttc(const VehicleState& ego, const VehicleState& hv) {
  const Vec2 dp = hv.position() - ego.position();
  const double d = dp.norm();
  if (d == 0.0) return 0.0;
  const Vec2 unit = dp * (1.0 / d);
  const double closing = (ego.velocity() - hv.velocity()).dot(unit);
  if (closing <= 0.0) return kTtcCap;
  return std::min(d / closing, kTtcCap);
}

double edge_accel_diff(const VehicleState& ego, const VehicleState& hv) {
  return std::abs(hv.average_acceleration() - ego.average_acceleration());
}

double edge_distance(const VehicleState& ego, const VehicleState& hv) {
  return std::hypot(hv.c_x - ego.c_x, hv.c_y - ego.c_y);
}

HeteroGraphState build_graph(const sim::World& world, int slots) {
  HeteroGraphState g = node_features(world, slots);
  const VehicleState& ego = world.ego();
  const auto groups = group_by_style(world, slots);
  for (std::size_t s = 0; s < groups[0].size(); ++s) g.edges[0][s] = edge_ttc(ego, *groups[0][s]);
  for (std::size_t s = 0; s < groups[1].size(); ++s) g.edges[1][s] = edge_accel_diff(ego, *groups[1][s]);
  for (std::size_t s = 0; s < groups[2].size(); ++s) g.edges[2][s] = edge_distance(ego, *groups[2][s]);
  return g;
}

HeteroGraphState scale_graph(const HeteroGraphState& g, const FeatureScaling& sc) {
  HeteroGraphState out = g;
  auto motion = [&](double* x) {
    x[0] /= sc.position;
    x[1] /= sc.position;
    x[2] /= sc.speed;
    x[3] /= sc.speed;
    x[4] /= sc.accel;
  };
  motion(out.ego.data());
  const std::array<double, kRelations> edge_scale{sc.ttc, sc.accel_diff, sc.distance};
  for (int k = 0; k < kRelations; ++k) {
    for (int s = 0; s < out.slots; ++s) {
      double* r = out.row(k, s);
      motion(r);
      r[5] /= sc.accel;
      out.edges[k][s] /= edge_scale[k];
    }
  }
  return out;
}

}  // namespace hgrl::graph
