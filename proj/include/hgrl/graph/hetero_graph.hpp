#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "hgrl/sim/types.hpp"
#include "hgrl/sim/world.hpp"

namespace hgrl::graph {

inline constexpr int kEgoFeatures = 5;
inline constexpr int kHvFeatures = 7;
inline constexpr int kRelations = 3;  // aggressive, normal, conservative
inline constexpr int kDefaultSlots = 4;
inline constexpr double kTtcCap = 10.0;

/// Ego-centred heterogeneous state: ego features, one node matrix per style
/// (slots x 7, row-major), one star-edge vector per style and presence masks.
struct HeteroGraphState {
  int slots = kDefaultSlots;
  std::array<double, kEgoFeatures> ego{};
  std::array<std::vector<double>, kRelations> nodes;
  std::array<std::vector<double>, kRelations> edges;
  std::array<std::vector<std::uint8_t>, kRelations> masks;

  explicit HeteroGraphState(int slots = kDefaultSlots);

  double* row(int k, int slot) { return nodes[k].data() + slot * kHvFeatures; }
  const double* row(int k, int slot) const { return nodes[k].data() + slot * kHvFeatures; }
  int count(int k) const;

  bool operator==(const HeteroGraphState&) const = default;
};

/// Divisors applied before the network sees a graph.
struct FeatureScaling {
  double position = 100.0;
  double speed = 20.0;
  double accel = 4.5;
  double ttc = 10.0;
  double distance = 100.0;
  double accel_diff = 9.0;
  bool operator==(const FeatureScaling&) const = default;
};

/// Extra per-style feature: a_max (aggressive), mean recent acceleration
/// (normal), maximum deceleration (conservative).
double style_feature(const sim::VehicleState& hv);

/// Fills x_AV, the node matrices and masks. Rows are sorted by id within a
/// style; vehicles beyond `slots` per style are dropped.
HeteroGraphState node_features(const sim::World& world, int slots = kDefaultSlots);

/// Two-dimensional time to collision from `ego` toward `hv`: centre distance
/// over the closing speed projected on the line of centres, 10 s when not
/// closing, capped at 10 s, 0 for coincident centres.
double edge_ttc(const sim::VehicleState& ego, const sim::VehicleState& hv);
/// |mean acceleration(hv) - mean acceleration(ego)| over the history window.
double edge_accel_diff(const sim::VehicleState& ego, const sim::VehicleState& hv);
/// Centre-to-centre distance.
double edge_distance(const sim::VehicleState& ego, const sim::VehicleState& hv);

HeteroGraphState build_graph(const sim::World& world, int slots = kDefaultSlots);

/// Divides every raw quantity by its scaling constant; category column untouched.
HeteroGraphState scale_graph(const HeteroGraphState& g, const FeatureScaling& s);

}  // namespace hgrl::graph
