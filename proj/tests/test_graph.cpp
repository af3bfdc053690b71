#include <doctest.h>

#include <cmath>
#include <random>

#include "hgrl/common/error.hpp"
#include "hgrl/graph/graph_json.hpp"
#include "hgrl/graph/hetero_graph.hpp"
#include "support.hpp"

using namespace hgrl;
using namespace hgrl::graph;
using sim::DriverStyle;
using sim::VehicleState;

namespace {

VehicleState moving(double x, double y, double vx, double vy) {
  VehicleState v;
  v.c_x = x;
  v.c_y = y;
  v.v_x = vx;
  v.v_y = vy;
  return v;
}

VehicleState with_history(std::initializer_list<double> accels) {
  VehicleState v;
  v.accel_history.assign(accels.begin(), accels.end());
  return v;
}

// Time of closest approach under constant velocities, found by golden-section
// search on the centre distance.
double closest_approach_time(const VehicleState& a, const VehicleState& b, double horizon) {
  auto dist = [&](double t) {
    return std::hypot((b.c_x + b.v_x * t) - (a.c_x + a.v_x * t), (b.c_y + b.v_y * t) - (a.c_y + a.v_y * t));
  };
  const double g = (std::sqrt(5.0) - 1.0) / 2.0;
  double lo = 0.0, hi = horizon;
  for (int i = 0; i < 200; ++i) {
    const double m1 = hi - g * (hi - lo), m2 = lo + g * (hi - lo);
    if (dist(m1) < dist(m2)) hi = m2;
    else lo = m1;
  }
  return 0.5 * (lo + hi);
}

}  // namespace

TEST_CASE("ttc: head-on approach") {
  const VehicleState ego = moving(0.0, 0.0, 6.0, 0.0);
  const VehicleState hv = moving(50.0, 0.0, -4.0, 0.0);
  CHECK(edge_ttc(ego, hv) == doctest::Approx(5.0).epsilon(1e-12));
}

TEST_CASE("ttc: separating, parallel and coincident cases") {
  CHECK(edge_ttc(moving(0, 0, -3, 0), moving(20, 0, 4, 0)) == kTtcCap);
  CHECK(edge_ttc(moving(0, 0, 5, 1), moving(20, 3, 5, 1)) == kTtcCap);
  CHECK(edge_ttc(moving(1, 1, 5, 0), moving(1, 1, 0, 0)) == 0.0);
  // Slow closing is capped.
  CHECK(edge_ttc(moving(0, 0, 1, 0), moving(90, 0, 0, 0)) == kTtcCap);
}

TEST_CASE("ttc: collinear approaches equal the closest-approach time") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> ang(-M_PI, M_PI), dist(5.0, 60.0), spd(0.0, 20.0);
  int checked = 0;
  for (int i = 0; i < 2000; ++i) {
    const double th = ang(rng), d = dist(rng);
    const double ux = std::cos(th), uy = std::sin(th);
    const double va = spd(rng), vb = spd(rng);
    const VehicleState a = moving(0.0, 0.0, va * ux, va * uy);
    const VehicleState b = moving(d * ux, d * uy, -vb * ux, -vb * uy);
    const double closing = va + vb;
    if (closing <= 0.0 || d / closing >= kTtcCap) continue;
    const double brute = closest_approach_time(a, b, 2.0 * kTtcCap);
    CHECK(hgrl::testing::close_rel(edge_ttc(a, b), brute, 1e-9));
    ++checked;
  }
  CHECK(checked > 500);
}

TEST_CASE("accel diff and distance examples") {
  CHECK(edge_accel_diff(with_history({0.5, 0.5}), with_history({0.5, 0.5})) == 0.0);
  CHECK(edge_accel_diff(with_history({1.0, 1.0, 1.0, 1.0, 1.0}), with_history({-0.5, -0.5, -0.5, -0.5, -0.5})) ==
        doctest::Approx(1.5));
  CHECK(edge_distance(moving(0, 0, 0, 0), moving(3, 4, 0, 0)) == 5.0);
  CHECK(edge_distance(moving(2, 2, 0, 0), moving(2, 2, 0, 0)) == 0.0);
  CHECK(edge_distance(moving(0, 0, 0, 0), moving(10, 0, 0, 0)) == 10.0);
}

TEST_CASE("accel diff and distance match direct evaluation and are symmetric") {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> pos(-100.0, 100.0), acc(-4.5, 4.5);
  for (int i = 0; i < 10000; ++i) {
    VehicleState a = moving(pos(rng), pos(rng), 0, 0), b = moving(pos(rng), pos(rng), 0, 0);
    double sa = 0.0, sb = 0.0;
    for (std::size_t k = 0; k < sim::kHistoryLength; ++k) {
      a.accel_history[k] = acc(rng);
      b.accel_history[k] = acc(rng);
      sa += a.accel_history[k];
      sb += b.accel_history[k];
    }
    const double diff = std::abs(sb / 5.0 - sa / 5.0);
    const double dist = std::sqrt((b.c_x - a.c_x) * (b.c_x - a.c_x) + (b.c_y - a.c_y) * (b.c_y - a.c_y));
    CHECK(edge_accel_diff(a, b) == doctest::Approx(diff).epsilon(1e-12));
    CHECK(edge_distance(a, b) == doctest::Approx(dist).epsilon(1e-12));
    CHECK(edge_accel_diff(a, b) == edge_accel_diff(b, a));
    CHECK(edge_distance(a, b) == edge_distance(b, a));
  }
}

TEST_CASE("node features: style extras, ordering and padding") {
  const sim::World w = sim::spawn_scenario(12, {});
  const HeteroGraphState g = build_graph(w);
  CHECK(g.count(0) == 2);
  CHECK(g.count(1) == 2);
  CHECK(g.count(2) == 2);
  CHECK(g.ego[0] == w.ego().c_x);
  CHECK(g.ego[1] == w.ego().c_y);
  for (int s = 0; s < 2; ++s) {
    CHECK(g.row(0, s)[5] == 4.5);
    CHECK(g.row(1, s)[5] == 0.0);  // at rest since spawn
    CHECK(g.row(2, s)[5] == -4.5);
    for (int k = 0; k < kRelations; ++k) CHECK(g.row(k, s)[6] == static_cast<double>(k));
  }
  // Rows follow vehicle id order within a style.
  std::vector<const VehicleState*> aggressive;
  for (const auto& v : w.vehicles()) {
    if (v.style == DriverStyle::Aggressive) aggressive.push_back(&v);
  }
  REQUIRE(aggressive.size() == 2);
  CHECK(aggressive[0]->id < aggressive[1]->id);
  CHECK(g.row(0, 0)[0] == aggressive[0]->c_x);
  CHECK(g.row(0, 1)[0] == aggressive[1]->c_x);
  for (int k = 0; k < kRelations; ++k) {
    for (int s = 2; s < g.slots; ++s) {
      CHECK(g.masks[k][s] == 0);
      CHECK(g.edges[k][s] == 0.0);
      for (int f = 0; f < kHvFeatures; ++f) CHECK(g.row(k, s)[f] == 0.0);
    }
  }
}

TEST_CASE("build graph: absent style leaves its block empty") {
  sim::ScenarioConfig cfg;
  cfg.conservative = 0;
  const HeteroGraphState g = build_graph(sim::spawn_scenario(3, cfg));
  CHECK(g.count(2) == 0);
  for (int s = 0; s < g.slots; ++s) CHECK(g.edges[2][s] == 0.0);
}

TEST_CASE("build graph: edge ranges, masks and fixed shape along rollouts") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    sim::World w = sim::spawn_scenario(seed, {});
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> act(0, 2);
    while (!w.finished()) {
      const HeteroGraphState g = build_graph(w);
      const HeteroGraphState again = build_graph(w);
      CHECK(g.nodes == again.nodes);
      CHECK(g.edges == again.edges);
      for (int k = 0; k < kRelations; ++k) {
        REQUIRE(g.nodes[k].size() == static_cast<std::size_t>(kDefaultSlots * kHvFeatures));
        for (int s = 0; s < g.slots; ++s) {
          if (!g.masks[k][s]) {
            CHECK(g.edges[k][s] == 0.0);
            continue;
          }
          if (k == 0) {
            CHECK(g.edges[k][s] > 0.0);
            CHECK(g.edges[k][s] <= kTtcCap);
          } else {
            CHECK(g.edges[k][s] >= 0.0);
          }
        }
      }
      w.step(sim::action_from_index(act(rng)));
    }
  }
}

TEST_CASE("graph json round trip and validation") {
  sim::World w = sim::spawn_scenario(4, {});
  for (int i = 0; i < 20; ++i) w.step(sim::EgoAction::Accelerate);
  const HeteroGraphState g = build_graph(w);
  const HeteroGraphState back = graph_from_json(graph_to_json(g), g.slots);
  CHECK(back.ego == g.ego);
  CHECK(back.nodes == g.nodes);
  CHECK(back.edges == g.edges);
  CHECK(back.masks == g.masks);

  auto j = graph_to_json(g);
  j["nodes"][0].erase(j["nodes"][0].begin());
  CHECK_THROWS_AS(graph_from_json(j, g.slots), Error);
  CHECK_THROWS_AS(graph_from_json(graph_to_json(g), g.slots + 1), Error);

  const FeatureScaling sc;
  CHECK(scaling_from_json(scaling_to_json(sc)) == sc);
}

TEST_CASE("scaling divides by the fixed constants") {
  const sim::World w = sim::spawn_scenario(6, {});
  const HeteroGraphState g = build_graph(w);
  const FeatureScaling sc;
  const HeteroGraphState s = scale_graph(g, sc);
  CHECK(s.ego[1] == doctest::Approx(g.ego[1] / 100.0));
  CHECK(s.row(0, 0)[5] == doctest::Approx(4.5 / 4.5));
  CHECK(s.row(2, 0)[5] == doctest::Approx(-1.0));
  CHECK(s.edges[0][0] == doctest::Approx(g.edges[0][0] / 10.0));
  CHECK(s.edges[2][0] == doctest::Approx(g.edges[2][0] / 100.0));
  CHECK(s.row(1, 0)[6] == 1.0);  // category left unscaled
}
