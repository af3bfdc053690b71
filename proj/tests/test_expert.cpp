#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <random>
#include <sstream>

#include "gradcheck.hpp"
#include "hgrl/common/error.hpp"
#include "hgrl/expert/dataset.hpp"
#include "hgrl/expert/scripted_expert.hpp"
#include "hgrl/expert/training.hpp"
#include "support.hpp"

using namespace hgrl;
using namespace hgrl::expert;
using sim::DriverStyle;
using sim::EgoAction;
using hgrl::testing::ego_before_zone;
using hgrl::testing::straight;
using hgrl::testing::vehicle_before_zone;

namespace {

constexpr int kInnerLane = 1;

nn::Architecture small_expert_arch() { return hgrl::testing::small_architecture(false); }

// Time to cover `d` from speed v0 at constant acceleration a, capped at v_cap.
double arrival_time(double d, double v0, double a, double v_cap) {
  const double t_cap = (v_cap - v0) / a;
  const double d_cap = v0 * t_cap + 0.5 * a * t_cap * t_cap;
  if (d <= d_cap) return (-v0 + std::sqrt(v0 * v0 + 2.0 * a * d)) / a;
  return t_cap + (d - d_cap) / v_cap;
}

std::string to_text(const Dataset& d) {
  std::ostringstream out;
  write_dataset(out, d);
  return out.str();
}

const Dataset& shared_dataset() {
  static const Dataset d = collect_scripted(40, 7, {});
  return d;
}

}  // namespace

TEST_CASE("scripted expert: empty intersection from rest accelerates") {
  const sim::World w({}, {ego_before_zone(30.0, 0.0, kInnerLane)});
  CHECK(scripted_expert(w) == EgoAction::Accelerate);
}

TEST_CASE("scripted expert: clear road at top speed cruises") {
  const sim::World w({}, {ego_before_zone(30.0, 20.0, kInnerLane)});
  CHECK(scripted_expert(w) == EgoAction::Cruise);
}

TEST_CASE("scripted expert: outer lane moves over for the turn") {
  const sim::World w({}, {ego_before_zone(45.0, 8.0, 0)});
  CHECK(scripted_expert(w) == EgoAction::LaneLeft);
}

TEST_CASE("scripted expert: yields to an aggressive driver crossing 2 s ahead") {
  const double ego_dist = 35.0, ego_speed = 6.0;
  const double t_ego = arrival_time(ego_dist, ego_speed, 3.5, 20.0);
  const double v_hv = sim::idm_params_for(DriverStyle::Aggressive).v_desired;
  const double hv_dist = v_hv * (t_ego - 2.0);
  REQUIRE(hv_dist > 0.0);
  const sim::World w({}, {ego_before_zone(ego_dist, ego_speed, kInnerLane),
                          vehicle_before_zone(1, DriverStyle::Aggressive, straight(sim::Approach::North), hv_dist,
                                              v_hv)});
  REQUIRE(w.conflicting(w.vehicles()[0], w.vehicles()[1]));
  // Occupancy oracle: the driver reaches the zone 2 s before the ego, well
  // inside the 3 s margin.
  CHECK(std::abs(t_ego - hv_dist / v_hv - 2.0) < 1e-12);
  CHECK(scripted_expert(w) == EgoAction::SlowDown);

  // The same driver far upstream leaves room to go.
  const sim::World later({}, {ego_before_zone(ego_dist, ego_speed, kInnerLane),
                              vehicle_before_zone(1, DriverStyle::Aggressive, straight(sim::Approach::North),
                                                  v_hv * (t_ego + 8.0), v_hv)});
  CHECK(scripted_expert(later) == EgoAction::Accelerate);
}

TEST_CASE("window conflict margin") {
  const sim::ZoneWindow ego{5.0, 7.0};
  CHECK(windows_conflict(ego, {9.5, 11.0}, 3.0));
  CHECK_FALSE(windows_conflict(ego, {10.5, 11.0}, 3.0));
  CHECK(windows_conflict(ego, {0.0, 2.5}, 3.0));
  CHECK_FALSE(windows_conflict(ego, {0.0, 1.5}, 3.0));
  CHECK_FALSE(windows_conflict(ego, {}, 3.0));
}

TEST_CASE("scripted expert is deterministic and completes episodes") {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    sim::World a = sim::spawn_scenario(seed, {}), b = sim::spawn_scenario(seed, {});
    while (!a.finished()) {
      const EgoAction x = scripted_expert(a), y = scripted_expert(b);
      REQUIRE(x == y);
      a.step(x);
      b.step(y);
    }
    CHECK(a.ego().c_x == b.ego().c_x);
    CHECK(a.ego().c_y == b.ego().c_y);
  }
}

TEST_CASE("collection: one record per step, byte-identical on rerun") {
  const Dataset a = collect_scripted(100, 3, {});
  const Dataset b = collect_scripted(100, 3, {});
  CHECK(to_text(a) == to_text(b));
  int expected_step = 0, episode = 0;
  for (const Demonstration& r : a.records) {
    if (r.episode_id != episode) {
      CHECK(r.episode_id == episode + 1);
      episode = r.episode_id;
      expected_step = 0;
    }
    CHECK(r.step == expected_step++);
  }
  CHECK(episode == 99);
  CHECK(to_text(collect_scripted(5, 4, {})) != to_text(collect_scripted(5, 3, {})));
  CHECK_THROWS_AS(collect_scripted(0, 3, {}), Error);
}

TEST_CASE("dataset text round trip and append") {
  const Dataset& d = shared_dataset();
  std::istringstream in(to_text(d));
  const Dataset back = read_dataset(in);
  CHECK(back.records == d.records);
  CHECK(back.header.slots == d.header.slots);
  CHECK(back.header.source == d.header.source);

  const auto path = std::filesystem::temp_directory_path() / "hgrl_test_append.jsonl";
  std::filesystem::remove(path);
  DatasetHeader h;
  h.source = "human";
  std::vector<Demonstration> ep1(d.records.begin(), d.records.begin() + 3);
  append_episode(path, h, ep1);
  append_episode(path, h, ep1);
  const Dataset loaded = load_dataset(path);
  std::filesystem::remove(path);
  CHECK(loaded.records.size() == 6);
  CHECK(loaded.header.source == "human");

  std::istringstream bad("{\"schema\":\"something-else\"}\n");
  CHECK_THROWS_AS(read_dataset(bad), Error);
}

TEST_CASE("split is 70/30 by episode within 2%") {
  int train = 0;
  for (int id = 0; id < 5000; ++id) train += in_train_split(id);
  CHECK(std::abs(train / 5000.0 - 0.7) <= 0.02);

  const Dataset d = collect_scripted(100, 11, {});
  REQUIRE(d.records.size() >= 1000);
  const SplitView s = split_dataset(d.records);
  CHECK(s.train.size() + s.test.size() == d.records.size());
  CHECK(std::abs(static_cast<double>(s.train.size()) / d.records.size() - 0.7) <= 0.05);
  for (const auto& r : s.train) CHECK(in_train_split(r.episode_id));
  for (const auto& r : s.test) CHECK_FALSE(in_train_split(r.episode_id));
}

TEST_CASE("expert training: memorises a single sample") {
  const Demonstration one = shared_dataset().records.at(25);
  ExpertTrainConfig cfg;
  cfg.epochs = 500;
  const auto p = train_expert({one}, nn::Architecture{}, {}, cfg);
  CHECK(eval_expert_accuracy(p, {one}, {}) == 1.0);
  CHECK(mean_expert_loss(p, {one}, {}) < 0.05);
}

TEST_CASE("expert training: initial loss near ln 5 and chance accuracy") {
  std::mt19937_64 rng(5);
  const nn::HgnnEmParams init = nn::make_params(expert_architecture(nn::Architecture{}), rng);
  const double loss = mean_expert_loss(init, shared_dataset().records, {});
  CHECK(std::abs(loss - std::log(5.0)) <= 0.2);

  // Labels independent of the inputs, balanced over the five actions.
  std::vector<Demonstration> balanced;
  std::uniform_int_distribution<int> label(0, 4);
  for (int i = 0; i < 4000; ++i) {
    Demonstration r;
    r.graph = hgrl::testing::random_graph(graph::kDefaultSlots, rng);
    r.action = static_cast<EgoAction>(label(rng));
    balanced.push_back(r);
  }
  CHECK(std::abs(eval_expert_accuracy(init, balanced, {}) - 0.2) <= 0.05);
}

TEST_CASE("expert training: bit-reproducible, order-invariant accuracy, finite logits") {
  const auto& recs = shared_dataset().records;
  ExpertTrainConfig cfg;
  cfg.epochs = 3;
  cfg.max_batches_per_epoch = 20;
  const auto a = train_expert(recs, small_expert_arch(), {}, cfg);
  const auto b = train_expert(recs, small_expert_arch(), {}, cfg);
  CHECK(nn::flatten(a) == nn::flatten(b));
  CHECK_FALSE(a.arch.fusion);

  std::vector<Demonstration> shuffled = recs;
  std::mt19937_64 rng(9);
  std::shuffle(shuffled.begin(), shuffled.end(), rng);
  CHECK(eval_expert_accuracy(a, recs, {}) == eval_expert_accuracy(a, shuffled, {}));

  for (const auto& r : recs) {
    for (double v : nn::expert_logits(a, graph::scale_graph(r.graph, {}))) REQUIRE(std::isfinite(v));
  }

  std::vector<EpochStats> seen;
  train_expert(recs, small_expert_arch(), {}, cfg, [&](const EpochStats& s) { seen.push_back(s); });
  REQUIRE(seen.size() == 3);
  CHECK(seen.back().epoch == 3);
}

TEST_CASE("expert training: empty dataset and fusion head are rejected") {
  CHECK_THROWS_AS(train_expert({}, nn::Architecture{}, {}, {}), Error);
  CHECK_FALSE(expert_architecture(nn::Architecture{}).fusion);
}
