#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "hgrl/expert/scripted_expert.hpp"
#include "hgrl/graph/hetero_graph.hpp"
#include "hgrl/sim/world.hpp"

namespace hgrl::expert {

inline constexpr int kDatasetVersion = 1;
inline constexpr const char* kDatasetSchema = "hgrl.demonstrations";

/// One labelled decision: the raw (unscaled) graph the driver saw and the
/// action taken.
struct Demonstration {
  graph::HeteroGraphState graph;
  sim::EgoAction action = sim::EgoAction::Cruise;
  int episode_id = 0;
  int step = 0;
  bool operator==(const Demonstration&) const = default;
};

struct DatasetHeader {
  int version = kDatasetVersion;
  int slots = graph::kDefaultSlots;
  graph::FeatureScaling scaling;
  std::string source = "scripted";
};

struct Dataset {
  DatasetHeader header;
  std::vector<Demonstration> records;
};

/// Header line, then one record per line.
void write_dataset(std::ostream& out, const Dataset& d);
Dataset read_dataset(std::istream& in);
void save_dataset(const std::filesystem::path& path, const Dataset& d);
Dataset load_dataset(const std::filesystem::path& path);

/// Appends records for one more episode to an existing dataset file, creating
/// it with `header` if absent. The file is rewritten atomically.
void append_episode(const std::filesystem::path& path, const DatasetHeader& header,
                    const std::vector<Demonstration>& episode);

/// Deterministic 70/30 split keyed on the episode id.
bool in_train_split(int episode_id);

struct SplitView {
  std::vector<Demonstration> train;
  std::vector<Demonstration> test;
};
SplitView split_dataset(const std::vector<Demonstration>& records);

struct CollectConfig {
  sim::ScenarioConfig scenario;
  int slots = graph::kDefaultSlots;
  graph::FeatureScaling scaling;
  ScriptedExpertConfig expert;
};

using Driver = std::function<sim::EgoAction(const sim::World&)>;

/// Runs one episode with `driver`, recording one demonstration per step.
std::vector<Demonstration> record_episode(sim::World& world, const Driver& driver, int episode_id, int slots);

/// Scripted demonstrations for episodes 0..n-1, each spawned from the
/// episode's seed in the run's seed stream.
Dataset collect_scripted(int n_episodes, std::uint64_t seed, const CollectConfig& cfg);

}  // namespace hgrl::expert
