#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>

#include "hgrl/drl/ddqn.hpp"
#include "hgrl/expert/training.hpp"
#include "hgrl/graph/hetero_graph.hpp"
#include "hgrl/nn/params.hpp"
#include "hgrl/sim/world.hpp"

namespace hgrl::harness {

struct PathsConfig {
  std::string dataset = "data/demonstrations.jsonl";
  std::string expert = "runs/expert.json";
  std::string checkpoints = "runs/checkpoints";
  std::string metrics = "runs/metrics.csv";
};

struct ServeConfig {
  int port = 8080;
  double realtime_factor = 1.0;  // 1 = one step per dt of wall time
};

/// Everything a run needs. Maps one-to-one onto the sections of the INI file.
struct RunConfig {
  sim::ScenarioConfig scenario;
  nn::Architecture network;
  graph::FeatureScaling scaling;
  int collect_episodes = 300;
  expert::ExpertTrainConfig expert;
  drl::DrlConfig drl;
  std::uint64_t eval_seed = 1'000'003;
  PathsConfig paths;
  ServeConfig serve;
};

/// Parses INI text. Unknown sections or keys, malformed values and failed
/// validation all throw hgrl::Error naming the offending key.
RunConfig parse_config(std::istream& in);
RunConfig load_config(const std::filesystem::path& path);

/// Writes every field, so the output parses back to an identical config.
void write_config(std::ostream& out, const RunConfig& cfg);

void validate(const RunConfig& cfg);

}  // namespace hgrl::harness
