#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "hgrl/drl/ddqn.hpp"
#include "hgrl/nn/checkpoint.hpp"
#include "hgrl/sim/trajectory_log.hpp"
#include "hgrl/sim/world.hpp"

namespace hgrl::drl {

enum class Outcome { Goal, Collision, Timeout };
std::string outcome_name(Outcome o);

struct EpisodeMetrics {
  int episode = 0;
  std::uint64_t seed = 0;
  Outcome outcome = Outcome::Timeout;
  double reward = 0.0;
  int collisions = 0;
  double avg_speed_mps = 0.0;  // path length / travel time
  double travel_time_s = 0.0;
  int steps = 0;
  double epsilon = 0.0;
  double wall_ms_per_step = 0.0;
  double mean_beta = 0.0;  // fusion weight averaged over the episode's decisions
};

/// CSV with a header row. Timing is wall-clock and therefore only written
/// when asked for; everything else is deterministic.
void write_metrics_csv(std::ostream& out, const std::vector<EpisodeMetrics>& rows, bool with_timing);

/// Per-step decision for a running episode.
using Policy = std::function<int(const sim::World&)>;

/// Called after every step with the advanced world and the applied action.
using StepHook = std::function<void(const sim::World&, int, const sim::StepOutcome&)>;

/// Runs one episode to termination, accumulating the metrics. Optionally logs
/// the trajectory (including the initial state).
EpisodeMetrics run_episode(sim::World& world, const Policy& policy, int episode, sim::TrajectoryWriter* log = nullptr,
                           const StepHook& on_step = {});

struct TrainSetup {
  sim::ScenarioConfig scenario;
  nn::Architecture arch;
  graph::FeatureScaling scaling;
  DrlConfig drl;
  std::uint64_t seed = 1;
  nn::HgnnEmParams expert;
  std::filesystem::path checkpoint_dir;  // periodic checkpoints; empty disables
  std::filesystem::path metrics_path;    // rewritten after every episode; empty disables
};

struct TrainResult {
  nn::Checkpoint checkpoint;  // final policy with the expert attached
  std::vector<EpisodeMetrics> episodes;
  std::vector<double> losses;  // one per optimiser step
  long steps = 0;
  long target_syncs = 0;
};

TrainResult train(const TrainSetup& setup, const std::function<void(const EpisodeMetrics&)>& on_episode = {});

struct EvalSummary {
  int episodes = 0;
  double success_rate = 0.0;
  double collision_rate = 0.0;
  double timeout_rate = 0.0;
  double mean_reward = 0.0;
  double mean_avg_speed_mps = 0.0;
  double mean_travel_time_success_s = 0.0;
  double max_travel_time_success_s = 0.0;
  double mean_decision_ms = 0.0;
  double max_decision_ms = 0.0;
};

struct EvalResult {
  std::vector<EpisodeMetrics> episodes;
  EvalSummary summary;
};

/// Greedy rollouts of a policy checkpoint (which must carry its expert) on
/// `n` episodes seeded from `seed`. Decision time covers graph construction
/// and the fused forward pass.
EvalResult evaluate(const nn::Checkpoint& ckpt, const sim::ScenarioConfig& scenario, int n, std::uint64_t seed,
                    nn::FusionMode mode = nn::FusionMode::Learned, sim::TrajectoryWriter* log = nullptr);

void write_summary_json(std::ostream& out, const EvalSummary& s);

}  // namespace hgrl::drl
