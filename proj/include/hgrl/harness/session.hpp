#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "hgrl/expert/dataset.hpp"
#include "hgrl/sim/trajectory_log.hpp"
#include "hgrl/sim/world.hpp"

namespace hgrl::harness {

/// Frames grouped from a trajectory log, one per (episode, step) in log order.
std::vector<nlohmann::json> replay_frames(const std::vector<sim::TrajectoryRecord>& log, double dt,
                                          std::optional<int> episode = std::nullopt);

nlohmann::json frame_message(int episode, int step, double dt, const std::vector<sim::TrajectoryRecord>& vehicles,
                             bool recording);
nlohmann::json error_message(std::string_view text);

struct SessionConfig {
  sim::ScenarioConfig scenario;
  std::uint64_t seed = 1;  // base of the per-episode seed stream
  int slots = graph::kDefaultSlots;
  bool recording = false;
  std::filesystem::path dataset;  // appended to when an episode ends while recording
  graph::FeatureScaling scaling;  // written into a new dataset header
  std::filesystem::path replay_log;  // source for replay controls; may be empty
};

/// The live driving session, independent of any transport. Inbound text goes
/// through handle_message(); the owner calls tick() once per simulation step
/// and forwards everything passed to the emit callback. All calls must come
/// from one thread or strand.
class SessionController {
 public:
  using Emit = std::function<void(const nlohmann::json&)>;

  SessionController(SessionConfig cfg, Emit emit);

  /// Sends the current frame to a newly attached client.
  void connect();
  void handle_message(std::string_view text);
  /// Advances the live episode or the active replay by one frame.
  void tick();
  /// Drops the in-progress episode without recording it and prepares a fresh one.
  void disconnect();

  bool running() const { return running_; }
  bool replaying() const { return replay_.has_value(); }
  bool recording() const { return cfg_.recording; }
  int episode_index() const { return episode_index_; }
  const sim::World& world() const { return world_; }
  std::size_t pending_records() const { return records_.size(); }

 private:
  struct Replay {
    std::vector<nlohmann::json> frames;
    std::size_t next = 0;
  };

  void spawn(int index);
  void emit_frame();
  void finish_episode(const sim::StepOutcome& out);
  void start_replay(int id);
  int next_episode_id() const;

  SessionConfig cfg_;
  Emit emit_;
  sim::World world_;
  int episode_index_ = 0;
  bool running_ = false;
  std::optional<sim::EgoAction> pending_action_;
  std::vector<expert::Demonstration> records_;
  double reward_ = 0.0;
  double path_ = 0.0;
  std::optional<Replay> replay_;
  int next_episode_id_ = 0;
};

}  // namespace hgrl::harness
