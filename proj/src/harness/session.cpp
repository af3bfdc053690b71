#include "hgrl/harness/session.hpp"

#include <algorithm>
#include <fstream>

#include "hgrl/common/error.hpp"
#include "hgrl/common/seeding.hpp"
#include "hgrl/graph/hetero_graph.hpp"

namespace hgrl::harness {

using nlohmann::json;

namespace {

json vehicle_json(const sim::TrajectoryRecord& r) {
  json v = sim::to_json(r);
  v.erase("episode");
  v.erase("step");
  return v;
}

std::string outcome_of(const sim::StepOutcome& out) {
  if (out.collided) return "collision";
  if (out.goal_reached) return "goal";
  return "timeout";
}

}  // namespace

json frame_message(int episode, int step, double dt, const std::vector<sim::TrajectoryRecord>& vehicles,
                   bool recording) {
  json list = json::array();
  for (const auto& r : vehicles) list.push_back(vehicle_json(r));
  return {{"type", "frame"}, {"episode", episode}, {"step", step},          {"t", step * dt},
          {"recording", recording}, {"vehicles", std::move(list)}};
}

json error_message(std::string_view text) { return {{"type", "error"}, {"text", std::string(text)}}; }

std::vector<json> replay_frames(const std::vector<sim::TrajectoryRecord>& log, double dt, std::optional<int> episode) {
  std::vector<json> frames;
  std::vector<sim::TrajectoryRecord> group;
  auto flush = [&] {
    if (group.empty()) return;
    frames.push_back(frame_message(group.front().episode, group.front().step, dt, group, false));
    group.clear();
  };
  for (const auto& r : log) {
    if (episode && r.episode != *episode) continue;
    if (!group.empty() && (r.episode != group.front().episode || r.step != group.front().step)) flush();
    group.push_back(r);
  }
  flush();
  return frames;
}

SessionController::SessionController(SessionConfig cfg, Emit emit)
    : cfg_(std::move(cfg)),
      emit_(std::move(emit)),
      world_(sim::spawn_scenario(episode_seed(cfg_.seed, 0), cfg_.scenario)) {
  if (cfg_.recording && cfg_.dataset.empty()) throw Error("recording needs a dataset path");
  next_episode_id_ = next_episode_id();
}

int SessionController::next_episode_id() const {
  if (cfg_.dataset.empty() || !std::filesystem::exists(cfg_.dataset)) return 0;
  int id = 0;
  for (const auto& r : expert::load_dataset(cfg_.dataset).records) id = std::max(id, r.episode_id + 1);
  return id;
}

void SessionController::spawn(int index) {
  episode_index_ = index;
  world_ = sim::spawn_scenario(episode_seed(cfg_.seed, static_cast<std::uint64_t>(index)), cfg_.scenario);
  records_.clear();
  pending_action_.reset();
  reward_ = 0.0;
  path_ = 0.0;
}

void SessionController::emit_frame() {
  std::vector<sim::TrajectoryRecord> vehicles;
  for (const auto& v : world_.vehicles()) vehicles.push_back(sim::make_record(episode_index_, world_.step_count(), v));
  emit_(frame_message(episode_index_, world_.step_count(), cfg_.scenario.dt, vehicles, cfg_.recording));
}

void SessionController::connect() { emit_frame(); }

void SessionController::handle_message(std::string_view text) {
  json msg;
  try {
    msg = json::parse(text);
  } catch (const json::parse_error&) {
    emit_(error_message("malformed message: not valid JSON"));
    return;
  }
  if (!msg.is_object() || !msg.contains("type") || !msg["type"].is_string()) {
    emit_(error_message("malformed message: missing string field 'type'"));
    return;
  }
  const std::string type = msg["type"];
  if (type == "action") {
    const json& code = msg.value("code", json());
    if (!code.is_number_integer() || code.get<long>() < 0 || code.get<long>() >= sim::kNumActions) {
      emit_(error_message("action code must be an integer in 0..4"));
      return;
    }
    pending_action_ = sim::action_from_index(code.get<int>());  // last one before the tick wins
    return;
  }
  if (type != "control") {
    emit_(error_message("unexpected message type '" + type + "'"));
    return;
  }
  const json& command = msg.value("command", json());
  if (!command.is_string()) {
    emit_(error_message("control message needs a string field 'command'"));
    return;
  }
  const std::string c = command;
  if (c == "start") {
    running_ = true;
  } else if (c == "pause") {
    running_ = false;
  } else if (c == "reset") {
    running_ = false;
    replay_.reset();
    spawn(episode_index_ + 1);
    emit_frame();
  } else if (c == "replay") {
    const json& id = msg.value("id", json());
    if (!id.is_number_integer()) {
      emit_(error_message("replay control needs an integer field 'id'"));
      return;
    }
    start_replay(id.get<int>());
  } else if (c == "record") {
    const json& enabled = msg.value("enabled", json());
    if (!enabled.is_boolean()) {
      emit_(error_message("record control needs a boolean field 'enabled'"));
      return;
    }
    if (enabled.get<bool>() && cfg_.dataset.empty()) {
      emit_(error_message("recording is unavailable: no dataset path configured"));
      return;
    }
    // Toggling mid-episode would leave a partial episode; the change applies to the next one.
    if (world_.step_count() > 0) {
      running_ = false;
      spawn(episode_index_ + 1);
    }
    cfg_.recording = enabled.get<bool>();
    emit_frame();
  } else {
    emit_(error_message("unknown control command '" + c + "'"));
  }
}

void SessionController::start_replay(int id) {
  if (cfg_.replay_log.empty()) {
    emit_(error_message("replay is unavailable: no trajectory log configured"));
    return;
  }
  std::ifstream in(cfg_.replay_log);
  if (!in) {
    emit_(error_message("cannot open trajectory log " + cfg_.replay_log.string()));
    return;
  }
  std::vector<json> frames;
  try {
    frames = replay_frames(sim::read_trajectory(in), cfg_.scenario.dt, id);
  } catch (const Error& e) {
    emit_(error_message(e.what()));
    return;
  }
  if (frames.empty()) {
    emit_(error_message("no episode " + std::to_string(id) + " in the trajectory log"));
    return;
  }
  replay_ = Replay{std::move(frames), 0};
  running_ = true;
}

void SessionController::tick() {
  if (!running_) return;
  if (replay_) {
    emit_(replay_->frames[replay_->next++]);
    if (replay_->next == replay_->frames.size()) {
      const auto n = replay_->frames.size();
      replay_.reset();
      running_ = false;
      emit_({{"type", "episode_end"}, {"result", "replay"}, {"metrics", {{"frames", n}}}});
    }
    return;
  }
  if (world_.finished()) return;
  const sim::EgoAction action = pending_action_.value_or(sim::EgoAction::Cruise);
  pending_action_.reset();
  if (cfg_.recording) {
    expert::Demonstration d;
    d.graph = graph::build_graph(world_, cfg_.slots);
    d.action = action;
    d.episode_id = next_episode_id_;
    d.step = world_.step_count();
    records_.push_back(std::move(d));
  }
  const Vec2 before = world_.ego().position();
  const sim::StepOutcome out = world_.step(action);
  path_ += (world_.ego().position() - before).norm();
  reward_ += out.reward;
  emit_frame();
  if (world_.finished()) finish_episode(out);
}

void SessionController::finish_episode(const sim::StepOutcome& out) {
  const int steps = world_.step_count();
  const double travel = steps * cfg_.scenario.dt;
  json metrics = {{"reward", reward_},
                  {"steps", steps},
                  {"travel_time_s", travel},
                  {"avg_speed_mps", travel > 0.0 ? path_ / travel : 0.0},
                  {"collisions", out.collided ? 1 : 0}};
  json end = {{"type", "episode_end"},
              {"episode", episode_index_},
              {"result", outcome_of(out)},
              {"metrics", std::move(metrics)},
              {"recorded", records_.size()}};
  if (cfg_.recording) {
    try {
      expert::DatasetHeader header;
      header.slots = cfg_.slots;
      header.scaling = cfg_.scaling;
      header.source = "human";
      expert::append_episode(cfg_.dataset, header, records_);
      ++next_episode_id_;
    } catch (const Error& e) {
      end["recorded"] = 0;
      emit_(error_message(std::string("episode not saved: ") + e.what()));
    }
  }
  emit_(end);
  running_ = false;
  spawn(episode_index_ + 1);
  emit_frame();
}

void SessionController::disconnect() {
  running_ = false;
  replay_.reset();
  if (world_.step_count() > 0) spawn(episode_index_ + 1);
  records_.clear();
  pending_action_.reset();
}

}  // namespace hgrl::harness
