#include "hgrl/drl/training.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <ostream>

#include <json.hpp>

#include "hgrl/common/atomic_file.hpp"
#include "hgrl/common/error.hpp"
#include "hgrl/common/seeding.hpp"
#include "hgrl/nn/adam.hpp"

namespace hgrl::drl {

using Clock = std::chrono::steady_clock;

std::string outcome_name(Outcome o) {
  switch (o) {
    case Outcome::Goal: return "goal";
    case Outcome::Collision: return "collision";
    case Outcome::Timeout: return "timeout";
  }
  return "timeout";
}

namespace {

std::string num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

double elapsed_ms(Clock::time_point since) {
  return std::chrono::duration<double, std::milli>(Clock::now() - since).count();
}

}  // namespace

void write_metrics_csv(std::ostream& out, const std::vector<EpisodeMetrics>& rows, bool with_timing) {
  out << "episode,seed,reward,collisions,avg_speed_mps,travel_time_s,steps,epsilon";
  if (with_timing) out << ",wall_ms_per_step";
  out << ",outcome\n";
  for (const EpisodeMetrics& m : rows) {
    out << m.episode << ',' << m.seed << ',' << num(m.reward) << ',' << m.collisions << ',' << num(m.avg_speed_mps)
        << ',' << num(m.travel_time_s) << ',' << m.steps << ',' << num(m.epsilon);
    if (with_timing) out << ',' << num(m.wall_ms_per_step);
    out << ',' << outcome_name(m.outcome);
    out << '\n';
  }
}

EpisodeMetrics run_episode(sim::World& world, const Policy& policy, int episode, sim::TrajectoryWriter* log,
                           const StepHook& on_step) {
  EpisodeMetrics m;
  m.episode = episode;
  m.seed = world.config().seed;
  if (log) log->write(episode, world.step_count(), world.vehicles());
  double path = 0.0;
  Vec2 last = world.ego().position();
  sim::StepOutcome out;
  const auto start = Clock::now();
  while (!world.finished()) {
    const int action = policy(world);
    out = world.step(sim::action_from_index(action));
    if (log) log->write(episode, world.step_count(), world.vehicles());
    if (on_step) on_step(world, action, out);
    const Vec2 now = world.ego().position();
    path += (now - last).norm();
    last = now;
    m.reward += out.reward;
  }
  m.steps = world.step_count();
  m.wall_ms_per_step = m.steps > 0 ? elapsed_ms(start) / m.steps : 0.0;
  m.outcome = out.collided ? Outcome::Collision : out.goal_reached ? Outcome::Goal : Outcome::Timeout;
  m.collisions = out.collided ? 1 : 0;
  m.travel_time_s = m.steps * world.config().dt;
  m.avg_speed_mps = m.travel_time_s > 0.0 ? path / m.travel_time_s : 0.0;
  return m;
}

TrainResult train(const TrainSetup& setup, const std::function<void(const EpisodeMetrics&)>& on_episode) {
  const DrlConfig& cfg = setup.drl;
  if (setup.expert.arch.fusion) throw Error("the expert must not carry a fusion head");
  if (setup.expert.arch.slots != setup.arch.slots) throw Error("expert and policy disagree on the slot count");

  nn::Architecture arch = setup.arch;
  arch.fusion = true;
  std::mt19937_64 init_rng(setup.seed);
  std::mt19937_64 rng(splitmix64(setup.seed));
  TrainResult result;
  nn::HgnnEmParams policy = nn::make_params(arch, init_rng);
  if (!(cfg.initial_beta > 0.0 && cfg.initial_beta < 1.0)) throw Error("initial_beta must lie in (0, 1)");
  policy.fusion_out.bias.values.at(0) = std::log(cfg.initial_beta / (1.0 - cfg.initial_beta));
  nn::HgnnEmParams target = policy;
  nn::HgnnEmParams grads = policy.zeros_like();
  nn::Adam adam(policy.parameter_count(), {.lr = cfg.learning_rate});
  ReplayBuffer buffer(cfg.replay_capacity);
  const nn::FusionMode mode = fusion_mode(cfg);
  const int slots = arch.slots;

  auto observe = [&](const sim::World& w, graph::HeteroGraphState& g, nn::ActionValues& p_exp) {
    g = graph::scale_graph(graph::build_graph(w, slots), setup.scaling);
    p_exp = nn::softmax(nn::expert_logits(setup.expert, g));
  };

  auto make_checkpoint = [&](long step) {
    nn::Checkpoint c;
    c.params = policy;
    c.scaling = setup.scaling;
    c.seed = setup.seed;
    c.step = step;
    c.expert = setup.expert;
    return c;
  };

  long t = 0;
  nn::ForwardCache cache;
  for (int ep = 0; ep < cfg.episodes; ++ep) {
    sim::World world = sim::spawn_scenario(episode_seed(setup.seed, static_cast<std::uint64_t>(ep)), setup.scenario);
    graph::HeteroGraphState s;
    nn::ActionValues p_exp{};
    observe(world, s, p_exp);
    double beta_sum = 0.0;

    const Policy act = [&](const sim::World&) {
      const nn::FusedOutput fused = nn::hgnn_em_forward(s, policy, p_exp, mode, cache);
      beta_sum += fused.beta;
      return select_action(fused.q_fin, t, cfg, rng);
    };
    // Every step is stored, then the update schedule runs on the global step count.
    const StepHook learn = [&](const sim::World& w, int action, const sim::StepOutcome& out) {
      Transition tr;
      tr.s = s;
      tr.action = action;
      tr.reward = out.reward;
      tr.done = out.done();
      tr.expert_s = p_exp;
      observe(w, s, p_exp);
      tr.s_next = s;
      tr.expert_next = p_exp;
      buffer.push(std::move(tr));
      ++t;
      if (t >= cfg.learning_starts && t % cfg.update_interval == 0 &&
          buffer.size() >= static_cast<std::size_t>(cfg.batch_size)) {
        grads.set_zero();
        const auto batch = buffer.sample(cfg.batch_size, rng);
        result.losses.push_back(ddqn_loss(batch, policy, target, cfg.gamma, mode, &grads));
        adam.step(policy, grads);
      }
      if (t % cfg.target_sync_interval == 0) {
        target = policy;
        ++result.target_syncs;
      }
    };
    EpisodeMetrics m = run_episode(world, act, ep + 1, nullptr, learn);
    m.mean_beta = m.steps > 0 ? beta_sum / m.steps : 0.0;
    m.epsilon = t < cfg.random_steps ? 1.0 : epsilon(t, cfg);
    result.episodes.push_back(m);
    if (on_episode) on_episode(m);

    if (!setup.metrics_path.empty()) {
      write_file_atomic(setup.metrics_path, [&](std::ostream& o) { write_metrics_csv(o, result.episodes, true); });
    }
    const bool last_episode = ep + 1 == cfg.episodes;
    if (!setup.checkpoint_dir.empty() && cfg.checkpoint_every > 0 && ((ep + 1) % cfg.checkpoint_every == 0 || last_episode)) {
      char name[64];
      std::snprintf(name, sizeof name, "policy_ep%03d.json", ep + 1);
      nn::save_checkpoint(setup.checkpoint_dir / name, make_checkpoint(t));
    }
  }
  result.steps = t;
  result.checkpoint = make_checkpoint(t);
  return result;
}

EvalResult evaluate(const nn::Checkpoint& ckpt, const sim::ScenarioConfig& scenario, int n, std::uint64_t seed,
                    nn::FusionMode mode, sim::TrajectoryWriter* log) {
  if (!ckpt.expert) throw Error("policy checkpoint does not contain its expert");
  if (n <= 0) throw Error("evaluation needs at least one episode");
  const nn::HgnnEmParams& policy = ckpt.params;
  const nn::HgnnEmParams& expert = *ckpt.expert;
  EvalResult r;
  double decision_ms = 0.0;
  long decisions = 0;
  nn::ForwardCache cache;
  const Policy greedy = [&](const sim::World& w) {
    const auto start = Clock::now();
    const graph::HeteroGraphState g = graph::scale_graph(graph::build_graph(w, policy.arch.slots), ckpt.scaling);
    const nn::ActionValues p_exp = nn::softmax(nn::expert_logits(expert, g));
    const int a = nn::argmax(nn::hgnn_em_forward(g, policy, p_exp, mode, cache).q_fin);
    const double ms = elapsed_ms(start);
    decision_ms += ms;
    r.summary.max_decision_ms = std::max(r.summary.max_decision_ms, ms);
    ++decisions;
    return a;
  };
  for (int i = 0; i < n; ++i) {
    sim::World world = sim::spawn_scenario(episode_seed(seed, static_cast<std::uint64_t>(i)), scenario);
    r.episodes.push_back(run_episode(world, greedy, i + 1, log));
  }

  EvalSummary& s = r.summary;
  s.episodes = n;
  int goals = 0;
  for (const EpisodeMetrics& m : r.episodes) {
    s.mean_reward += m.reward / n;
    s.mean_avg_speed_mps += m.avg_speed_mps / n;
    if (m.outcome == Outcome::Goal) {
      ++goals;
      s.mean_travel_time_success_s += m.travel_time_s;
      s.max_travel_time_success_s = std::max(s.max_travel_time_success_s, m.travel_time_s);
    }
    if (m.outcome == Outcome::Collision) s.collision_rate += 1.0 / n;
    if (m.outcome == Outcome::Timeout) s.timeout_rate += 1.0 / n;
  }
  s.success_rate = static_cast<double>(goals) / n;
  if (goals > 0) s.mean_travel_time_success_s /= goals;
  s.mean_decision_ms = decisions > 0 ? decision_ms / static_cast<double>(decisions) : 0.0;
  return r;
}

void write_summary_json(std::ostream& out, const EvalSummary& s) {
  const nlohmann::json j = {{"episodes", s.episodes},
                            {"success_rate", s.success_rate},
                            {"collision_rate", s.collision_rate},
                            {"timeout_rate", s.timeout_rate},
                            {"mean_reward", s.mean_reward},
                            {"mean_avg_speed_mps", s.mean_avg_speed_mps},
                            {"mean_travel_time_success_s", s.mean_travel_time_success_s},
                            {"max_travel_time_success_s", s.max_travel_time_success_s},
                            {"mean_decision_ms", s.mean_decision_ms},
                            {"max_decision_ms", s.max_decision_ms}};
  out << j.dump(2) << '\n';
}

}  // namespace hgrl::drl
