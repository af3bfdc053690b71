#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "hgrl/graph/hetero_graph.hpp"
#include "hgrl/nn/hgnn_em.hpp"

namespace hgrl::drl {

struct DrlConfig {
  int episodes = 150;          // M
  int test_episodes = 50;      // N_test
  long random_steps = 9000;    // T_r, pure random warmup
  long explore_steps = 10000;  // T_e, epsilon decay horizon
  double epsilon_initial = 0.5;
  double epsilon_final = 0.01;
  std::size_t replay_capacity = 1'000'000;  // N_D
  int batch_size = 64;                      // B
  double learning_rate = 0.0005;            // alpha
  long update_interval = 50;                // T_c
  long target_sync_interval = 5000;         // T_t
  double gamma = 0.99;
  int checkpoint_every = 25;  // episodes
  bool fusion = true;         // false forces beta = 1
  /// Fusion weight of a freshly initialised policy, set through the output
  /// bias so the untrained network starts out deferring to the expert.
  double initial_beta = 0.001;
  /// Optimiser steps begin once this many environment steps have been taken.
  long learning_starts = 9000;
};

/// Linear decay from epsilon_initial to epsilon_final over explore_steps, then flat.
double epsilon(long t, const DrlConfig& cfg);

/// One stored interaction. Graphs are already scaled; the frozen expert's
/// action distribution is cached for both states.
struct Transition {
  graph::HeteroGraphState s;
  int action = 0;
  double reward = 0.0;
  graph::HeteroGraphState s_next;
  bool done = false;
  nn::ActionValues expert_s{};
  nn::ActionValues expert_next{};
};

/// Fixed-capacity ring; sampling is uniform with replacement.
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity);

  void push(Transition t);
  std::size_t size() const { return items_.size(); }
  std::size_t capacity() const { return capacity_; }
  /// Items in insertion order, oldest first.
  const Transition& oldest(std::size_t i) const;
  std::vector<const Transition*> sample(std::size_t n, std::mt19937_64& rng) const;

 private:
  std::size_t capacity_;
  std::size_t next_ = 0;  // slot overwritten by the next push once full
  std::vector<Transition> items_;
};

nn::FusionMode fusion_mode(const DrlConfig& cfg);

/// Epsilon-greedy over the fused values: uniform while t < random_steps,
/// then random with probability epsilon(t), else argmax (lowest index on ties).
int select_action(const nn::ActionValues& q_fin, long t, const DrlConfig& cfg, std::mt19937_64& rng);

/// Double-DQN regression on the fused values: the online network picks the
/// bootstrap action, the target network scores it, terminal targets are the
/// reward. Returns the batch-mean squared error and, if `grads` is given,
/// accumulates its gradient (targets held fixed).
double ddqn_loss(const std::vector<const Transition*>& batch, const nn::HgnnEmParams& online,
                 const nn::HgnnEmParams& target, double gamma, nn::FusionMode mode, nn::HgnnEmParams* grads);

/// Bootstrap target for one transition.
double ddqn_target(const Transition& t, const nn::HgnnEmParams& online, const nn::HgnnEmParams& target,
                   double gamma, nn::FusionMode mode);

}  // namespace hgrl::drl
