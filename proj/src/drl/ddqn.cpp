#include "hgrl/drl/ddqn.hpp"

#include <algorithm>

#include "hgrl/common/error.hpp"

namespace hgrl::drl {

double epsilon(long t, const DrlConfig& cfg) {
  if (t <= 0) return cfg.epsilon_initial;
  if (t >= cfg.explore_steps) return cfg.epsilon_final;
  const double e = cfg.epsilon_initial -
                   (cfg.epsilon_initial - cfg.epsilon_final) * static_cast<double>(t) / static_cast<double>(cfg.explore_steps);
  return std::clamp(e, cfg.epsilon_final, cfg.epsilon_initial);
}

ReplayBuffer::ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
  if (capacity == 0) throw Error("replay capacity must be positive");
}

void ReplayBuffer::push(Transition t) {
  if (items_.size() < capacity_) {
    items_.push_back(std::move(t));
    return;
  }
  items_[next_] = std::move(t);
  next_ = (next_ + 1) % capacity_;
}

const Transition& ReplayBuffer::oldest(std::size_t i) const {
  if (i >= items_.size()) throw Error("replay index out of range");
  if (items_.size() < capacity_) return items_[i];
  return items_[(next_ + i) % capacity_];
}

std::vector<const Transition*> ReplayBuffer::sample(std::size_t n, std::mt19937_64& rng) const {
  if (items_.empty()) throw Error("cannot sample from an empty replay buffer");
  std::uniform_int_distribution<std::size_t> pick(0, items_.size() - 1);
  std::vector<const Transition*> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(&items_[pick(rng)]);
  return out;
}

nn::FusionMode fusion_mode(const DrlConfig& cfg) { return cfg.fusion ? nn::FusionMode::Learned : nn::FusionMode::ForceGrl; }

int select_action(const nn::ActionValues& q_fin, long t, const DrlConfig& cfg, std::mt19937_64& rng) {
  std::uniform_int_distribution<int> any(0, sim::kNumActions - 1);
  if (t < cfg.random_steps) return any(rng);
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  if (coin(rng) < epsilon(t, cfg)) return any(rng);
  return nn::argmax(q_fin);
}

double ddqn_target(const Transition& t, const nn::HgnnEmParams& online, const nn::HgnnEmParams& target,
                   double gamma, nn::FusionMode mode) {
  if (t.done) return t.reward;
  nn::ForwardCache cache;
  const int best = nn::argmax(nn::hgnn_em_forward(t.s_next, online, t.expert_next, mode, cache).q_fin);
  const nn::FusedOutput eval = nn::hgnn_em_forward(t.s_next, target, t.expert_next, mode, cache);
  return t.reward + gamma * eval.q_fin[best];
}

double ddqn_loss(const std::vector<const Transition*>& batch, const nn::HgnnEmParams& online,
                 const nn::HgnnEmParams& target, double gamma, nn::FusionMode mode, nn::HgnnEmParams* grads) {
  if (batch.empty()) throw Error("empty training batch");
  const double inv = 1.0 / static_cast<double>(batch.size());
  double loss = 0.0;
  nn::ForwardCache cache;
  for (const Transition* t : batch) {
    const double y = ddqn_target(*t, online, target, gamma, mode);
    const nn::FusedOutput out = nn::hgnn_em_forward(t->s, online, t->expert_s, mode, cache);
    const int a = t->action;
    const double err = y - out.q_fin[a];
    loss += err * err * inv;
    if (!grads) continue;
    // d/dpred of the mean squared error, then through the convex fusion.
    const double dpred = -2.0 * err * inv;
    nn::ActionValues dprob{};
    dprob[a] = dpred * out.beta;
    const nn::ActionValues dq = nn::softmax_backward(out.p_grl, dprob);
    const double dbeta = mode == nn::FusionMode::Learned ? dpred * (out.p_grl[a] - out.p_exp[a]) : 0.0;
    nn::backward(online, cache, dq, dbeta, *grads);
  }
  return loss;
}

}  // namespace hgrl::drl
