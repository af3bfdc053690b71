#include "hgrl/expert/training.hpp"

#include <algorithm>
#include <numeric>
#include <random>

#include "hgrl/common/error.hpp"
#include "hgrl/nn/adam.hpp"
#include "hgrl/nn/hgnn_em.hpp"

namespace hgrl::expert {

nn::Architecture expert_architecture(nn::Architecture arch) {
  arch.fusion = false;
  return arch;
}

nn::HgnnEmParams train_expert(const std::vector<Demonstration>& train, const nn::Architecture& arch,
                              const graph::FeatureScaling& scaling, const ExpertTrainConfig& cfg,
                              const std::function<void(const EpochStats&)>& on_epoch) {
  if (train.empty()) throw Error("expert training needs a non-empty dataset");
  if (cfg.epochs < 0 || cfg.batch_size <= 0 || cfg.max_batches_per_epoch <= 0 || !(cfg.learning_rate > 0.0)) {
    throw Error("invalid expert training settings");
  }
  std::mt19937_64 rng(cfg.seed);
  nn::HgnnEmParams params = nn::make_params(expert_architecture(arch), rng);
  nn::HgnnEmParams grads = params.zeros_like();
  nn::Adam adam(params.parameter_count(), {.lr = cfg.learning_rate});

  std::vector<graph::HeteroGraphState> inputs;
  inputs.reserve(train.size());
  for (const Demonstration& d : train) inputs.push_back(graph::scale_graph(d.graph, scaling));

  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  nn::ForwardCache cache;
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    const std::size_t batches = std::min<std::size_t>(
        cfg.max_batches_per_epoch, (order.size() + cfg.batch_size - 1) / cfg.batch_size);
    double loss_sum = 0.0;
    std::size_t seen = 0, correct = 0;
    for (std::size_t b = 0; b < batches; ++b) {
      const std::size_t begin = b * cfg.batch_size;
      const std::size_t end = std::min(order.size(), begin + cfg.batch_size);
      const double inv = 1.0 / static_cast<double>(end - begin);
      grads.set_zero();
      for (std::size_t i = begin; i < end; ++i) {
        const std::size_t idx = order[i];
        nn::forward(params, inputs[idx], cache);
        const int target = sim::to_index(train[idx].action);
        nn::ActionValues dq{};
        loss_sum += nn::cross_entropy(cache.q, target, &dq);
        if (nn::argmax(cache.q) == target) ++correct;
        for (double& g : dq) g *= inv;
        nn::backward(params, cache, dq, 0.0, grads);
      }
      seen += end - begin;
      adam.step(params, grads);
    }
    if (on_epoch) {
      on_epoch({epoch, loss_sum / static_cast<double>(seen), static_cast<double>(correct) / static_cast<double>(seen)});
    }
  }
  return params;
}

double eval_expert_accuracy(const nn::HgnnEmParams& params, const std::vector<Demonstration>& records,
                            const graph::FeatureScaling& scaling) {
  if (records.empty()) throw Error("accuracy of an empty record set is undefined");
  std::size_t correct = 0;
  for (const Demonstration& d : records) {
    const auto q = nn::expert_logits(params, graph::scale_graph(d.graph, scaling));
    if (nn::argmax(q) == sim::to_index(d.action)) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(records.size());
}

double mean_expert_loss(const nn::HgnnEmParams& params, const std::vector<Demonstration>& records,
                        const graph::FeatureScaling& scaling) {
  if (records.empty()) throw Error("loss of an empty record set is undefined");
  double sum = 0.0;
  for (const Demonstration& d : records) {
    sum += nn::cross_entropy(nn::expert_logits(params, graph::scale_graph(d.graph, scaling)),
                             sim::to_index(d.action));
  }
  return sum / static_cast<double>(records.size());
}

}  // namespace hgrl::expert
