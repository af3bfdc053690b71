#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "hgrl/expert/dataset.hpp"
#include "hgrl/nn/params.hpp"

namespace hgrl::expert {

struct ExpertTrainConfig {
  int epochs = 500;
  int batch_size = 32;
  int max_batches_per_epoch = 100;
  double learning_rate = 0.0005;
  std::uint64_t seed = 1;
};

struct EpochStats {
  int epoch = 0;
  double mean_loss = 0.0;
  double batch_accuracy = 0.0;  // on the batches seen this epoch
};

/// The expert shares the policy architecture minus the fusion head.
nn::Architecture expert_architecture(nn::Architecture arch);

/// Minimises mean softmax cross-entropy on `train` with Adam. Bit-reproducible
/// for a fixed seed. `on_epoch` (optional) observes per-epoch statistics.
nn::HgnnEmParams train_expert(const std::vector<Demonstration>& train, const nn::Architecture& arch,
                              const graph::FeatureScaling& scaling, const ExpertTrainConfig& cfg,
                              const std::function<void(const EpochStats&)>& on_epoch = {});

/// Fraction of records whose argmax expert logit equals the recorded action.
double eval_expert_accuracy(const nn::HgnnEmParams& params, const std::vector<Demonstration>& records,
                            const graph::FeatureScaling& scaling);

/// Mean cross-entropy over the records.
double mean_expert_loss(const nn::HgnnEmParams& params, const std::vector<Demonstration>& records,
                        const graph::FeatureScaling& scaling);

}  // namespace hgrl::expert
