#pragma once

#include <vector>

#include "hgrl/nn/params.hpp"

namespace hgrl::nn {

struct AdamConfig {
  double lr = 0.0005;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Bias-corrected Adam over the flattened parameter vector.
class Adam {
 public:
  Adam(std::size_t n, AdamConfig cfg = {});

  void step(HgnnEmParams& params, const HgnnEmParams& grads);
  void step(std::vector<double>& params, const std::vector<double>& grads);

  long steps() const { return t_; }
  const AdamConfig& config() const { return cfg_; }

 private:
  AdamConfig cfg_;
  std::vector<double> m_;
  std::vector<double> v_;
  long t_ = 0;
};

}  // namespace hgrl::nn
