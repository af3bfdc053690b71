#pragma once

#include <array>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "hgrl/graph/hetero_graph.hpp"

namespace hgrl::nn {

/// Dense row-major array of doubles.
struct Tensor {
  std::vector<int> shape;
  std::vector<double> values;

  Tensor() = default;
  explicit Tensor(std::vector<int> s, double fill = 0.0);

  std::size_t size() const { return values.size(); }
  double* data() { return values.data(); }
  const double* data() const { return values.data(); }
  bool operator==(const Tensor&) const = default;
};

struct Architecture {
  int embed_dim = 32;
  int heads = 4;
  int policy_hidden = 64;
  int fusion_hidden = 32;
  int slots = graph::kDefaultSlots;
  /// Feed the ego embedding to the policy head next to the aggregated
  /// attention output.
  bool ego_skip = true;
  /// The expert variant has no fusion-weight generator.
  bool fusion = true;
  double leaky_slope = 0.2;

  int aggregate_dim() const { return embed_dim * heads; }
  int policy_input_dim() const { return aggregate_dim() + (ego_skip ? embed_dim : 0); }
  bool operator==(const Architecture&) const = default;
};

struct Dense {
  Tensor weight;  // out x in
  Tensor bias;    // out
  int in() const { return weight.shape.at(1); }
  int out() const { return weight.shape.at(0); }
};

/// Per relation type and attention head: node transform W_N, scalar edge
/// transform (weight, bias) and attention vector over [W_N x_i || W_N x_j].
struct RelationHead {
  Tensor w_node;     // d x d
  Tensor w_edge;     // 1
  Tensor b_edge;     // 1
  Tensor attention;  // 2d
};

struct HgnnEmParams {
  Architecture arch;
  Dense ego_encoder;                                        // 5 -> d
  std::array<Dense, graph::kRelations> hv_encoders;         // 7 -> d
  std::array<Dense, graph::kRelations> edge_encoders;       // 2d+1 -> 1
  std::array<std::vector<RelationHead>, graph::kRelations> relations;  // [k][head]
  Dense policy_hidden;
  Dense policy_out;                                         // -> n_a
  Dense fusion_hidden;                                      // empty without fusion
  Dense fusion_out;

  /// Visits every learnable tensor in a fixed order with a stable name.
  template <class F>
  void for_each(F&& f) {
    visit(*this, f);
  }
  template <class F>
  void for_each(F&& f) const {
    visit(*this, f);
  }

  HgnnEmParams zeros_like() const;
  std::size_t parameter_count() const;
  void set_zero();
  /// this += scale * other, tensor by tensor.
  void add_scaled(const HgnnEmParams& other, double scale);

 private:
  template <class Self, class F>
  static void visit(Self& self, F& f) {
    static constexpr const char* kStyle[] = {"aggressive", "normal", "conservative"};
    auto dense = [&](const std::string& name, auto& d) {
      f(name + ".weight", d.weight);
      f(name + ".bias", d.bias);
    };
    dense("ego_encoder", self.ego_encoder);
    for (int k = 0; k < graph::kRelations; ++k) dense(std::string("hv_encoder.") + kStyle[k], self.hv_encoders[k]);
    for (int k = 0; k < graph::kRelations; ++k) dense(std::string("edge_encoder.") + kStyle[k], self.edge_encoders[k]);
    for (int k = 0; k < graph::kRelations; ++k) {
      for (std::size_t p = 0; p < self.relations[k].size(); ++p) {
        const std::string base = std::string("rgat.") + kStyle[k] + ".head" + std::to_string(p);
        auto& h = self.relations[k][p];
        f(base + ".w_node", h.w_node);
        f(base + ".w_edge", h.w_edge);
        f(base + ".b_edge", h.b_edge);
        f(base + ".attention", h.attention);
      }
    }
    dense("policy.hidden", self.policy_hidden);
    dense("policy.out", self.policy_out);
    if (self.arch.fusion) {
      dense("fusion.hidden", self.fusion_hidden);
      dense("fusion.out", self.fusion_out);
    }
  }
};

/// Zero-filled parameters of the given architecture.
HgnnEmParams make_zero_params(const Architecture& arch);
/// Uniform(+-sqrt(6/(fan_in+fan_out))) weights, zero biases.
HgnnEmParams make_params(const Architecture& arch, std::mt19937_64& rng);

/// Flat views used by the optimiser and gradient checks.
std::vector<double> flatten(const HgnnEmParams& p);
void unflatten(std::span<const double> flat, HgnnEmParams& p);

}  // namespace hgrl::nn
