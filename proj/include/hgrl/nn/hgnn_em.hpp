#pragma once

#include <array>
#include <span>
#include <vector>

#include "hgrl/graph/hetero_graph.hpp"
#include "hgrl/nn/params.hpp"
#include "hgrl/sim/types.hpp"

namespace hgrl::nn {

using ActionValues = std::array<double, sim::kNumActions>;

/// How the fusion weight beta is obtained.
enum class FusionMode {
  Learned,      // beta from the fusion-weight generator
  ForceGrl,     // beta = 1 (fusion-off ablation)
  ForceExpert,  // beta = 0
};

struct NodeEmbeddings {
  std::vector<double> ego;                                   // d
  std::array<std::vector<double>, graph::kRelations> hv;     // slots x d
};

/// Per relation and head, everything the backward pass needs.
struct HeadCache {
  std::vector<double> u_ego;   // W_N x'_AV
  std::vector<double> u_nb;    // slots x d, W_N x'_j
  std::vector<double> score;   // a . LeakyReLU([u_ego || u_j])
  std::vector<double> gate;    // w_e * E_j + b_e
  std::vector<double> logit;   // gate * score
  std::vector<double> alpha;   // softmax over present neighbours
};

struct ForwardCache {
  graph::HeteroGraphState input;
  std::vector<double> ego_pre;
  std::array<std::vector<double>, graph::kRelations> hv_pre;
  NodeEmbeddings emb;
  std::array<std::vector<double>, graph::kRelations> edge_values;
  std::array<std::vector<HeadCache>, graph::kRelations> heads;
  std::vector<double> message;  // P x d, before the activation
  std::vector<double> h;        // P x d
  std::vector<double> policy_in;
  std::vector<double> policy_pre;
  std::vector<double> policy_act;
  ActionValues q{};
  std::vector<double> fusion_pre;
  std::vector<double> fusion_act;
  double fusion_logit = 0.0;
  double beta = 1.0;  // only meaningful with a fusion head
};

/// Ego and per-style node encoders (dense + ReLU); masked rows stay zero.
NodeEmbeddings node_encode(const graph::HeteroGraphState& g, const HgnnEmParams& p);

/// Learned edge value per slot from [x'_AV || x'_j || raw edge]; masked slots are 0.
std::vector<double> edge_encode(std::span<const double> ego_emb, std::span<const double> hv_emb,
                                std::span<const double> raw_edges, std::span<const std::uint8_t> mask,
                                const HgnnEmParams& p, int relation);

/// Attention logit (w_e*e + b_e) * (a . LeakyReLU([W_N x_i || W_N x_j])).
double rgat_logit(std::span<const double> x_i, std::span<const double> x_j, double e, const RelationHead& head,
                  double slope);

/// Max-stabilised softmax over the unmasked entries; masked entries get 0.
/// All-masked input gives all zeros.
std::vector<double> rgat_normalize(std::span<const double> logits, std::span<const std::uint8_t> mask);

/// Multi-head ego embedding: per head ReLU(sum_k sum_j alpha_j^k W_N^k x_j),
/// heads concatenated (P x d).
std::vector<double> rgat_aggregate(const NodeEmbeddings& emb,
                                   const std::array<std::vector<double>, graph::kRelations>& edge_values,
                                   const std::array<std::vector<std::uint8_t>, graph::kRelations>& masks,
                                   const HgnnEmParams& p);

/// Full network on a scaled graph: fills the cache including q and (with a
/// fusion head) beta.
void forward(const HgnnEmParams& p, const graph::HeteroGraphState& scaled, ForwardCache& cache);

/// Accumulates parameter gradients into `grads` given dL/dq and dL/dbeta.
void backward(const HgnnEmParams& p, const ForwardCache& cache, const ActionValues& dq, double dbeta,
              HgnnEmParams& grads);

ActionValues softmax(const ActionValues& q);
/// Gradient wrt logits given gradient wrt softmax probabilities.
ActionValues softmax_backward(const ActionValues& prob, const ActionValues& dprob);

struct FusedOutput {
  ActionValues q_grl{};
  ActionValues p_grl{};
  ActionValues p_exp{};
  ActionValues q_fin{};
  double beta = 0.0;
};

double effective_beta(double learned, FusionMode mode);
/// beta * softmax(q_grl) + (1 - beta) * p_exp.
FusedOutput fuse(const ActionValues& q_grl, double beta, const ActionValues& p_exp);

/// Forward pass of the expert alone; returns its logits.
ActionValues expert_logits(const HgnnEmParams& expert, const graph::HeteroGraphState& scaled);

/// Policy and frozen expert on the same graph, fused.
FusedOutput hgnn_em_forward(const graph::HeteroGraphState& scaled, const HgnnEmParams& policy,
                            const HgnnEmParams& expert, FusionMode mode = FusionMode::Learned);
/// Same, reusing a caller-provided cache for the policy pass.
FusedOutput hgnn_em_forward(const graph::HeteroGraphState& scaled, const HgnnEmParams& policy,
                            const ActionValues& p_exp, FusionMode mode, ForwardCache& cache);

/// Lowest index among the maxima.
int argmax(const ActionValues& v);

/// Softmax cross-entropy against a class index; optionally writes dL/dq.
double cross_entropy(const ActionValues& q, int target, ActionValues* dq = nullptr);

}  // namespace hgrl::nn
