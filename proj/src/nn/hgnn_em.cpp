#include "hgrl/nn/hgnn_em.hpp"

#include <algorithm>
#include <cmath>

#include "hgrl/common/error.hpp"

namespace hgrl::nn {

using graph::kRelations;

namespace {

// y = W x + b for a row-major W (out x in).
void affine(const Dense& layer, const double* x, double* y) {
  const int in = layer.in();
  const int out = layer.out();
  const double* w = layer.weight.data();
  for (int o = 0; o < out; ++o) {
    double acc = layer.bias.values[o];
    const double* row = w + static_cast<std::ptrdiff_t>(o) * in;
    for (int i = 0; i < in; ++i) acc += row[i] * x[i];
    y[o] = acc;
  }
}

// y = W x, W is d x d.
void matvec(const Tensor& w, const double* x, double* y, int d) {
  const double* m = w.data();
  for (int o = 0; o < d; ++o) {
    double acc = 0.0;
    const double* row = m + static_cast<std::ptrdiff_t>(o) * d;
    for (int i = 0; i < d; ++i) acc += row[i] * x[i];
    y[o] = acc;
  }
}

// Gradients of y = W x + b: dW += dy x^T, db += dy, dx += W^T dy (dx optional).
void affine_backward(const Dense& layer, const double* x, const double* dy, Dense& grad, double* dx) {
  const int in = layer.in();
  const int out = layer.out();
  const double* w = layer.weight.data();
  double* gw = grad.weight.data();
  for (int o = 0; o < out; ++o) {
    const double g = dy[o];
    if (g == 0.0) continue;
    grad.bias.values[o] += g;
    double* grow = gw + static_cast<std::ptrdiff_t>(o) * in;
    const double* row = w + static_cast<std::ptrdiff_t>(o) * in;
    for (int i = 0; i < in; ++i) grow[i] += g * x[i];
    if (dx) {
      for (int i = 0; i < in; ++i) dx[i] += g * row[i];
    }
  }
}

void matvec_backward(const Tensor& w, const double* x, const double* dy, Tensor& gw, double* dx, int d) {
  const double* m = w.data();
  double* g = gw.data();
  for (int o = 0; o < d; ++o) {
    const double go = dy[o];
    if (go == 0.0) continue;
    double* grow = g + static_cast<std::ptrdiff_t>(o) * d;
    const double* row = m + static_cast<std::ptrdiff_t>(o) * d;
    for (int i = 0; i < d; ++i) {
      grow[i] += go * x[i];
      dx[i] += go * row[i];
    }
  }
}

double relu(double x) { return x > 0.0 ? x : 0.0; }
double leaky(double x, double slope) { return x > 0.0 ? x : slope * x; }
double leaky_grad(double x, double slope) { return x > 0.0 ? 1.0 : slope; }

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

// a . LeakyReLU([u_i || u_j]).
double attention_score(const double* u_i, const double* u_j, const double* a, int d, double slope) {
  double s = 0.0;
  for (int t = 0; t < d; ++t) s += a[t] * leaky(u_i[t], slope);
  for (int t = 0; t < d; ++t) s += a[d + t] * leaky(u_j[t], slope);
  return s;
}

void check_graph(const graph::HeteroGraphState& g, const HgnnEmParams& p) {
  if (g.slots != p.arch.slots) throw Error("graph slot count does not match the network");
}

}  // namespace

NodeEmbeddings node_encode(const graph::HeteroGraphState& g, const HgnnEmParams& p) {
  check_graph(g, p);
  const int d = p.arch.embed_dim;
  NodeEmbeddings e;
  e.ego.assign(d, 0.0);
  affine(p.ego_encoder, g.ego.data(), e.ego.data());
  for (double& v : e.ego) v = relu(v);
  for (int k = 0; k < kRelations; ++k) {
    e.hv[k].assign(static_cast<std::size_t>(g.slots) * d, 0.0);
    for (int s = 0; s < g.slots; ++s) {
      if (!g.masks[k][s]) continue;
      double* out = e.hv[k].data() + static_cast<std::ptrdiff_t>(s) * d;
      affine(p.hv_encoders[k], g.row(k, s), out);
      for (int t = 0; t < d; ++t) out[t] = relu(out[t]);
    }
  }
  return e;
}

std::vector<double> edge_encode(std::span<const double> ego_emb, std::span<const double> hv_emb,
                                std::span<const double> raw_edges, std::span<const std::uint8_t> mask,
                                const HgnnEmParams& p, int relation) {
  const int d = p.arch.embed_dim;
  const Dense& enc = p.edge_encoders.at(relation);
  const double* w = enc.weight.data();
  std::vector<double> out(mask.size(), 0.0);
  for (std::size_t s = 0; s < mask.size(); ++s) {
    if (!mask[s]) continue;
    const double* x = hv_emb.data() + s * d;
    double acc = enc.bias.values[0];
    for (int t = 0; t < d; ++t) acc += w[t] * ego_emb[t];
    for (int t = 0; t < d; ++t) acc += w[d + t] * x[t];
    acc += w[2 * d] * raw_edges[s];
    out[s] = acc;
  }
  return out;
}

double rgat_logit(std::span<const double> x_i, std::span<const double> x_j, double e, const RelationHead& head,
                  double slope) {
  const int d = static_cast<int>(x_i.size());
  std::vector<double> u_i(d), u_j(d);
  matvec(head.w_node, x_i.data(), u_i.data(), d);
  matvec(head.w_node, x_j.data(), u_j.data(), d);
  const double gate = head.w_edge.values[0] * e + head.b_edge.values[0];
  return gate * attention_score(u_i.data(), u_j.data(), head.attention.data(), d, slope);
}

std::vector<double> rgat_normalize(std::span<const double> logits, std::span<const std::uint8_t> mask) {
  std::vector<double> alpha(logits.size(), 0.0);
  double mx = -INFINITY;
  for (std::size_t j = 0; j < logits.size(); ++j) {
    if (mask[j]) mx = std::max(mx, logits[j]);
  }
  if (mx == -INFINITY) return alpha;
  double z = 0.0;
  for (std::size_t j = 0; j < logits.size(); ++j) {
    if (!mask[j]) continue;
    alpha[j] = std::exp(logits[j] - mx);
    z += alpha[j];
  }
  for (double& a : alpha) a /= z;
  return alpha;
}

namespace {

// Attention and aggregation for every relation/head; fills cache.heads,
// cache.message and cache.h.
void attend(const HgnnEmParams& p, const std::array<std::vector<std::uint8_t>, kRelations>& masks,
            ForwardCache& c) {
  const int d = p.arch.embed_dim;
  const int heads = p.arch.heads;
  const int slots = p.arch.slots;
  const double slope = p.arch.leaky_slope;
  c.message.assign(static_cast<std::size_t>(heads) * d, 0.0);
  for (int k = 0; k < kRelations; ++k) {
    c.heads[k].resize(heads);
    for (int h = 0; h < heads; ++h) {
      const RelationHead& rh = p.relations[k][h];
      HeadCache& hc = c.heads[k][h];
      hc.u_ego.assign(d, 0.0);
      hc.u_nb.assign(static_cast<std::size_t>(slots) * d, 0.0);
      hc.score.assign(slots, 0.0);
      hc.gate.assign(slots, 0.0);
      hc.logit.assign(slots, 0.0);
      matvec(rh.w_node, c.emb.ego.data(), hc.u_ego.data(), d);
      for (int s = 0; s < slots; ++s) {
        if (!masks[k][s]) continue;
        double* u = hc.u_nb.data() + static_cast<std::ptrdiff_t>(s) * d;
        matvec(rh.w_node, c.emb.hv[k].data() + static_cast<std::ptrdiff_t>(s) * d, u, d);
        hc.score[s] = attention_score(hc.u_ego.data(), u, rh.attention.data(), d, slope);
        hc.gate[s] = rh.w_edge.values[0] * c.edge_values[k][s] + rh.b_edge.values[0];
        hc.logit[s] = hc.gate[s] * hc.score[s];
      }
      hc.alpha = rgat_normalize(hc.logit, masks[k]);
      double* m = c.message.data() + static_cast<std::ptrdiff_t>(h) * d;
      for (int s = 0; s < slots; ++s) {
        if (!masks[k][s]) continue;
        const double* u = hc.u_nb.data() + static_cast<std::ptrdiff_t>(s) * d;
        for (int t = 0; t < d; ++t) m[t] += hc.alpha[s] * u[t];
      }
    }
  }
  c.h.resize(c.message.size());
  for (std::size_t i = 0; i < c.message.size(); ++i) c.h[i] = relu(c.message[i]);
}

}  // namespace

std::vector<double> rgat_aggregate(const NodeEmbeddings& emb,
                                   const std::array<std::vector<double>, kRelations>& edge_values,
                                   const std::array<std::vector<std::uint8_t>, kRelations>& masks,
                                   const HgnnEmParams& p) {
  ForwardCache c;
  c.emb = emb;
  c.edge_values = edge_values;
  attend(p, masks, c);
  return c.h;
}

void forward(const HgnnEmParams& p, const graph::HeteroGraphState& g, ForwardCache& c) {
  check_graph(g, p);
  const Architecture& a = p.arch;
  const int d = a.embed_dim;
  c.input = g;

  // Node encoders, keeping pre-activations for the backward pass.
  c.ego_pre.assign(d, 0.0);
  affine(p.ego_encoder, g.ego.data(), c.ego_pre.data());
  c.emb.ego.resize(d);
  for (int t = 0; t < d; ++t) c.emb.ego[t] = relu(c.ego_pre[t]);
  for (int k = 0; k < kRelations; ++k) {
    c.hv_pre[k].assign(static_cast<std::size_t>(g.slots) * d, 0.0);
    c.emb.hv[k].assign(static_cast<std::size_t>(g.slots) * d, 0.0);
    for (int s = 0; s < g.slots; ++s) {
      if (!g.masks[k][s]) continue;
      double* pre = c.hv_pre[k].data() + static_cast<std::ptrdiff_t>(s) * d;
      affine(p.hv_encoders[k], g.row(k, s), pre);
      double* out = c.emb.hv[k].data() + static_cast<std::ptrdiff_t>(s) * d;
      for (int t = 0; t < d; ++t) out[t] = relu(pre[t]);
    }
    c.edge_values[k] = edge_encode(c.emb.ego, c.emb.hv[k], g.edges[k], g.masks[k], p, k);
  }

  attend(p, g.masks, c);

  // Policy head.
  c.policy_in = c.h;
  if (a.ego_skip) c.policy_in.insert(c.policy_in.end(), c.emb.ego.begin(), c.emb.ego.end());
  c.policy_pre.assign(a.policy_hidden, 0.0);
  affine(p.policy_hidden, c.policy_in.data(), c.policy_pre.data());
  c.policy_act.resize(a.policy_hidden);
  for (int i = 0; i < a.policy_hidden; ++i) c.policy_act[i] = relu(c.policy_pre[i]);
  affine(p.policy_out, c.policy_act.data(), c.q.data());

  // Fusion-weight generator.
  if (a.fusion) {
    c.fusion_pre.assign(a.fusion_hidden, 0.0);
    affine(p.fusion_hidden, c.h.data(), c.fusion_pre.data());
    c.fusion_act.resize(a.fusion_hidden);
    for (int i = 0; i < a.fusion_hidden; ++i) c.fusion_act[i] = relu(c.fusion_pre[i]);
    affine(p.fusion_out, c.fusion_act.data(), &c.fusion_logit);
    c.beta = sigmoid(c.fusion_logit);
  }
}

void backward(const HgnnEmParams& p, const ForwardCache& c, const ActionValues& dq, double dbeta,
              HgnnEmParams& grads) {
  const Architecture& a = p.arch;
  const int d = a.embed_dim;
  const int heads = a.heads;
  const int slots = a.slots;
  const double slope = a.leaky_slope;
  const graph::HeteroGraphState& g = c.input;

  std::vector<double> dh(c.h.size(), 0.0);
  std::vector<double> d_ego(d, 0.0);

  // Policy head.
  {
    std::vector<double> d_act(a.policy_hidden, 0.0);
    affine_backward(p.policy_out, c.policy_act.data(), dq.data(), grads.policy_out, d_act.data());
    for (int i = 0; i < a.policy_hidden; ++i) {
      if (c.policy_pre[i] <= 0.0) d_act[i] = 0.0;
    }
    std::vector<double> d_in(c.policy_in.size(), 0.0);
    affine_backward(p.policy_hidden, c.policy_in.data(), d_act.data(), grads.policy_hidden, d_in.data());
    for (std::size_t i = 0; i < dh.size(); ++i) dh[i] += d_in[i];
    if (a.ego_skip) {
      for (int t = 0; t < d; ++t) d_ego[t] += d_in[dh.size() + t];
    }
  }

  // Fusion head: beta = sigmoid(logit).
  if (a.fusion && dbeta != 0.0) {
    const double dlogit = dbeta * c.beta * (1.0 - c.beta);
    std::vector<double> d_act(a.fusion_hidden, 0.0);
    affine_backward(p.fusion_out, c.fusion_act.data(), &dlogit, grads.fusion_out, d_act.data());
    for (int i = 0; i < a.fusion_hidden; ++i) {
      if (c.fusion_pre[i] <= 0.0) d_act[i] = 0.0;
    }
    affine_backward(p.fusion_hidden, c.h.data(), d_act.data(), grads.fusion_hidden, dh.data());
  }

  // h = ReLU(message).
  std::vector<double> dmsg(dh.size(), 0.0);
  for (std::size_t i = 0; i < dh.size(); ++i) dmsg[i] = c.message[i] > 0.0 ? dh[i] : 0.0;

  std::array<std::vector<double>, kRelations> d_hv;
  std::array<std::vector<double>, kRelations> d_edge;
  for (int k = 0; k < kRelations; ++k) {
    d_hv[k].assign(static_cast<std::size_t>(slots) * d, 0.0);
    d_edge[k].assign(slots, 0.0);
  }

  std::vector<double> du_ego(d), du_j(d), dalpha(slots), dlogit(slots);
  for (int k = 0; k < kRelations; ++k) {
    for (int h = 0; h < heads; ++h) {
      const RelationHead& rh = p.relations[k][h];
      RelationHead& gh = grads.relations[k][h];
      const HeadCache& hc = c.heads[k][h];
      const double* dm = dmsg.data() + static_cast<std::ptrdiff_t>(h) * d;

      // message += sum_j alpha_j u_j.
      double weighted = 0.0;
      for (int s = 0; s < slots; ++s) {
        dalpha[s] = 0.0;
        if (!g.masks[k][s]) continue;
        const double* u = hc.u_nb.data() + static_cast<std::ptrdiff_t>(s) * d;
        double acc = 0.0;
        for (int t = 0; t < d; ++t) acc += dm[t] * u[t];
        dalpha[s] = acc;
        weighted += hc.alpha[s] * acc;
      }
      std::fill(du_ego.begin(), du_ego.end(), 0.0);
      for (int s = 0; s < slots; ++s) {
        if (!g.masks[k][s]) continue;
        dlogit[s] = hc.alpha[s] * (dalpha[s] - weighted);
        const double dgate = dlogit[s] * hc.score[s];
        const double dscore = dlogit[s] * hc.gate[s];
        gh.w_edge.values[0] += dgate * c.edge_values[k][s];
        gh.b_edge.values[0] += dgate;
        d_edge[k][s] += dgate * rh.w_edge.values[0];

        const double* u = hc.u_nb.data() + static_cast<std::ptrdiff_t>(s) * d;
        const double* att = rh.attention.data();
        double* gatt = gh.attention.data();
        for (int t = 0; t < d; ++t) {
          gatt[t] += dscore * leaky(hc.u_ego[t], slope);
          gatt[d + t] += dscore * leaky(u[t], slope);
          du_ego[t] += dscore * att[t] * leaky_grad(hc.u_ego[t], slope);
          du_j[t] = dscore * att[d + t] * leaky_grad(u[t], slope) + hc.alpha[s] * dm[t];
        }
        const double* x = c.emb.hv[k].data() + static_cast<std::ptrdiff_t>(s) * d;
        matvec_backward(rh.w_node, x, du_j.data(), gh.w_node, d_hv[k].data() + static_cast<std::ptrdiff_t>(s) * d, d);
      }
      matvec_backward(rh.w_node, c.emb.ego.data(), du_ego.data(), gh.w_node, d_ego.data(), d);
    }
  }

  // Edge encoders: E_j = w . [x'_AV || x'_j || D_j] + b.
  for (int k = 0; k < kRelations; ++k) {
    const Dense& enc = p.edge_encoders[k];
    Dense& genc = grads.edge_encoders[k];
    const double* w = enc.weight.data();
    double* gw = genc.weight.data();
    for (int s = 0; s < slots; ++s) {
      const double de = d_edge[k][s];
      if (!g.masks[k][s] || de == 0.0) continue;
      const double* x = c.emb.hv[k].data() + static_cast<std::ptrdiff_t>(s) * d;
      double* dx = d_hv[k].data() + static_cast<std::ptrdiff_t>(s) * d;
      genc.bias.values[0] += de;
      for (int t = 0; t < d; ++t) {
        gw[t] += de * c.emb.ego[t];
        gw[d + t] += de * x[t];
        d_ego[t] += de * w[t];
        dx[t] += de * w[d + t];
      }
      gw[2 * d] += de * g.edges[k][s];
    }
  }

  // Node encoders.
  for (int t = 0; t < d; ++t) {
    if (c.ego_pre[t] <= 0.0) d_ego[t] = 0.0;
  }
  affine_backward(p.ego_encoder, g.ego.data(), d_ego.data(), grads.ego_encoder, nullptr);
  for (int k = 0; k < kRelations; ++k) {
    for (int s = 0; s < slots; ++s) {
      if (!g.masks[k][s]) continue;
      double* dx = d_hv[k].data() + static_cast<std::ptrdiff_t>(s) * d;
      const double* pre = c.hv_pre[k].data() + static_cast<std::ptrdiff_t>(s) * d;
      for (int t = 0; t < d; ++t) {
        if (pre[t] <= 0.0) dx[t] = 0.0;
      }
      affine_backward(p.hv_encoders[k], g.row(k, s), dx, grads.hv_encoders[k], nullptr);
    }
  }
}

ActionValues softmax(const ActionValues& q) {
  const double mx = *std::max_element(q.begin(), q.end());
  ActionValues p{};
  double z = 0.0;
  for (std::size_t i = 0; i < q.size(); ++i) {
    p[i] = std::exp(q[i] - mx);
    z += p[i];
  }
  for (double& v : p) v /= z;
  return p;
}

ActionValues softmax_backward(const ActionValues& prob, const ActionValues& dprob) {
  double dot = 0.0;
  for (std::size_t i = 0; i < prob.size(); ++i) dot += prob[i] * dprob[i];
  ActionValues dq{};
  for (std::size_t i = 0; i < prob.size(); ++i) dq[i] = prob[i] * (dprob[i] - dot);
  return dq;
}

double effective_beta(double learned, FusionMode mode) {
  switch (mode) {
    case FusionMode::Learned: return learned;
    case FusionMode::ForceGrl: return 1.0;
    case FusionMode::ForceExpert: return 0.0;
  }
  return learned;
}

FusedOutput fuse(const ActionValues& q_grl, double beta, const ActionValues& p_exp) {
  FusedOutput out;
  out.q_grl = q_grl;
  out.p_grl = softmax(q_grl);
  out.p_exp = p_exp;
  out.beta = beta;
  for (std::size_t i = 0; i < q_grl.size(); ++i) out.q_fin[i] = beta * out.p_grl[i] + (1.0 - beta) * p_exp[i];
  return out;
}

ActionValues expert_logits(const HgnnEmParams& expert, const graph::HeteroGraphState& scaled) {
  ForwardCache c;
  forward(expert, scaled, c);
  return c.q;
}

FusedOutput hgnn_em_forward(const graph::HeteroGraphState& scaled, const HgnnEmParams& policy,
                            const ActionValues& p_exp, FusionMode mode, ForwardCache& cache) {
  forward(policy, scaled, cache);
  const double learned = policy.arch.fusion ? cache.beta : 1.0;
  return fuse(cache.q, effective_beta(learned, mode), p_exp);
}

FusedOutput hgnn_em_forward(const graph::HeteroGraphState& scaled, const HgnnEmParams& policy,
                            const HgnnEmParams& expert, FusionMode mode) {
  ForwardCache cache;
  const ActionValues p_exp = softmax(expert_logits(expert, scaled));
  return hgnn_em_forward(scaled, policy, p_exp, mode, cache);
}

int argmax(const ActionValues& v) {
  int best = 0;
  for (int i = 1; i < static_cast<int>(v.size()); ++i) {
    if (v[i] > v[best]) best = i;
  }
  return best;
}

double cross_entropy(const ActionValues& q, int target, ActionValues* dq) {
  if (target < 0 || target >= sim::kNumActions) throw Error("cross-entropy target out of range");
  const double mx = *std::max_element(q.begin(), q.end());
  double z = 0.0;
  for (double v : q) z += std::exp(v - mx);
  const double log_z = mx + std::log(z);
  if (dq) {
    for (std::size_t i = 0; i < q.size(); ++i) (*dq)[i] = std::exp(q[i] - log_z);
    (*dq)[target] -= 1.0;
  }
  return log_z - q[target];
}

}  // namespace hgrl::nn
