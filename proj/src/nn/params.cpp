#include "hgrl/nn/params.hpp"

#include <cmath>
#include <functional>
#include <numeric>

#include "hgrl/common/error.hpp"
#include "hgrl/sim/types.hpp"

namespace hgrl::nn {

Tensor::Tensor(std::vector<int> s, double fill) : shape(std::move(s)) {
  const auto n = std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                                 [](std::size_t a, int b) { return a * static_cast<std::size_t>(b); });
  values.assign(n, fill);
}

namespace {

Dense dense(int in, int out) { return {Tensor({out, in}), Tensor({out})}; }

}  // namespace

HgnnEmParams make_zero_params(const Architecture& a) {
  if (a.embed_dim <= 0 || a.heads <= 0 || a.policy_hidden <= 0 || a.slots <= 0 ||
      (a.fusion && a.fusion_hidden <= 0)) {
    throw Error("architecture sizes must be positive");
  }
  const int d = a.embed_dim;
  HgnnEmParams p;
  p.arch = a;
  p.ego_encoder = dense(graph::kEgoFeatures, d);
  for (int k = 0; k < graph::kRelations; ++k) {
    p.hv_encoders[k] = dense(graph::kHvFeatures, d);
    p.edge_encoders[k] = dense(2 * d + 1, 1);
    p.relations[k].resize(a.heads);
    for (auto& h : p.relations[k]) {
      h.w_node = Tensor({d, d});
      h.w_edge = Tensor({1});
      h.b_edge = Tensor({1});
      h.attention = Tensor({2 * d});
    }
  }
  p.policy_hidden = dense(a.policy_input_dim(), a.policy_hidden);
  p.policy_out = dense(a.policy_hidden, sim::kNumActions);
  if (a.fusion) {
    p.fusion_hidden = dense(a.aggregate_dim(), a.fusion_hidden);
    p.fusion_out = dense(a.fusion_hidden, 1);
  }
  return p;
}

HgnnEmParams make_params(const Architecture& arch, std::mt19937_64& rng) {
  HgnnEmParams p = make_zero_params(arch);
  auto fill = [&](Tensor& t, int fan_in, int fan_out) {
    const double limit = std::sqrt(6.0 / (fan_in + fan_out));
    std::uniform_real_distribution<double> u(-limit, limit);
    for (double& v : t.values) v = u(rng);
  };
  auto fill_dense = [&](Dense& d) { fill(d.weight, d.in(), d.out()); };

  const int dim = arch.embed_dim;
  fill_dense(p.ego_encoder);
  for (int k = 0; k < graph::kRelations; ++k) {
    fill_dense(p.hv_encoders[k]);
    fill_dense(p.edge_encoders[k]);
    for (auto& h : p.relations[k]) {
      fill(h.w_node, dim, dim);
      fill(h.w_edge, 1, 1);
      fill(h.attention, 2 * dim, 1);
    }
  }
  fill_dense(p.policy_hidden);
  fill_dense(p.policy_out);
  if (arch.fusion) {
    fill_dense(p.fusion_hidden);
    fill_dense(p.fusion_out);
  }
  return p;
}

HgnnEmParams HgnnEmParams::zeros_like() const {
  HgnnEmParams z = *this;
  z.set_zero();
  return z;
}

void HgnnEmParams::set_zero() {
  for_each([](const std::string&, Tensor& t) { std::fill(t.values.begin(), t.values.end(), 0.0); });
}

std::size_t HgnnEmParams::parameter_count() const {
  std::size_t n = 0;
  for_each([&](const std::string&, const Tensor& t) { n += t.size(); });
  return n;
}

void HgnnEmParams::add_scaled(const HgnnEmParams& other, double scale) {
  std::vector<const Tensor*> src;
  other.for_each([&](const std::string&, const Tensor& t) { src.push_back(&t); });
  std::size_t i = 0;
  for_each([&](const std::string&, Tensor& t) {
    const Tensor& o = *src.at(i++);
    if (o.size() != t.size()) throw Error("parameter shape mismatch");
    for (std::size_t j = 0; j < t.size(); ++j) t.values[j] += scale * o.values[j];
  });
}

std::vector<double> flatten(const HgnnEmParams& p) {
  std::vector<double> flat;
  flat.reserve(p.parameter_count());
  p.for_each([&](const std::string&, const Tensor& t) { flat.insert(flat.end(), t.values.begin(), t.values.end()); });
  return flat;
}

void unflatten(std::span<const double> flat, HgnnEmParams& p) {
  if (flat.size() != p.parameter_count()) throw Error("flat parameter vector has the wrong length");
  std::size_t offset = 0;
  p.for_each([&](const std::string&, Tensor& t) {
    std::copy_n(flat.begin() + static_cast<std::ptrdiff_t>(offset), t.size(), t.values.begin());
    offset += t.size();
  });
}

}  // namespace hgrl::nn
