#include "hgrl/nn/checkpoint.hpp"

#include <fstream>
#include <map>

#include "hgrl/common/atomic_file.hpp"
#include "hgrl/common/error.hpp"
#include "hgrl/graph/graph_json.hpp"

namespace hgrl::nn {

using nlohmann::json;

json architecture_to_json(const Architecture& a) {
  return {{"embed_dim", a.embed_dim},         {"heads", a.heads},   {"policy_hidden", a.policy_hidden},
          {"fusion_hidden", a.fusion_hidden}, {"slots", a.slots},   {"ego_skip", a.ego_skip},
          {"fusion", a.fusion},               {"leaky_slope", a.leaky_slope}};
}

Architecture architecture_from_json(const json& j) {
  Architecture a;
  a.embed_dim = j.at("embed_dim").get<int>();
  a.heads = j.at("heads").get<int>();
  a.policy_hidden = j.at("policy_hidden").get<int>();
  a.fusion_hidden = j.at("fusion_hidden").get<int>();
  a.slots = j.at("slots").get<int>();
  a.ego_skip = j.at("ego_skip").get<bool>();
  a.fusion = j.at("fusion").get<bool>();
  a.leaky_slope = j.at("leaky_slope").get<double>();
  return a;
}

json params_to_json(const HgnnEmParams& p) {
  json tensors = json::array();
  p.for_each([&](const std::string& name, const Tensor& t) {
    tensors.push_back({{"name", name}, {"shape", t.shape}, {"values", t.values}});
  });
  return {{"architecture", architecture_to_json(p.arch)}, {"tensors", std::move(tensors)}};
}

HgnnEmParams params_from_json(const json& j) {
  HgnnEmParams p = make_zero_params(architecture_from_json(j.at("architecture")));
  std::map<std::string, const json*> by_name;
  for (const json& t : j.at("tensors")) by_name[t.at("name").get<std::string>()] = &t;
  if (by_name.size() != j.at("tensors").size()) throw Error("checkpoint has duplicate tensor names");
  std::size_t used = 0;
  p.for_each([&](const std::string& name, Tensor& t) {
    auto it = by_name.find(name);
    if (it == by_name.end()) throw Error("checkpoint is missing tensor " + name);
    const json& src = *it->second;
    if (src.at("shape").get<std::vector<int>>() != t.shape) throw Error("shape mismatch for tensor " + name);
    auto values = src.at("values").get<std::vector<double>>();
    if (values.size() != t.size()) throw Error("value count mismatch for tensor " + name);
    t.values = std::move(values);
    ++used;
  });
  if (used != by_name.size()) throw Error("checkpoint has unexpected tensors");
  return p;
}

json checkpoint_to_json(const Checkpoint& c) {
  json j = {{"version", kCheckpointVersion},
            {"seed", c.seed},
            {"step", c.step},
            {"scaling", graph::scaling_to_json(c.scaling)},
            {"model", params_to_json(c.params)}};
  if (c.expert) j["expert"] = params_to_json(*c.expert);
  return j;
}

Checkpoint checkpoint_from_json(const json& j) {
  const int version = j.at("version").get<int>();
  if (version != kCheckpointVersion) throw Error("unsupported checkpoint version " + std::to_string(version));
  Checkpoint c;
  c.params = params_from_json(j.at("model"));
  c.scaling = graph::scaling_from_json(j.at("scaling"));
  c.seed = j.at("seed").get<std::uint64_t>();
  c.step = j.at("step").get<long>();
  if (j.contains("expert")) c.expert = params_from_json(j.at("expert"));
  return c;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& c) {
  write_file_atomic(path, checkpoint_to_json(c).dump());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open checkpoint " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw Error("malformed checkpoint " + path.string() + ": " + e.what());
  }
  return checkpoint_from_json(j);
}

}  // namespace hgrl::nn
