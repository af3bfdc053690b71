#include "hgrl/graph/graph_json.hpp"

#include "hgrl/common/error.hpp"

namespace hgrl::graph {

using nlohmann::json;

json graph_to_json(const HeteroGraphState& g) {
  json nodes = json::array(), edges = json::array(), masks = json::array();
  for (int k = 0; k < kRelations; ++k) {
    nodes.push_back(g.nodes[k]);
    edges.push_back(g.edges[k]);
    masks.push_back(g.masks[k]);
  }
  return {{"ego", g.ego}, {"nodes", std::move(nodes)}, {"edges", std::move(edges)}, {"masks", std::move(masks)}};
}

HeteroGraphState graph_from_json(const json& j, int slots) {
  HeteroGraphState g(slots);
  g.ego = j.at("ego").get<std::array<double, kEgoFeatures>>();
  for (int k = 0; k < kRelations; ++k) {
    g.nodes[k] = j.at("nodes").at(k).get<std::vector<double>>();
    g.edges[k] = j.at("edges").at(k).get<std::vector<double>>();
    g.masks[k] = j.at("masks").at(k).get<std::vector<std::uint8_t>>();
    if (g.nodes[k].size() != static_cast<std::size_t>(slots) * kHvFeatures ||
        g.edges[k].size() != static_cast<std::size_t>(slots) || g.masks[k].size() != static_cast<std::size_t>(slots)) {
      throw Error("graph record does not match the slot count");
    }
  }
  return g;
}

json scaling_to_json(const FeatureScaling& s) {
  return {{"position", s.position}, {"speed", s.speed},       {"accel", s.accel},
          {"ttc", s.ttc},           {"distance", s.distance}, {"accel_diff", s.accel_diff}};
}

FeatureScaling scaling_from_json(const json& j) {
  FeatureScaling s;
  s.position = j.at("position").get<double>();
  s.speed = j.at("speed").get<double>();
  s.accel = j.at("accel").get<double>();
  s.ttc = j.at("ttc").get<double>();
  s.distance = j.at("distance").get<double>();
  s.accel_diff = j.at("accel_diff").get<double>();
  return s;
}

}  // namespace hgrl::graph
