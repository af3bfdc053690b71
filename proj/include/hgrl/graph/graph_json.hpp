#pragma once

#include <json.hpp>

#include "hgrl/graph/hetero_graph.hpp"

namespace hgrl::graph {

/// {ego, nodes[3], edges[3], masks[3]}, flat row-major arrays.
nlohmann::json graph_to_json(const HeteroGraphState& g);
HeteroGraphState graph_from_json(const nlohmann::json& j, int slots);

nlohmann::json scaling_to_json(const FeatureScaling& s);
FeatureScaling scaling_from_json(const nlohmann::json& j);

}  // namespace hgrl::graph
