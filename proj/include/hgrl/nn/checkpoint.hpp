#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>

#include <json.hpp>

#include "hgrl/nn/params.hpp"

namespace hgrl::nn {

inline constexpr int kCheckpointVersion = 1;

struct Checkpoint {
  HgnnEmParams params;
  /// Input scaling the parameters were trained with.
  graph::FeatureScaling scaling;
  std::uint64_t seed = 0;
  long step = 0;
  /// Frozen expert shipped alongside a policy so evaluation is self-contained.
  std::optional<HgnnEmParams> expert;
};

nlohmann::json architecture_to_json(const Architecture& a);
Architecture architecture_from_json(const nlohmann::json& j);

nlohmann::json params_to_json(const HgnnEmParams& p);
HgnnEmParams params_from_json(const nlohmann::json& j);

nlohmann::json checkpoint_to_json(const Checkpoint& c);
Checkpoint checkpoint_from_json(const nlohmann::json& j);

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& c);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace hgrl::nn
