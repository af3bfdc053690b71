#include "hgrl/harness/config.hpp"

#include <charconv>
#include <fstream>
#include <ostream>
#include <variant>
#include <vector>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "hgrl/common/error.hpp"

namespace hgrl::harness {

namespace {

using Target = std::variant<int*, long*, std::uint64_t*, double*, bool*, std::string*>;
static_assert(std::is_same_v<std::size_t, std::uint64_t>, "replay_capacity binds through the uint64 alternative");

struct Binding {
  const char* section;
  const char* key;
  Target target;
};

template <class Config>
std::vector<Binding> bindings(Config& c) {
  auto& s = c.scenario;
  auto& n = c.network;
  auto& sc = c.scaling;
  auto& e = c.expert;
  auto& d = c.drl;
  return {
      {"scenario", "aggressive", &s.aggressive},
      {"scenario", "normal", &s.normal},
      {"scenario", "conservative", &s.conservative},
      {"scenario", "seed", &s.seed},
      {"scenario", "leg_length", &s.geometry.leg_length},
      {"scenario", "lanes_per_direction", &s.geometry.lanes_per_direction},
      {"scenario", "lane_width", &s.geometry.lane_width},
      {"scenario", "ego_spawn_min", &s.ego_spawn_min},
      {"scenario", "ego_spawn_max", &s.ego_spawn_max},
      {"scenario", "hv_spawn_min", &s.hv_spawn_min},
      {"scenario", "hv_spawn_max", &s.hv_spawn_max},
      {"scenario", "goal_distance", &s.goal_distance},
      {"scenario", "max_steps", &s.max_steps},
      {"scenario", "dt", &s.dt},
      {"scenario", "v_max", &s.v_max},
      {"scenario", "desired_speed_step", &s.desired_speed_step},
      {"scenario", "conservative_horizon", &s.conservative_horizon},
      {"scenario", "lane_change_buffer", &s.lane_change_buffer},
      {"scenario", "lane_change_speed", &s.lane_change_speed},
      {"scenario", "lane_change_cooldown", &s.lane_change_cooldown},
      {"scenario", "mobil_politeness", &s.mobil.politeness},
      {"scenario", "mobil_accel_threshold", &s.mobil.accel_threshold},
      {"scenario", "mobil_safe_braking", &s.mobil.b_safe},
      {"network", "embed_dim", &n.embed_dim},
      {"network", "heads", &n.heads},
      {"network", "policy_hidden", &n.policy_hidden},
      {"network", "fusion_hidden", &n.fusion_hidden},
      {"network", "slots", &n.slots},
      {"network", "ego_skip", &n.ego_skip},
      {"network", "leaky_slope", &n.leaky_slope},
      {"network", "scale_position", &sc.position},
      {"network", "scale_speed", &sc.speed},
      {"network", "scale_accel", &sc.accel},
      {"network", "scale_ttc", &sc.ttc},
      {"network", "scale_distance", &sc.distance},
      {"network", "scale_accel_diff", &sc.accel_diff},
      {"expert", "collect_episodes", &c.collect_episodes},
      {"expert", "epochs", &e.epochs},
      {"expert", "batch_size", &e.batch_size},
      {"expert", "max_batches_per_epoch", &e.max_batches_per_epoch},
      {"expert", "learning_rate", &e.learning_rate},
      {"expert", "seed", &e.seed},
      {"drl", "episodes", &d.episodes},
      {"drl", "test_episodes", &d.test_episodes},
      {"drl", "random_steps", &d.random_steps},
      {"drl", "explore_steps", &d.explore_steps},
      {"drl", "epsilon_initial", &d.epsilon_initial},
      {"drl", "epsilon_final", &d.epsilon_final},
      {"drl", "replay_capacity", &d.replay_capacity},
      {"drl", "batch_size", &d.batch_size},
      {"drl", "learning_rate", &d.learning_rate},
      {"drl", "update_interval", &d.update_interval},
      {"drl", "target_sync_interval", &d.target_sync_interval},
      {"drl", "gamma", &d.gamma},
      {"drl", "checkpoint_every", &d.checkpoint_every},
      {"drl", "fusion", &d.fusion},
      {"drl", "initial_beta", &d.initial_beta},
      {"drl", "learning_starts", &d.learning_starts},
      {"drl", "eval_seed", &c.eval_seed},
      {"paths", "dataset", &c.paths.dataset},
      {"paths", "expert", &c.paths.expert},
      {"paths", "checkpoints", &c.paths.checkpoints},
      {"paths", "metrics", &c.paths.metrics},
      {"serve", "port", &c.serve.port},
      {"serve", "realtime_factor", &c.serve.realtime_factor},
  };
}

template <class T>
T parse_integer(const std::string& text, const std::string& name) {
  T v{};
  const char* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc{} || ptr != end) throw Error("config key " + name + ": not an integer: '" + text + "'");
  return v;
}

double parse_double(const std::string& text, const std::string& name) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != text.size()) throw Error("config key " + name + ": not a number: '" + text + "'");
  return v;
}

void assign(const Target& target, const std::string& text, const std::string& name) {
  std::visit(
      [&](auto* p) {
        using T = std::remove_pointer_t<decltype(p)>;
        if constexpr (std::is_same_v<T, bool>) {
          if (text == "true" || text == "1") *p = true;
          else if (text == "false" || text == "0") *p = false;
          else throw Error("config key " + name + ": expected true or false, got '" + text + "'");
        } else if constexpr (std::is_same_v<T, double>) {
          *p = parse_double(text, name);
        } else if constexpr (std::is_same_v<T, std::string>) {
          *p = text;
        } else {
          *p = parse_integer<T>(text, name);
        }
      },
      target);
}

std::string render(const Target& target) {
  return std::visit(
      [](auto* p) -> std::string {
        using T = std::remove_pointer_t<decltype(p)>;
        if constexpr (std::is_same_v<T, bool>) {
          return *p ? "true" : "false";
        } else if constexpr (std::is_same_v<T, double>) {
          // Shortest text that parses back to the same value.
          char buf[32];
          const auto res = std::to_chars(buf, buf + sizeof buf, *p);
          return std::string(buf, res.ptr);
        } else if constexpr (std::is_same_v<T, std::string>) {
          return *p;
        } else {
          return std::to_string(*p);
        }
      },
      target);
}

void require(bool ok, const std::string& what) {
  if (!ok) throw Error("invalid config: " + what);
}

}  // namespace

void validate(const RunConfig& c) {
  const auto& s = c.scenario;
  require(s.aggressive >= 0 && s.normal >= 0 && s.conservative >= 0, "vehicle counts must be non-negative");
  require(s.geometry.leg_length > 0.0 && s.geometry.lane_width > 0.0, "geometry lengths must be positive");
  require(s.geometry.lanes_per_direction >= 1, "scenario.lanes_per_direction must be at least 1");
  require(s.ego_spawn_min > 0.0 && s.ego_spawn_min <= s.ego_spawn_max, "ego spawn range must be positive and ordered");
  require(s.hv_spawn_min > 0.0 && s.hv_spawn_min <= s.hv_spawn_max, "hv spawn range must be positive and ordered");
  require(s.ego_spawn_max < s.geometry.leg_length && s.hv_spawn_max < s.geometry.leg_length,
          "spawn distances must fit on a leg");
  require(s.max_steps > 0, "scenario.max_steps must be positive");
  require(s.dt > 0.0, "scenario.dt must be positive");
  require(s.v_max > 0.0, "scenario.v_max must be positive");
  require(s.lane_change_speed > 0.0, "scenario.lane_change_speed must be positive");

  const auto& n = c.network;
  require(n.embed_dim > 0 && n.heads > 0 && n.policy_hidden > 0 && n.fusion_hidden > 0 && n.slots > 0,
          "network sizes must be positive");
  const auto& sc = c.scaling;
  require(sc.position > 0.0 && sc.speed > 0.0 && sc.accel > 0.0 && sc.ttc > 0.0 && sc.distance > 0.0 &&
              sc.accel_diff > 0.0,
          "scaling constants must be positive");

  require(c.collect_episodes > 0, "expert.collect_episodes must be positive");
  const auto& e = c.expert;
  require(e.epochs > 0 && e.batch_size > 0 && e.max_batches_per_epoch > 0, "expert epochs and batch sizes must be positive");
  require(e.learning_rate > 0.0, "expert.learning_rate must be positive");

  const auto& d = c.drl;
  require(d.episodes > 0 && d.test_episodes > 0, "drl episode counts must be positive");
  require(d.random_steps >= 0 && d.explore_steps > 0 && d.learning_starts >= 0, "drl step counts out of range");
  require(d.epsilon_initial > 0.0 && d.epsilon_initial <= 1.0, "drl.epsilon_initial must lie in (0, 1]");
  require(d.epsilon_final > 0.0 && d.epsilon_final <= d.epsilon_initial, "drl.epsilon_final must lie in (0, epsilon_initial]");
  require(d.replay_capacity > 0 && d.batch_size > 0, "drl replay capacity and batch size must be positive");
  require(d.learning_rate > 0.0, "drl.learning_rate must be positive");
  require(d.update_interval > 0 && d.target_sync_interval > 0, "drl update intervals must be positive");
  require(d.gamma > 0.0 && d.gamma <= 1.0, "drl.gamma must lie in (0, 1]");
  require(d.checkpoint_every > 0, "drl.checkpoint_every must be positive");
  require(d.initial_beta > 0.0 && d.initial_beta < 1.0, "drl.initial_beta must lie in (0, 1)");

  require(c.serve.port > 0 && c.serve.port < 65536, "serve.port out of range");
  require(c.serve.realtime_factor > 0.0, "serve.realtime_factor must be positive");
}

RunConfig parse_config(std::istream& in) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw Error(std::string("config syntax error: ") + e.what());
  }
  RunConfig cfg;
  const auto table = bindings(cfg);
  for (const auto& [section, body] : tree) {
    if (body.empty() && !body.data().empty()) throw Error("config key " + section + " must live in a section");
    for (const auto& [key, value] : body) {
      const std::string name = section + "." + key;
      const Binding* b = nullptr;
      for (const Binding& cand : table) {
        if (section == cand.section && key == cand.key) b = &cand;
      }
      if (!b) throw Error("unknown config key " + name);
      assign(b->target, value.data(), name);
    }
  }
  validate(cfg);
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open config " + path.string());
  return parse_config(in);
}

void write_config(std::ostream& out, const RunConfig& cfg) {
  RunConfig copy = cfg;
  std::string current;
  for (const Binding& b : bindings(copy)) {
    if (current != b.section) {
      if (!current.empty()) out << '\n';
      current = b.section;
      out << '[' << current << "]\n";
    }
    out << b.key << " = " << render(b.target) << '\n';
  }
}

}  // namespace hgrl::harness
