#include "hgrl/expert/dataset.hpp"

#include <fstream>
#include <istream>
#include <ostream>

#include <json.hpp>

#include "hgrl/common/atomic_file.hpp"
#include "hgrl/common/error.hpp"
#include "hgrl/common/seeding.hpp"
#include "hgrl/graph/graph_json.hpp"

namespace hgrl::expert {

using nlohmann::json;

namespace {

json header_json(const DatasetHeader& h) {
  return {{"schema", kDatasetSchema},
          {"version", h.version},
          {"slots", h.slots},
          {"scaling", graph::scaling_to_json(h.scaling)},
          {"source", h.source}};
}

void write_record(std::ostream& out, const Demonstration& d) {
  const json j = {{"episode", d.episode_id},
                  {"step", d.step},
                  {"action", sim::to_index(d.action)},
                  {"graph", graph::graph_to_json(d.graph)}};
  out << j.dump() << '\n';
}

}  // namespace

void write_dataset(std::ostream& out, const Dataset& d) {
  out << header_json(d.header).dump() << '\n';
  for (const Demonstration& r : d.records) write_record(out, r);
}

Dataset read_dataset(std::istream& in) {
  Dataset d;
  std::string line;
  if (!std::getline(in, line)) throw Error("dataset is empty");
  try {
    const json h = json::parse(line);
    if (h.at("schema").get<std::string>() != kDatasetSchema) throw Error("not a demonstration dataset");
    d.header.version = h.at("version").get<int>();
    if (d.header.version != kDatasetVersion) {
      throw Error("unsupported dataset version " + std::to_string(d.header.version));
    }
    d.header.slots = h.at("slots").get<int>();
    d.header.scaling = graph::scaling_from_json(h.at("scaling"));
    d.header.source = h.value("source", std::string("scripted"));
    int line_no = 1;
    while (std::getline(in, line)) {
      ++line_no;
      if (line.empty()) continue;
      const json j = json::parse(line);
      Demonstration r;
      r.episode_id = j.at("episode").get<int>();
      r.step = j.at("step").get<int>();
      r.action = sim::action_from_index(j.at("action").get<int>());
      r.graph = graph::graph_from_json(j.at("graph"), d.header.slots);
      d.records.push_back(std::move(r));
    }
  } catch (const json::exception& e) {
    throw Error(std::string("malformed dataset: ") + e.what());
  }
  return d;
}

void save_dataset(const std::filesystem::path& path, const Dataset& d) {
  write_file_atomic(path, [&](std::ostream& out) { write_dataset(out, d); });
}

Dataset load_dataset(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open dataset " + path.string());
  return read_dataset(in);
}

void append_episode(const std::filesystem::path& path, const DatasetHeader& header,
                    const std::vector<Demonstration>& episode) {
  Dataset d;
  if (std::filesystem::exists(path)) {
    d = load_dataset(path);
    if (d.header.slots != header.slots) throw Error("dataset slot count differs from the session");
  } else {
    d.header = header;
  }
  d.records.insert(d.records.end(), episode.begin(), episode.end());
  save_dataset(path, d);
}

bool in_train_split(int episode_id) {
  return splitmix64(static_cast<std::uint64_t>(episode_id)) % 1000 < 700;
}

SplitView split_dataset(const std::vector<Demonstration>& records) {
  SplitView s;
  for (const Demonstration& r : records) (in_train_split(r.episode_id) ? s.train : s.test).push_back(r);
  return s;
}

std::vector<Demonstration> record_episode(sim::World& world, const Driver& driver, int episode_id, int slots) {
  std::vector<Demonstration> out;
  while (!world.finished()) {
    Demonstration d;
    d.graph = graph::build_graph(world, slots);
    d.action = driver(world);
    d.episode_id = episode_id;
    d.step = world.step_count();
    out.push_back(std::move(d));
    world.step(out.back().action);
  }
  return out;
}

Dataset collect_scripted(int n_episodes, std::uint64_t seed, const CollectConfig& cfg) {
  if (n_episodes <= 0) throw Error("episode count must be positive");
  Dataset d;
  d.header.slots = cfg.slots;
  d.header.scaling = cfg.scaling;
  d.header.source = "scripted";
  const Driver driver = [&](const sim::World& w) { return scripted_expert(w, cfg.expert); };
  for (int e = 0; e < n_episodes; ++e) {
    sim::World world = sim::spawn_scenario(episode_seed(seed, static_cast<std::uint64_t>(e)), cfg.scenario);
    auto records = record_episode(world, driver, e, cfg.slots);
    d.records.insert(d.records.end(), std::make_move_iterator(records.begin()),
                     std::make_move_iterator(records.end()));
  }
  return d;
}

}  // namespace hgrl::expert
