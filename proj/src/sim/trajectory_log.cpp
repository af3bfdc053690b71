#include "hgrl/sim/trajectory_log.hpp"

#include <istream>
#include <ostream>
#include <string>

#include "hgrl/common/error.hpp"

namespace hgrl::sim {

nlohmann::json to_json(const TrajectoryRecord& r) {
  return {{"episode", r.episode}, {"step", r.step}, {"id", r.id},   {"style", style_name(r.style)},
          {"c_x", r.c_x},         {"c_y", r.c_y},   {"v_x", r.v_x}, {"v_y", r.v_y},
          {"a_x", r.a_x},         {"lane", r.lane}};
}

TrajectoryRecord trajectory_record_from_json(const nlohmann::json& j) {
  TrajectoryRecord r;
  try {
    r.episode = j.at("episode").get<int>();
    r.step = j.at("step").get<int>();
    r.id = j.at("id").get<int>();
    r.style = parse_style(j.at("style").get<std::string>());
    r.c_x = j.at("c_x").get<double>();
    r.c_y = j.at("c_y").get<double>();
    r.v_x = j.at("v_x").get<double>();
    r.v_y = j.at("v_y").get<double>();
    r.a_x = j.at("a_x").get<double>();
    r.lane = j.at("lane").get<int>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("malformed trajectory record: ") + e.what());
  }
  return r;
}

TrajectoryRecord make_record(int episode, int step, const VehicleState& v) {
  return {episode, step, v.id, v.style, v.c_x, v.c_y, v.v_x, v.v_y, v.a_x, v.route.lane};
}

void TrajectoryWriter::write(int episode, int step, const std::vector<VehicleState>& vehicles) {
  for (const VehicleState& v : vehicles) out_ << to_json(make_record(episode, step, v)).dump() << '\n';
}

std::vector<TrajectoryRecord> read_trajectory(std::istream& in) {
  std::vector<TrajectoryRecord> records;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error&) {
      throw Error("trajectory log line " + std::to_string(line_no) + " is not valid JSON");
    }
    records.push_back(trajectory_record_from_json(j));
  }
  return records;
}

}  // namespace hgrl::sim
