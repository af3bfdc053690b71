#pragma once

#include <iosfwd>
#include <vector>

#include <json.hpp>

#include "hgrl/sim/types.hpp"

namespace hgrl::sim {

/// One line of the trajectory log: one vehicle at one step.
struct TrajectoryRecord {
  int episode = 0;
  int step = 0;
  int id = 0;
  DriverStyle style = DriverStyle::Normal;
  double c_x = 0.0;
  double c_y = 0.0;
  double v_x = 0.0;
  double v_y = 0.0;
  double a_x = 0.0;
  int lane = 0;
};

TrajectoryRecord make_record(int episode, int step, const VehicleState& v);
nlohmann::json to_json(const TrajectoryRecord& r);
TrajectoryRecord trajectory_record_from_json(const nlohmann::json& j);

/// Line-delimited JSON writer; one record per vehicle per call to write().
class TrajectoryWriter {
 public:
  explicit TrajectoryWriter(std::ostream& out) : out_(out) {}
  void write(int episode, int step, const std::vector<VehicleState>& vehicles);

 private:
  std::ostream& out_;
};

std::vector<TrajectoryRecord> read_trajectory(std::istream& in);

}  // namespace hgrl::sim
