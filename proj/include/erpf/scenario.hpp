#ifndef ERPF_SCENARIO_HPP_
#define ERPF_SCENARIO_HPP_

#include <string>
#include <vector>

#include "erpf/dynamics.hpp"
#include "erpf/risk_field.hpp"

namespace erpf {

enum class ReferenceKind { kLaneKeep, kLaneChange, kOvertake };

/// One leg of the lateral reference schedule: ramp linearly to `y_to`
/// starting at `t_start` over `duration` seconds, then hold.
struct ReferenceSegment {
  double t_start = 0.0;
  double duration = 1.0;
  double y_to = 0.0;
};

struct Scenario {
  std::string name;
  VehicleState ego;
  std::vector<Obstacle> obstacles;
  std::vector<double> lane_centers{1.75, 5.25};
  double lane_width = 3.5;
  double y_min = 0.875;  // drivable band
  double y_max = 6.125;
  ReferenceKind kind = ReferenceKind::kLaneKeep;
  std::vector<ReferenceSegment> segments;  // empty: hold the initial lane
  double v_ref = 30.0;
  double target_lane_y = 0.0;  // completion metric target; 0 when n/a
  double duration = 12.0;
  double dt = 0.1;

  int steps() const;
  void validate() const;
};

/// Global reference over steps() + extra_steps ticks following the lateral
/// schedule at constant v_ref.
ReferenceTrajectory build_reference(const Scenario& sc, int extra_steps);

/// Named presets: "scenario1" (lane change), "scenario2" (overtaking bench),
/// "highway6" (three-lane six-vehicle).
Scenario scenario_preset(const std::string& name);
std::vector<std::string> scenario_preset_names();

}  // namespace erpf

#endif  // ERPF_SCENARIO_HPP_
