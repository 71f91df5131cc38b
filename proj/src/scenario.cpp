#include "erpf/scenario.hpp"

#include <cmath>

#include "erpf/errors.hpp"

namespace erpf {

int Scenario::steps() const {
  return static_cast<int>(std::lround(duration / dt));
}

void Scenario::validate() const {
  if (!(dt > 0.0) || !(duration > 0.0)) {
    throw ValidationError("scenario: duration and dt must be > 0");
  }
  if (std::abs(steps() * dt - duration) > 1e-9) {
    throw ValidationError("scenario: duration must be an integer number of steps");
  }
  for (const auto& obs : this->obstacles) {
    if (obs.p0.y() < y_min || obs.p0.y() > y_max) {
      throw ValidationError("scenario: obstacle outside the drivable band");
    }
    if (!(obs.width > 0.0)) throw ValidationError("scenario: obstacle width must be > 0");
  }
}

ReferenceTrajectory build_reference(const Scenario& sc, int extra_steps) {
  const int n = sc.steps() + extra_steps;
  ReferenceTrajectory ref;
  ref.states.resize(static_cast<size_t>(n) + 1);
  for (int k = 0; k <= n; ++k) {
    const double t = k * sc.dt;
    double y = sc.ego.y;
    for (const auto& seg : sc.segments) {
      if (t <= seg.t_start) break;
      const double frac = std::min((t - seg.t_start) / seg.duration, 1.0);
      y += frac * (seg.y_to - y);
    }
    ref.states[static_cast<size_t>(k)] = {sc.ego.x + sc.v_ref * sc.dt * k, y, sc.v_ref};
  }
  return ref;
}

Scenario scenario_preset(const std::string& name) {
  Scenario sc;
  sc.name = name;
  if (name == "scenario1") {
    // Lane change behind a slow leader with traffic in the target lane.
    sc.ego = {0.0, 1.75, 30.0};
    sc.obstacles = {
        {1, {50.0, 1.75}, {12.0, 0.0}, 2.0},
        {2, {40.0, 5.25}, {20.0, 0.0}, 2.0},
    };
    sc.kind = ReferenceKind::kLaneChange;
    sc.segments = {{0.5, 3.0, 5.25}};
    sc.v_ref = 30.0;
    sc.target_lane_y = 5.25;
    sc.duration = 12.0;
  } else if (name == "scenario2") {
    // Overtaking bench: two slow leaders in-lane, traffic in the passing lane.
    sc.ego = {0.0, 1.75, 35.0};
    sc.obstacles = {
        {1, {50.0, 1.75}, {15.0, 0.0}, 2.0},
        {2, {80.0, 1.75}, {15.0, 0.0}, 2.0},
        {3, {40.0, 5.25}, {30.0, 0.0}, 2.0},
        {4, {100.0, 5.25}, {15.0, 0.0}, 2.0},
    };
    sc.kind = ReferenceKind::kOvertake;
    sc.segments = {{2.0, 1.6, 5.25}, {4.0, 1.6, 1.75}};
    sc.v_ref = 35.0;
    sc.target_lane_y = 0.0;
    sc.duration = 20.0;
  } else if (name == "highway6") {
    // Three-lane highway, ego mid-lane among five surrounding vehicles.
    sc.ego = {0.0, 5.25, 32.0};
    sc.obstacles = {
        {2, {60.0, 5.25}, {22.0, 0.0}, 2.0},
        {3, {75.0, 1.75}, {20.0, 0.0}, 2.0},
        {4, {-40.0, 5.25}, {20.0, 0.0}, 2.0},
        {5, {25.0, 1.75}, {28.0, 0.0}, 2.0},
        {6, {90.0, 8.75}, {18.0, 0.0}, 2.0},
    };
    sc.lane_centers = {1.75, 5.25, 8.75};
    sc.y_min = 0.875;
    sc.y_max = 9.625;
    sc.kind = ReferenceKind::kLaneKeep;
    sc.segments = {};
    sc.v_ref = 32.0;
    sc.target_lane_y = 0.0;
    sc.duration = 15.0;
  } else {
    throw ValidationError("unknown scenario preset: " + name);
  }
  sc.validate();
  return sc;
}

std::vector<std::string> scenario_preset_names() {
  return {"scenario1", "scenario2", "highway6"};
}

}  // namespace erpf
