#include "erpf/dynamics.hpp"

#include <cmath>
#include <stdexcept>

namespace erpf {

LinearModel::LinearModel(double dt_s) : dt(dt_s) {
  if (!(dt_s > 0.0) || !std::isfinite(dt_s)) {
    throw std::invalid_argument("LinearModel: dt must be finite and > 0");
  }
  A << 1.0, 0.0, dt,
       0.0, 1.0, 0.0,
       0.0, 0.0, 1.0;
  B << 0.0, 0.0,
       0.0, dt,
       dt,  0.0;
}

VehicleState step(const VehicleState& s, const ControlInput& u, const LinearModel& m) {
  if (!std::isfinite(s.x) || !std::isfinite(s.y) || !std::isfinite(s.v) ||
      !std::isfinite(u.a) || !std::isfinite(u.vy)) {
    throw std::invalid_argument("step: non-finite state or input");
  }
  return {s.x + s.v * m.dt, s.y + u.vy * m.dt, s.v + u.a * m.dt};
}

VehicleState clamp_speed(VehicleState s) {
  if (s.v < 0.0) s.v = 0.0;
  return s;
}

ReferenceTrajectory lane_change_reference(double y1, double y2, double v_ref,
                                          double x0, int n_steps, double dt) {
  if (n_steps < 1) {
    throw std::invalid_argument("lane_change_reference: horizon must be >= 1");
  }
  ReferenceTrajectory ref;
  ref.states.resize(static_cast<size_t>(n_steps) + 1);
  for (int k = 0; k <= n_steps; ++k) {
    const double frac = static_cast<double>(k) / static_cast<double>(n_steps);
    ref.states[static_cast<size_t>(k)] = {x0 + v_ref * dt * k,
                                          y1 + frac * (y2 - y1), v_ref};
  }
  return ref;
}

PredictionMatrices build_prediction_matrices(const LinearModel& m, int n_steps) {
  if (n_steps < 1) {
    throw std::invalid_argument("build_prediction_matrices: horizon must be >= 1");
  }
  const int n = n_steps;
  PredictionMatrices pred;
  pred.horizon = n;
  pred.calA.setZero(3 * (n + 1), 3);
  pred.calB.setZero(3 * (n + 1), 2 * n);

  Eigen::Matrix3d a_pow = Eigen::Matrix3d::Identity();
  pred.calA.block<3, 3>(0, 0) = a_pow;
  for (int r = 1; r <= n; ++r) {
    a_pow = m.A * a_pow;
    pred.calA.block<3, 3>(3 * r, 0) = a_pow;
  }
  // Block (r, c) is A^{r-1-c} B for c < r; the first block-row stays zero.
  for (int r = 1; r <= n; ++r) {
    Eigen::Matrix<double, 3, 2> blk = m.B;
    for (int c = r - 1; c >= 0; --c) {
      pred.calB.block<3, 2>(3 * r, 2 * c) = blk;
      blk = m.A * blk;
    }
  }
  return pred;
}

std::vector<VehicleState> rollout(const VehicleState& s0,
                                  const std::vector<ControlInput>& controls,
                                  const LinearModel& m) {
  std::vector<VehicleState> states;
  states.reserve(controls.size() + 1);
  states.push_back(s0);
  for (const auto& u : controls) {
    states.push_back(step(states.back(), u, m));
  }
  return states;
}

}  // namespace erpf
