#ifndef ERPF_DYNAMICS_HPP_
#define ERPF_DYNAMICS_HPP_

#include <Eigen/Dense>
#include <vector>

namespace erpf {

/// Point-mass ego state: longitudinal position, lateral position, speed.
struct VehicleState {
  double x = 0.0;   // m
  double y = 0.0;   // m
  double v = 0.0;   // m/s

  Eigen::Vector3d vec() const { return {x, y, v}; }
  Eigen::Vector2d position() const { return {x, y}; }
  static VehicleState from_vec(const Eigen::Vector3d& s) { return {s(0), s(1), s(2)}; }
};

/// Longitudinal acceleration + lateral velocity command.
struct ControlInput {
  double a = 0.0;    // m/s^2
  double vy = 0.0;   // m/s

  Eigen::Vector2d vec() const { return {a, vy}; }
  static ControlInput from_vec(const Eigen::Vector2d& u) { return {u(0), u(1)}; }
};

/// Discrete-time linear model s' = A s + B u for a fixed sampling period.
struct LinearModel {
  double dt = 0.1;
  Eigen::Matrix3d A;
  Eigen::Matrix<double, 3, 2> B;

  explicit LinearModel(double dt_s = 0.1);
};

struct ReferencePoint {
  double x = 0.0;
  double y = 0.0;
  double v = 0.0;

  Eigen::Vector3d vec() const { return {x, y, v}; }
};

/// N+1 reference states over a horizon.
struct ReferenceTrajectory {
  std::vector<ReferencePoint> states;

  int horizon() const { return static_cast<int>(states.size()) - 1; }
};

/// Stacked horizon maps: S = calA * s0 + calB * U with
/// S = [s0; ...; sN] ((N+1)*3) and U = [u0; ...; u_{N-1}] (N*2).
struct PredictionMatrices {
  int horizon = 0;
  Eigen::MatrixXd calA;   // (N+1)*3 x 3
  Eigen::MatrixXd calB;   // (N+1)*3 x N*2
};

/// One step of the linear model. Rejects non-finite inputs.
VehicleState step(const VehicleState& s, const ControlInput& u, const LinearModel& m);

/// Speed floor used by the closed-loop update; the model itself stays linear.
VehicleState clamp_speed(VehicleState s);

/// Linear ramp from lane center y1 to y2 over N steps at constant v_ref.
ReferenceTrajectory lane_change_reference(double y1, double y2, double v_ref,
                                          double x0, int n_steps, double dt);

PredictionMatrices build_prediction_matrices(const LinearModel& m, int n_steps);

/// N+1 states starting at s0, iterating `step` through U.
std::vector<VehicleState> rollout(const VehicleState& s0,
                                  const std::vector<ControlInput>& controls,
                                  const LinearModel& m);

}  // namespace erpf

#endif  // ERPF_DYNAMICS_HPP_
