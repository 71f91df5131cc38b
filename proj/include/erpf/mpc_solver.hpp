#ifndef ERPF_MPC_SOLVER_HPP_
#define ERPF_MPC_SOLVER_HPP_

#include <Eigen/Dense>
#include <span>
#include <vector>

#include "erpf/dynamics.hpp"
#include "erpf/risk_ellipse.hpp"
#include "erpf/risk_field.hpp"

namespace erpf {

struct MPCWeights {
  // Longitudinal position is untracked (q_x = 0): speed tracking handles
  // progress, so a blocked ego cannot build up an unbounded position-error
  // pull toward the obstacle ahead.
  Eigen::Matrix3d Q = Eigen::Vector3d(0.0, 10.0, 1.0).asDiagonal();
  Eigen::Matrix2d R = Eigen::Matrix2d::Identity();
  Eigen::Matrix3d Q_N = 10.0 * Eigen::Matrix3d(Eigen::Vector3d(0.0, 10.0, 1.0).asDiagonal());
  double gamma = 200.0;

  void validate() const;
};

/// Axis-aligned input box plus the state band enforced by penalty.
struct BoxConstraints {
  double a_lo = -6.0, a_hi = 3.0;     // m/s^2
  double vy_lo = -3.5, vy_hi = 3.5;   // m/s
  double v_max = 50.0;                // m/s, with v >= 0
  double y_lo = 0.875, y_hi = 6.125;  // m

  void validate() const;
};

/// Tracking + input cost in the stacked controls: 1/2 U'HU + g'U + constant.
struct QuadraticForm {
  Eigen::MatrixXd H;
  Eigen::VectorXd g;
  double constant = 0.0;
};

struct SolverConfig {
  int max_iterations = 200;
  double grad_tolerance = 1e-4;         // projected-gradient residual
  double armijo_slope = 1e-4;
  double backtrack_factor = 0.5;
  int max_backtracks = 60;
  double state_penalty_weight = 50.0;   // quadratic hinge on the y/v band
  std::vector<double>* cost_trace = nullptr;  // accepted objective values
};

struct SolverDiagnostics {
  int iterations = 0;
  double final_cost = 0.0;    // full objective at the returned iterate
  double grad_norm = 0.0;     // projected-gradient residual at exit
  int active_bounds = 0;      // control components pinned at their box limit
  bool converged = false;
};

/// Frozen-per-tick risk term evaluated along the horizon; stage k uses the
/// obstacle anchors propagated by k*dt.
struct RiskTerm {
  double gamma = 0.0;
  std::span<const ObstacleTracker> trackers{};
  RiskFieldParams field{};
  double dt = 0.1;
};

struct MpcProblem {
  PredictionMatrices pred;
  QuadraticForm quad;
  Eigen::Vector3d s0 = Eigen::Vector3d::Zero();
  RiskTerm risk;
  BoxConstraints box;
  SolverConfig config;
};

struct Solution {
  Eigen::VectorXd controls;  // stacked 2N
  SolverDiagnostics diagnostics;
};

Eigen::VectorXd stack_reference(const ReferenceTrajectory& refs);

/// H = 2(B'QB + R), g = 2 B'Q (A s0 - S_ref); the constant completes the
/// expanded tracking cost.
QuadraticForm build_quadratic(const PredictionMatrices& pred, const MPCWeights& w,
                              const VehicleState& s0, const ReferenceTrajectory& refs);

/// Stage-summed cost: tracking + input + gamma * risk, terminal weighted Q_N.
double total_cost(const std::vector<ControlInput>& controls, const VehicleState& s0,
                  const ReferenceTrajectory& refs,
                  std::span<const ObstacleTracker> trackers, const MPCWeights& w,
                  const RiskFieldParams& field, const LinearModel& m);

/// Full solver objective (tracking quadratic + risk + state-band penalty).
double objective(const MpcProblem& problem, const Eigen::VectorXd& controls);
Eigen::VectorXd objective_gradient(const MpcProblem& problem,
                                   const Eigen::VectorXd& controls);

Eigen::VectorXd project_controls(Eigen::VectorXd controls, const BoxConstraints& box);

/// Projected gradient descent with Armijo backtracking over the input box.
/// Throws NonFiniteError when the objective or gradient leaves the finite
/// range.
Solution solve(const MpcProblem& problem, const Eigen::VectorXd& u_init);

enum class EtaMode { kSigmoid, kBinary, kStaticOne };

struct MpcConfig {
  LinearModel model{0.1};
  int horizon = 30;
  MPCWeights weights;
  BoxConstraints box;
  RiskFieldParams field;
  EllipseParams ellipse;
  bool use_ellipse_weight = false;
  EtaMode eta_mode = EtaMode::kSigmoid;
  SolverConfig solver;
};

struct MpcStepResult {
  ControlInput u;
  Eigen::VectorXd controls;  // stacked horizon solution, for warm starting
  SolverDiagnostics diagnostics;
};

/// One receding-horizon tick: updates histories with the current distances,
/// freezes the per-obstacle evolution factors (and ellipse weights when
/// enabled), solves the horizon problem from the reference slice starting at
/// step k, and returns the first input. Obstacle anchors in `trackers` must
/// hold the positions and velocities observed at this tick.
MpcStepResult mpc_step(const VehicleState& s0, int k, const ReferenceTrajectory& refs,
                       std::vector<ObstacleTracker>& trackers, const MpcConfig& cfg,
                       const Eigen::VectorXd* warm_start = nullptr);

/// Shifts a horizon solution one step, repeating the last input.
Eigen::VectorXd shift_warm_start(const Eigen::VectorXd& controls);

}  // namespace erpf

#endif  // ERPF_MPC_SOLVER_HPP_
