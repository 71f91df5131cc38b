#include "erpf/mpc_solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "erpf/errors.hpp"
#include "erpf/flops.hpp"

namespace erpf {

namespace {

bool symmetric(const Eigen::MatrixXd& m) {
  return (m - m.transpose()).cwiseAbs().maxCoeff() < 1e-12;
}

double min_eigenvalue(const Eigen::MatrixXd& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
  return es.eigenvalues().minCoeff();
}

double hinge(double x) { return x > 0.0 ? x : 0.0; }

}  // namespace

void MPCWeights::validate() const {
  if (!symmetric(Q) || !symmetric(R) || !symmetric(Q_N)) {
    throw ValidationError("mpc: weight matrices must be symmetric");
  }
  if (min_eigenvalue(Q) < -1e-12 || min_eigenvalue(Q_N) < -1e-12) {
    throw ValidationError("mpc: Q and Q_N must be positive semidefinite");
  }
  if (min_eigenvalue(R) <= 0.0) {
    throw ValidationError("mpc: R must be positive definite");
  }
  if (gamma < 0.0) throw ValidationError("mpc: gamma must be >= 0");
}

void BoxConstraints::validate() const {
  if (a_lo > a_hi || vy_lo > vy_hi || y_lo > y_hi) {
    throw ValidationError("mpc: box bounds must satisfy lo <= hi");
  }
  if (!(v_max > 0.0)) throw ValidationError("mpc: v_max must be > 0");
}

Eigen::VectorXd stack_reference(const ReferenceTrajectory& refs) {
  Eigen::VectorXd stacked(3 * refs.states.size());
  for (size_t i = 0; i < refs.states.size(); ++i) {
    stacked.segment<3>(3 * static_cast<Eigen::Index>(i)) = refs.states[i].vec();
  }
  return stacked;
}

QuadraticForm build_quadratic(const PredictionMatrices& pred, const MPCWeights& w,
                              const VehicleState& s0, const ReferenceTrajectory& refs) {
  const int n = pred.horizon;
  if (refs.horizon() != n) {
    throw ValidationError("build_quadratic: reference length must match horizon");
  }

  // Row-block weighting: Q on stages 0..N-1, Q_N on the terminal block.
  Eigen::MatrixXd weighted_b = pred.calB;
  for (int k = 0; k <= n; ++k) {
    const auto& block = (k == n) ? w.Q_N : w.Q;
    weighted_b.middleRows<3>(3 * k) = block * pred.calB.middleRows<3>(3 * k);
  }

  QuadraticForm quad;
  quad.H = 2.0 * (pred.calB.transpose() * weighted_b);
  for (int k = 0; k < n; ++k) {
    quad.H.block<2, 2>(2 * k, 2 * k) += 2.0 * w.R;
  }
  quad.H = 0.5 * (quad.H + quad.H.transpose().eval());

  const Eigen::VectorXd residual = pred.calA * s0.vec() - stack_reference(refs);
  Eigen::VectorXd weighted_residual(residual.size());
  for (int k = 0; k <= n; ++k) {
    const auto& block = (k == n) ? w.Q_N : w.Q;
    weighted_residual.segment<3>(3 * k) = block * residual.segment<3>(3 * k);
  }
  quad.g = 2.0 * pred.calB.transpose() * weighted_residual;
  quad.constant = residual.dot(weighted_residual);
  return quad;
}

double total_cost(const std::vector<ControlInput>& controls, const VehicleState& s0,
                  const ReferenceTrajectory& refs,
                  std::span<const ObstacleTracker> trackers, const MPCWeights& w,
                  const RiskFieldParams& field, const LinearModel& m) {
  const int n = static_cast<int>(controls.size());
  if (refs.horizon() != n) {
    throw ValidationError("total_cost: reference length must match horizon");
  }
  const auto states = rollout(s0, controls, m);
  double cost = 0.0;
  for (int k = 0; k < n; ++k) {
    const Eigen::Vector3d ds = states[static_cast<size_t>(k)].vec() -
                               refs.states[static_cast<size_t>(k)].vec();
    const Eigen::Vector2d u = controls[static_cast<size_t>(k)].vec();
    cost += ds.dot(w.Q * ds) + u.dot(w.R * u);
    cost += w.gamma * erpf_value(states[static_cast<size_t>(k)], trackers, k * m.dt, field);
  }
  const Eigen::Vector3d dn =
      states[static_cast<size_t>(n)].vec() - refs.states[static_cast<size_t>(n)].vec();
  cost += dn.dot(w.Q_N * dn);
  return cost;
}

namespace {

double risk_and_penalty(const MpcProblem& pb, const Eigen::VectorXd& states) {
  const int n = pb.pred.horizon;
  double value = 0.0;
  if (pb.risk.gamma > 0.0 && !pb.risk.trackers.empty()) {
    for (int k = 0; k < n; ++k) {
      const auto s = VehicleState::from_vec(states.segment<3>(3 * k));
      value += pb.risk.gamma * erpf_value(s, pb.risk.trackers, k * pb.risk.dt, pb.risk.field);
    }
  }
  const double wp = pb.config.state_penalty_weight;
  if (wp > 0.0) {
    for (int k = 1; k <= n; ++k) {
      const double y = states(3 * k + 1);
      const double v = states(3 * k + 2);
      const double ey = hinge(y - pb.box.y_hi) + hinge(pb.box.y_lo - y);
      const double ev = hinge(v - pb.box.v_max) + hinge(-v);
      value += wp * (ey * ey + ev * ev);
    }
  }
  return value;
}

Eigen::VectorXd risk_and_penalty_state_gradient(const MpcProblem& pb,
                                                const Eigen::VectorXd& states) {
  const int n = pb.pred.horizon;
  Eigen::VectorXd grad = Eigen::VectorXd::Zero(states.size());
  if (pb.risk.gamma > 0.0 && !pb.risk.trackers.empty()) {
    for (int k = 0; k < n; ++k) {
      const auto s = VehicleState::from_vec(states.segment<3>(3 * k));
      grad.segment<3>(3 * k) +=
          pb.risk.gamma * erpf_gradient(s, pb.risk.trackers, k * pb.risk.dt, pb.risk.field);
    }
  }
  const double wp = pb.config.state_penalty_weight;
  if (wp > 0.0) {
    for (int k = 1; k <= n; ++k) {
      const double y = states(3 * k + 1);
      const double v = states(3 * k + 2);
      grad(3 * k + 1) += 2.0 * wp * (hinge(y - pb.box.y_hi) - hinge(pb.box.y_lo - y));
      grad(3 * k + 2) += 2.0 * wp * (hinge(v - pb.box.v_max) - hinge(-v));
    }
  }
  return grad;
}

}  // namespace

double objective(const MpcProblem& pb, const Eigen::VectorXd& controls) {
  const Eigen::VectorXd states = pb.pred.calA * pb.s0 + pb.pred.calB * controls;
  const double quad = 0.5 * controls.dot(pb.quad.H * controls) +
                      pb.quad.g.dot(controls) + pb.quad.constant;
  return quad + risk_and_penalty(pb, states);
}

Eigen::VectorXd objective_gradient(const MpcProblem& pb, const Eigen::VectorXd& controls) {
  const Eigen::VectorXd states = pb.pred.calA * pb.s0 + pb.pred.calB * controls;
  Eigen::VectorXd grad = pb.quad.H * controls + pb.quad.g;
  grad += pb.pred.calB.transpose() * risk_and_penalty_state_gradient(pb, states);
  return grad;
}

Eigen::VectorXd project_controls(Eigen::VectorXd controls, const BoxConstraints& box) {
  for (Eigen::Index i = 0; i + 1 < controls.size(); i += 2) {
    controls(i) = std::clamp(controls(i), box.a_lo, box.a_hi);
    controls(i + 1) = std::clamp(controls(i + 1), box.vy_lo, box.vy_hi);
  }
  return controls;
}

Solution solve(const MpcProblem& pb, const Eigen::VectorXd& u_init) {
  const Eigen::Index dim = 2 * pb.pred.horizon;
  if (u_init.size() != dim) throw ValidationError("solve: warm start has wrong length");

  Eigen::VectorXd u = project_controls(u_init, pb.box);
  double cost = objective(pb, u);
  if (!std::isfinite(cost)) throw NonFiniteError("solve: initial cost non-finite", 0);
  if (pb.config.cost_trace) pb.config.cost_trace->push_back(cost);

  // Diagonal preconditioner from the fixed quadratic part; box projection
  // stays exact under a diagonal metric.
  Eigen::VectorXd scale = pb.quad.H.diagonal().cwiseMax(1e-8).cwiseInverse();

  Solution sol;
  Eigen::VectorXd prev_u, prev_grad;
  double step = 1.0;
  for (int iter = 0; iter < pb.config.max_iterations; ++iter) {
    const Eigen::VectorXd grad = objective_gradient(pb, u);
    if (!grad.allFinite()) throw NonFiniteError("solve: gradient non-finite", iter);

    const double residual = (u - project_controls(u - grad, pb.box)).norm();
    sol.diagnostics.grad_norm = residual;
    if (residual < pb.config.grad_tolerance) {
      sol.diagnostics.converged = true;
      break;
    }

    // Spectral (Barzilai-Borwein) trial step in the scaled metric; the
    // backtracking below restores the Armijo decrease.
    const Eigen::VectorXd direction = scale.cwiseProduct(grad);
    if (iter > 0) {
      const Eigen::VectorXd du = u - prev_u;
      const Eigen::VectorXd dy = scale.cwiseProduct(grad - prev_grad);
      const double duy = du.dot(dy);
      if (duy > 1e-16) {
        step = std::clamp(du.squaredNorm() / duy, 1e-8, 1e6);
      }
    }
    prev_u = u;
    prev_grad = grad;

    bool accepted = false;
    for (int bt = 0; bt < pb.config.max_backtracks; ++bt) {
      const Eigen::VectorXd trial = project_controls(u - step * direction, pb.box);
      const Eigen::VectorXd dir = trial - u;
      const double trial_cost = objective(pb, trial);
      if (!std::isfinite(trial_cost)) throw NonFiniteError("solve: cost non-finite", iter);
      if (trial_cost <= cost + pb.config.armijo_slope * grad.dot(dir)) {
        u = trial;
        cost = trial_cost;
        accepted = true;
        if (pb.config.cost_trace) pb.config.cost_trace->push_back(cost);
        break;
      }
      step *= pb.config.backtrack_factor;
    }
    ++sol.diagnostics.iterations;
    if (!accepted) break;  // line search stalled at numerical precision
  }

  sol.controls = u;
  sol.diagnostics.final_cost = cost;
  for (Eigen::Index i = 0; i + 1 < u.size(); i += 2) {
    if (u(i) <= pb.box.a_lo || u(i) >= pb.box.a_hi) ++sol.diagnostics.active_bounds;
    if (u(i + 1) <= pb.box.vy_lo || u(i + 1) >= pb.box.vy_hi) ++sol.diagnostics.active_bounds;
  }
  return sol;
}

namespace {

ReferenceTrajectory slice_reference(const ReferenceTrajectory& refs, int start, int n) {
  ReferenceTrajectory slice;
  slice.states.resize(static_cast<size_t>(n) + 1);
  const int last = static_cast<int>(refs.states.size()) - 1;
  for (int k = 0; k <= n; ++k) {
    slice.states[static_cast<size_t>(k)] =
        refs.states[static_cast<size_t>(std::min(start + k, last))];
  }
  return slice;
}

}  // namespace

MpcStepResult mpc_step(const VehicleState& s0, int k, const ReferenceTrajectory& refs,
                       std::vector<ObstacleTracker>& trackers, const MpcConfig& cfg,
                       const Eigen::VectorXd* warm_start) {
  // Per-tick risk freeze: history update, evolution factor, ellipse weight.
  for (auto& tr : trackers) {
    const double d = distance(s0, tr.obstacle.p0);
    const double d_bar = tr.history.push(d);
    flops::add_overhead(static_cast<std::uint64_t>(tr.history.size()) + 1 +
                        flops::kEvolutionFlops);
    switch (cfg.eta_mode) {
      case EtaMode::kSigmoid:
        tr.eta = evolution_factor(d_bar, d, cfg.field);
        break;
      case EtaMode::kBinary:
        tr.eta = evolution_factor_binary(d_bar, d, cfg.field);
        break;
      case EtaMode::kStaticOne:
        tr.eta = 1.0;
        break;
    }
    tr.gain_scale = cfg.use_ellipse_weight
                        ? ellipse_risk_weight(s0, tr.obstacle, cfg.ellipse)
                        : 1.0;
  }

  MpcProblem pb;
  pb.pred = build_prediction_matrices(cfg.model, cfg.horizon);
  const ReferenceTrajectory slice = slice_reference(refs, k, cfg.horizon);
  pb.quad = build_quadratic(pb.pred, cfg.weights, s0, slice);
  pb.s0 = s0.vec();
  pb.risk = {cfg.weights.gamma, trackers, cfg.field, cfg.model.dt};
  pb.box = cfg.box;
  pb.config = cfg.solver;

  const Eigen::VectorXd u0 = warm_start && warm_start->size() == 2 * cfg.horizon
                                 ? *warm_start
                                 : Eigen::VectorXd::Zero(2 * cfg.horizon);
  Solution sol = solve(pb, u0);

  MpcStepResult result;
  result.u = ControlInput::from_vec(sol.controls.head<2>());
  result.controls = std::move(sol.controls);
  result.diagnostics = sol.diagnostics;
  return result;
}

Eigen::VectorXd shift_warm_start(const Eigen::VectorXd& controls) {
  Eigen::VectorXd shifted(controls.size());
  if (controls.size() < 2) return shifted;
  shifted.head(controls.size() - 2) = controls.tail(controls.size() - 2);
  shifted.tail<2>() = controls.tail<2>();
  return shifted;
}

}  // namespace erpf
