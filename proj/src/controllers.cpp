#include "erpf/controllers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "erpf/errors.hpp"

namespace erpf {

ControllerKind controller_kind_from_name(const std::string& name) {
  if (name == "erpf") return ControllerKind::kErpf;
  if (name == "erpf_binary") return ControllerKind::kErpfBinary;
  if (name == "rpf") return ControllerKind::kRpf;
  if (name == "plain_mpc" || name == "mpc") return ControllerKind::kPlainMpc;
  if (name == "cbf") return ControllerKind::kCbf;
  throw ValidationError("unknown controller: " + name);
}

std::string controller_name(ControllerKind kind) {
  switch (kind) {
    case ControllerKind::kErpf: return "erpf";
    case ControllerKind::kErpfBinary: return "erpf_binary";
    case ControllerKind::kRpf: return "rpf";
    case ControllerKind::kPlainMpc: return "plain_mpc";
    case ControllerKind::kCbf: return "cbf";
  }
  return "unknown";
}

std::vector<std::string> controller_names() {
  return {"erpf", "rpf", "plain_mpc", "cbf"};
}

MpcController::MpcController(MpcConfig cfg, ReferenceTrajectory reference,
                             std::span<const Obstacle> obstacles)
    : cfg_(std::move(cfg)), reference_(std::move(reference)) {
  trackers_.reserve(obstacles.size());
  for (const auto& obs : obstacles) {
    trackers_.emplace_back(obs, cfg_.field.n_history);
  }
}

ControlDecision MpcController::step(const VehicleState& s, int k,
                                    std::span<const ObstacleKinematics> observed) {
  if (observed.size() != trackers_.size()) {
    throw ValidationError("controller: observation count mismatch");
  }
  for (size_t i = 0; i < trackers_.size(); ++i) {
    trackers_[i].obstacle.p0 = observed[i].pos;
    trackers_[i].obstacle.vel = observed[i].vel;
  }

  const Eigen::VectorXd* warm = has_warm_ ? &warm_ : nullptr;
  MpcStepResult res = mpc_step(s, k, reference_, trackers_, cfg_, warm);
  warm_ = shift_warm_start(res.controls);
  has_warm_ = true;

  ControlDecision decision;
  decision.u = res.u;
  decision.diagnostics = res.diagnostics;
  return decision;
}

CbfController::CbfController(MpcConfig nominal_cfg, CbfParams params,
                             BoxConstraints box, ReferenceTrajectory reference,
                             std::span<const Obstacle> obstacles)
    : nominal_(std::move(nominal_cfg), std::move(reference), obstacles),
      params_(params),
      box_(box) {}

ControlDecision CbfController::step(const VehicleState& s, int k,
                                    std::span<const ObstacleKinematics> observed) {
  ControlDecision decision = nominal_.step(s, k, observed);

  // Barrier condition per obstacle, affine in the lateral command:
  //   dh/dt + kappa*h = alpha_i + beta_i * vy >= 0,
  // with h_i = d_i^2 - d_safe^2 and the ego position rate (v, vy).
  double vy_min = box_.vy_lo;
  double vy_max = box_.vy_hi;
  bool feasible = true;
  for (const auto& obs : observed) {
    const double rx = s.x - obs.pos.x();
    const double ry = s.y - obs.pos.y();
    const double h = rx * rx + ry * ry - params_.d_safe * params_.d_safe;
    const double alpha = 2.0 * rx * (s.v - obs.vel.x()) - 2.0 * ry * obs.vel.y() +
                         params_.kappa * h;
    const double beta = 2.0 * ry;
    if (std::abs(beta) < 1e-9) {
      if (alpha < 0.0) feasible = false;
      continue;
    }
    const double boundary = -alpha / beta;
    if (beta > 0.0) {
      vy_min = std::max(vy_min, boundary);
    } else {
      vy_max = std::min(vy_max, boundary);
    }
  }

  if (feasible && vy_min <= vy_max) {
    decision.u.vy = std::clamp(decision.u.vy, vy_min, vy_max);
    return decision;
  }

  // No admissible lateral correction; brake as hard as the box allows and
  // steer toward the least-violated command.
  decision.cbf_fallback = true;
  decision.u.a = box_.a_lo;
  double best_vy = decision.u.vy;
  double best_margin = -std::numeric_limits<double>::infinity();
  for (double candidate : {box_.vy_lo, box_.vy_hi, decision.u.vy}) {
    double margin = std::numeric_limits<double>::infinity();
    for (const auto& obs : observed) {
      const double rx = s.x - obs.pos.x();
      const double ry = s.y - obs.pos.y();
      const double h = rx * rx + ry * ry - params_.d_safe * params_.d_safe;
      const double value = 2.0 * rx * (s.v - obs.vel.x()) +
                           2.0 * ry * (candidate - obs.vel.y()) + params_.kappa * h;
      margin = std::min(margin, value);
    }
    if (margin > best_margin) {
      best_margin = margin;
      best_vy = candidate;
    }
  }
  decision.u.vy = std::clamp(best_vy, box_.vy_lo, box_.vy_hi);
  return decision;
}

std::unique_ptr<Controller> make_controller(ControllerKind kind,
                                            const ControllerParams& params,
                                            const Scenario& scenario,
                                            const ReferenceTrajectory& reference) {
  MpcConfig cfg = params.mpc;
  switch (kind) {
    case ControllerKind::kErpf:
      cfg.eta_mode = EtaMode::kSigmoid;
      break;
    case ControllerKind::kErpfBinary:
      cfg.eta_mode = EtaMode::kBinary;
      break;
    case ControllerKind::kRpf:
      cfg.eta_mode = EtaMode::kStaticOne;
      cfg.use_ellipse_weight = false;
      break;
    case ControllerKind::kPlainMpc:
      cfg.weights.gamma = 0.0;
      cfg.use_ellipse_weight = false;
      break;
    case ControllerKind::kCbf: {
      MpcConfig nominal = params.mpc;
      nominal.weights.gamma = 0.0;
      nominal.use_ellipse_weight = false;
      CbfParams cbf = params.cbf;
      cbf.d_safe = params.mpc.field.d_safe;
      return std::make_unique<CbfController>(std::move(nominal), cbf, params.mpc.box,
                                             reference, scenario.obstacles);
    }
  }
  return std::make_unique<MpcController>(std::move(cfg), reference, scenario.obstacles);
}

}  // namespace erpf
