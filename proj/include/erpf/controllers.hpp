#ifndef ERPF_CONTROLLERS_HPP_
#define ERPF_CONTROLLERS_HPP_

#include <Eigen/Dense>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "erpf/mpc_solver.hpp"
#include "erpf/scenario.hpp"

namespace erpf {

enum class ControllerKind { kErpf, kErpfBinary, kRpf, kPlainMpc, kCbf };

ControllerKind controller_kind_from_name(const std::string& name);
std::string controller_name(ControllerKind kind);
std::vector<std::string> controller_names();

/// Observed obstacle state at a tick; anchors the per-tick prediction.
struct ObstacleKinematics {
  Eigen::Vector2d pos = Eigen::Vector2d::Zero();
  Eigen::Vector2d vel = Eigen::Vector2d::Zero();
};

struct ControlDecision {
  ControlInput u;
  SolverDiagnostics diagnostics;
  bool cbf_fallback = false;  // safety filter infeasible, max braking applied
};

/// Receding-horizon planner interface shared by all benchmark controllers.
class Controller {
 public:
  virtual ~Controller() = default;
  virtual ControlDecision step(const VehicleState& s, int k,
                               std::span<const ObstacleKinematics> observed) = 0;
  virtual std::span<const ObstacleTracker> trackers() const = 0;
  virtual const RiskFieldParams& field() const = 0;
};

/// Risk-augmented MPC covering the erpf/rpf/plain variants through the
/// eta mode, gamma and ellipse-coupling knobs in MpcConfig.
class MpcController : public Controller {
 public:
  MpcController(MpcConfig cfg, ReferenceTrajectory reference,
                std::span<const Obstacle> obstacles);

  ControlDecision step(const VehicleState& s, int k,
                       std::span<const ObstacleKinematics> observed) override;
  std::span<const ObstacleTracker> trackers() const override { return trackers_; }
  const RiskFieldParams& field() const override { return cfg_.field; }

 private:
  MpcConfig cfg_;
  ReferenceTrajectory reference_;
  std::vector<ObstacleTracker> trackers_;
  Eigen::VectorXd warm_;
  bool has_warm_ = false;
};

struct CbfParams {
  double kappa = 1.0;
  double d_safe = 10.0;  // shared with the risk field by default
};

/// Nominal tracking MPC filtered by a minimally invasive correction that
/// keeps d_i^2 - d_safe^2 decreasing no faster than its barrier rate. When no
/// lateral correction can satisfy every obstacle, falls back to maximum
/// braking.
class CbfController : public Controller {
 public:
  CbfController(MpcConfig nominal_cfg, CbfParams params, BoxConstraints box,
                ReferenceTrajectory reference, std::span<const Obstacle> obstacles);

  ControlDecision step(const VehicleState& s, int k,
                       std::span<const ObstacleKinematics> observed) override;
  std::span<const ObstacleTracker> trackers() const override {
    return nominal_.trackers();
  }
  const RiskFieldParams& field() const override { return nominal_.field(); }

 private:
  MpcController nominal_;
  CbfParams params_;
  BoxConstraints box_;
};

struct ControllerParams {
  MpcConfig mpc;               // base configuration (erpf settings)
  CbfParams cbf;
};

std::unique_ptr<Controller> make_controller(ControllerKind kind,
                                            const ControllerParams& params,
                                            const Scenario& scenario,
                                            const ReferenceTrajectory& reference);

}  // namespace erpf

#endif  // ERPF_CONTROLLERS_HPP_
