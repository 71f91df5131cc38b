#ifndef ERPF_RISK_ELLIPSE_HPP_
#define ERPF_RISK_ELLIPSE_HPP_

#include <Eigen/Dense>
#include <optional>
#include <span>
#include <vector>

#include "erpf/dynamics.hpp"
#include "erpf/risk_field.hpp"

namespace erpf {

struct EllipseParams {
  double a_cap = 50.0;        // semi-major hard cap, m
  double b_cap = 10.0;        // semi-minor hard cap, m
  double a_max_decel = 6.0;   // feasible deceleration, m/s^2
  double t_horizon = 3.0;     // planning-horizon duration N*dt, s
  double d_lat_max = 3.5;     // lateral motion budget (one lane), m
  double alpha_decay = 2.0;   // risk decay rate
  double twh = 0.5;           // hazard window used when building ellipses, s

  void validate() const;
};

/// Axis-aligned collision envelope around an obstacle.
struct RiskEllipse {
  Eigen::Vector2d center = Eigen::Vector2d::Zero();
  double a = 1.0;  // semi-major, longitudinal
  double b = 1.0;  // semi-minor, lateral
};

/// Ellipse-annotation trigger: evolution factors above this mark an obstacle
/// as actively hazardous in logs and exports.
inline constexpr double kEvolutionTriggerThreshold = 2.2;

/// Gap over closing speed; empty when the ego is not closing in on the
/// obstacle (non-positive closing speed or obstacle behind).
std::optional<double> time_to_collision(double x_ego, double x_obs,
                                        double v_ego, double v_obs);

/// Longitudinal reach: min of the TTC extent and the braking envelope,
/// floored at w_obs and capped at a_cap.
double semi_major(double v_ego, double v_obs, double ttc, double w_obs,
                  const EllipseParams& p);

/// Lateral extent: half width combined with the bounded hazard-window spread,
/// capped at b_cap.
double semi_minor(double w_obs, double v_ego, double v_obs, double twh,
                  const EllipseParams& p);

/// Normalized elliptic distance of a point relative to the ellipse center:
/// <1 inside, =1 on the boundary, >1 outside.
double ellipse_risk_factor(const Eigen::Vector2d& rel, const RiskEllipse& e);

/// Exponential risk map: 1 inside the ellipse, exp(-alpha*(ERF-1)) outside.
double risk_metric(double erf, double alpha_decay);

/// Scales both axes multiplicatively (evolution-factor annotation), then
/// re-applies the hard caps.
RiskEllipse inflate(RiskEllipse e, double factor, const EllipseParams& p);

/// Ellipse for an obstacle from the current relative kinematics; empty when
/// the ego is not closing.
std::optional<RiskEllipse> build_ellipse(const VehicleState& ego,
                                         const Obstacle& obs,
                                         const EllipseParams& p);

/// Per-obstacle risk gain multiplier for the planner coupling: the exponential
/// risk metric at the current relative position, or 1 when no ellipse applies.
double ellipse_risk_weight(const VehicleState& ego, const Obstacle& obs,
                           const EllipseParams& p);

struct SweepCell {
  double ttc = 0.0;
  double twh = 0.0;
  double a = 0.0;
  double b = 0.0;
  double aspect_ratio = 0.0;
};

/// Semi-axis table over a TTC x TWH grid at fixed relative speed.
std::vector<SweepCell> aspect_ratio_sweep(std::span<const double> ttc_grid,
                                          std::span<const double> twh_grid,
                                          double v_rel, double w_obs,
                                          const EllipseParams& p);

}  // namespace erpf

#endif  // ERPF_RISK_ELLIPSE_HPP_
