#ifndef ERPF_RISK_FIELD_HPP_
#define ERPF_RISK_FIELD_HPP_

#include <Eigen/Dense>
#include <span>
#include <vector>

#include "erpf/dynamics.hpp"

namespace erpf {

/// Constant-velocity agent. `p0` and `vel` anchor the prediction; the
/// simulation re-anchors them each tick from the executed obstacle state.
struct Obstacle {
  int id = 0;
  Eigen::Vector2d p0 = Eigen::Vector2d::Zero();
  Eigen::Vector2d vel = Eigen::Vector2d::Zero();
  double width = 2.0;  // w_obs, m
};

/// Predicted position `tau` seconds past the anchor.
Eigen::Vector2d propagate(const Obstacle& obs, double tau);

struct RiskFieldParams {
  double alpha = 1.0;     // per-obstacle gain
  double d_safe = 10.0;   // m; field vanishes beyond this
  double epsilon = 0.1;   // m; clamp distance near contact
  double lambda = 2.0;    // evolution amplitude
  int n_history = 10;     // history window N_H, steps
  double gamma = 200.0;   // risk weight in the MPC cost

  void validate() const;  // throws ValidationError on violated invariants
};

/// Ring buffer of the last N_H executed distances for one obstacle.
class HistoryBuffer {
 public:
  explicit HistoryBuffer(int capacity);

  /// Pushes a sample (evicting the oldest when full) and returns the mean.
  double push(double d);
  double mean() const;

  int size() const { return count_; }
  int capacity() const { return static_cast<int>(values_.size()); }
  bool empty() const { return count_ == 0; }

 private:
  std::vector<double> values_;
  int head_ = 0;
  int count_ = 0;
};

/// Obstacle with its history and the per-tick frozen risk scaling. `eta` is
/// recomputed once per control tick and reused across predicted steps;
/// `gain_scale` carries the collision-ellipse weight (1 when disabled).
struct ObstacleTracker {
  Obstacle obstacle;
  HistoryBuffer history;
  double eta = 1.0;
  double gain_scale = 1.0;

  ObstacleTracker(Obstacle obs, int history_capacity)
      : obstacle(std::move(obs)), history(history_capacity) {}
};

/// Euclidean distance between the ego position and a point.
double distance(const VehicleState& s, const Eigen::Vector2d& p);

/// Repulsive field phi(d) = 1/max(d, eps) - 1/d_safe for d < d_safe, else 0.
double rpf_value(double d, const RiskFieldParams& p);

/// d phi / d d on the smooth branch; 0 beyond d_safe and inside the clamp.
double rpf_slope(double d, const RiskFieldParams& p);

/// eta = 1 + lambda * sigmoid((d_bar - d) / d_safe).
double evolution_factor(double d_bar, double d, const RiskFieldParams& p);

/// Non-smooth variant eta = 1 + lambda * [d_bar > d], for A/B comparisons.
double evolution_factor_binary(double d_bar, double d, const RiskFieldParams& p);

/// Sum over obstacles of eta_i * alpha * gain_i * phi(d_i), with obstacle
/// positions propagated `tau` seconds past their anchors.
double erpf_value(const VehicleState& s, std::span<const ObstacleTracker> trackers,
                  double tau, const RiskFieldParams& p);

/// Static field of the same obstacles: sum of alpha * phi(d_i). Ignores eta
/// and gain scaling.
double rpf_total(const VehicleState& s, std::span<const ObstacleTracker> trackers,
                 double tau, const RiskFieldParams& p);

/// Position gradient (d/dx, d/dy, 0) of erpf_value with eta held constant.
/// Zero inside the epsilon clamp and beyond d_safe.
Eigen::Vector3d erpf_gradient(const VehicleState& s,
                              std::span<const ObstacleTracker> trackers,
                              double tau, const RiskFieldParams& p);

}  // namespace erpf

#endif  // ERPF_RISK_FIELD_HPP_
