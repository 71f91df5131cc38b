#include "erpf/risk_field.hpp"

#include <algorithm>
#include <cmath>

#include "erpf/errors.hpp"
#include "erpf/flops.hpp"

namespace erpf {

namespace {

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

}  // namespace

Eigen::Vector2d propagate(const Obstacle& obs, double tau) {
  return obs.p0 + obs.vel * tau;
}

void RiskFieldParams::validate() const {
  if (!(epsilon > 0.0)) throw ValidationError("risk_field: epsilon must be > 0");
  if (!(d_safe > epsilon)) throw ValidationError("risk_field: d_safe must exceed epsilon");
  if (!(lambda >= 0.0)) throw ValidationError("risk_field: lambda must be >= 0");
  if (gamma < 0.0) throw ValidationError("risk_field: gamma must be >= 0");
  if (n_history < 1) throw ValidationError("risk_field: n_history must be >= 1");
}

HistoryBuffer::HistoryBuffer(int capacity) {
  if (capacity < 1) throw ValidationError("HistoryBuffer: capacity must be >= 1");
  values_.assign(static_cast<size_t>(capacity), 0.0);
}

double HistoryBuffer::push(double d) {
  values_[static_cast<size_t>(head_)] = d;
  head_ = (head_ + 1) % static_cast<int>(values_.size());
  if (count_ < static_cast<int>(values_.size())) ++count_;
  return mean();
}

double HistoryBuffer::mean() const {
  if (count_ == 0) return 0.0;
  double sum = 0.0;
  for (int i = 0; i < count_; ++i) {
    sum += values_[static_cast<size_t>(i)];
  }
  return sum / count_;
}

double distance(const VehicleState& s, const Eigen::Vector2d& p) {
  const double dx = s.x - p.x();
  const double dy = s.y - p.y();
  return std::sqrt(dx * dx + dy * dy);
}

double rpf_value(double d, const RiskFieldParams& p) {
  if (d >= p.d_safe) return 0.0;
  return 1.0 / std::max(d, p.epsilon) - 1.0 / p.d_safe;
}

double rpf_slope(double d, const RiskFieldParams& p) {
  if (d >= p.d_safe || d < p.epsilon) return 0.0;
  return -1.0 / (d * d);
}

double evolution_factor(double d_bar, double d, const RiskFieldParams& p) {
  return 1.0 + p.lambda * sigmoid((d_bar - d) / p.d_safe);
}

double evolution_factor_binary(double d_bar, double d, const RiskFieldParams& p) {
  return 1.0 + (d_bar > d ? p.lambda : 0.0);
}

double erpf_value(const VehicleState& s, std::span<const ObstacleTracker> trackers,
                  double tau, const RiskFieldParams& p) {
  flops::add_stage_eval();
  double total = 0.0;
  for (const auto& tr : trackers) {
    flops::add_interaction();
    const double d = distance(s, propagate(tr.obstacle, tau));
    total += tr.eta * p.alpha * tr.gain_scale * rpf_value(d, p);
  }
  return total;
}

double rpf_total(const VehicleState& s, std::span<const ObstacleTracker> trackers,
                 double tau, const RiskFieldParams& p) {
  double total = 0.0;
  for (const auto& tr : trackers) {
    total += p.alpha * rpf_value(distance(s, propagate(tr.obstacle, tau)), p);
  }
  return total;
}

Eigen::Vector3d erpf_gradient(const VehicleState& s,
                              std::span<const ObstacleTracker> trackers,
                              double tau, const RiskFieldParams& p) {
  flops::add_stage_eval();
  Eigen::Vector3d grad = Eigen::Vector3d::Zero();
  for (const auto& tr : trackers) {
    flops::add_gradient_term();
    const Eigen::Vector2d pos = propagate(tr.obstacle, tau);
    const double d = distance(s, pos);
    const double slope = rpf_slope(d, p);
    if (slope == 0.0) continue;
    const double scale = tr.eta * p.alpha * tr.gain_scale * slope / d;
    grad(0) += scale * (s.x - pos.x());
    grad(1) += scale * (s.y - pos.y());
  }
  return grad;
}

}  // namespace erpf
