#include "erpf/risk_ellipse.hpp"

#include <algorithm>
#include <cmath>

#include "erpf/errors.hpp"
#include "erpf/flops.hpp"

namespace erpf {

void EllipseParams::validate() const {
  if (!(a_cap > 0.0)) throw ValidationError("risk_ellipse: a_cap must be > 0");
  if (!(b_cap > 0.0)) throw ValidationError("risk_ellipse: b_cap must be > 0");
  if (!(a_max_decel > 0.0)) throw ValidationError("risk_ellipse: a_max_decel must be > 0");
  if (!(t_horizon > 0.0)) throw ValidationError("risk_ellipse: t_horizon must be > 0");
  if (!(d_lat_max > 0.0)) throw ValidationError("risk_ellipse: d_lat_max must be > 0");
  if (!(alpha_decay > 0.0)) throw ValidationError("risk_ellipse: alpha_decay must be > 0");
  if (!(twh >= 0.0)) throw ValidationError("risk_ellipse: twh must be >= 0");
}

std::optional<double> time_to_collision(double x_ego, double x_obs,
                                        double v_ego, double v_obs) {
  const double gap = x_obs - x_ego;
  const double closing = v_ego - v_obs;
  if (gap < 0.0 || closing <= 0.0) return std::nullopt;
  return gap / closing;
}

double semi_major(double v_ego, double v_obs, double ttc, double w_obs,
                  const EllipseParams& p) {
  if (!(ttc >= 0.0) || !std::isfinite(ttc)) {
    throw ValidationError("semi_major: ttc must be finite and >= 0");
  }
  const double v_rel = std::abs(v_ego - v_obs);
  const double reach = (v_ego - v_obs) * ttc;
  const double braking = v_rel * p.t_horizon + 0.5 * p.a_max_decel * p.t_horizon * p.t_horizon;
  double a = std::min(reach, braking);
  a = std::max(a, w_obs);  // an ellipse shorter than the vehicle is meaningless
  return std::min(a, p.a_cap);
}

double semi_minor(double w_obs, double v_ego, double v_obs, double twh,
                  const EllipseParams& p) {
  if (!(w_obs > 0.0)) throw ValidationError("semi_minor: w_obs must be > 0");
  if (!(twh >= 0.0)) throw ValidationError("semi_minor: twh must be >= 0");
  const double half_w = 0.5 * w_obs;
  const double lat = std::min((v_ego - v_obs) * twh, p.d_lat_max);
  const double b = std::sqrt(half_w * half_w + lat * lat);
  return std::min(b, p.b_cap);
}

double ellipse_risk_factor(const Eigen::Vector2d& rel, const RiskEllipse& e) {
  if (!(e.a > 0.0) || !(e.b > 0.0)) {
    throw ValidationError("ellipse_risk_factor: degenerate axis");
  }
  const double xn = rel.x() / e.a;
  const double yn = rel.y() / e.b;
  return std::sqrt(xn * xn + yn * yn);
}

double risk_metric(double erf, double alpha_decay) {
  if (erf <= 1.0) return 1.0;
  return std::exp(-alpha_decay * (erf - 1.0));
}

RiskEllipse inflate(RiskEllipse e, double factor, const EllipseParams& p) {
  e.a = std::min(e.a * factor, p.a_cap);
  e.b = std::min(e.b * factor, p.b_cap);
  return e;
}

std::optional<RiskEllipse> build_ellipse(const VehicleState& ego,
                                         const Obstacle& obs,
                                         const EllipseParams& p) {
  const double v_obs = obs.vel.x();
  const auto ttc = time_to_collision(ego.x, obs.p0.x(), ego.v, v_obs);
  if (!ttc) return std::nullopt;
  RiskEllipse e;
  e.center = obs.p0;
  e.a = semi_major(ego.v, v_obs, *ttc, obs.width, p);
  e.b = semi_minor(obs.width, ego.v, v_obs, p.twh, p);
  return e;
}

double ellipse_risk_weight(const VehicleState& ego, const Obstacle& obs,
                           const EllipseParams& p) {
  const auto e = build_ellipse(ego, obs, p);
  if (!e) return 1.0;
  flops::add_overhead(flops::kEllipseBuildFlops);
  const double erf = ellipse_risk_factor(ego.position() - e->center, *e);
  return risk_metric(erf, p.alpha_decay);
}

std::vector<SweepCell> aspect_ratio_sweep(std::span<const double> ttc_grid,
                                          std::span<const double> twh_grid,
                                          double v_rel, double w_obs,
                                          const EllipseParams& p) {
  if (ttc_grid.empty() || twh_grid.empty()) {
    throw ValidationError("aspect_ratio_sweep: grids must be non-empty");
  }
  std::vector<SweepCell> cells;
  cells.reserve(ttc_grid.size() * twh_grid.size());
  for (double ttc : ttc_grid) {
    for (double twh : twh_grid) {
      SweepCell cell;
      cell.ttc = ttc;
      cell.twh = twh;
      cell.a = semi_major(v_rel, 0.0, ttc, w_obs, p);
      cell.b = semi_minor(w_obs, v_rel, 0.0, twh, p);
      cell.aspect_ratio = cell.a / cell.b;
      cells.push_back(cell);
    }
  }
  return cells;
}

}  // namespace erpf
