// Acceptance suite: one line per criterion, exit nonzero on any failure.
//
// Run directly or through ctest:
//   ./build/tests/acceptance

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "erpf/cli_io.hpp"
#include "erpf/sim.hpp"

using namespace erpf;

namespace {

int failures = 0;

void report(int id, const char* name, bool pass, const std::string& detail) {
  std::printf("[%s] criterion %d: %-34s %s\n", pass ? "PASS" : "FAIL", id, name,
              detail.c_str());
  if (!pass) ++failures;
}

std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), {});
}

// 1. Scenario-1 lane change: zero collision events at 2.0 m, minimum distance
//    reported, wall time under 10 s.
void criterion_1() {
  const auto sc = scenario_preset("scenario1");
  SimParams params;
  const auto t0 = std::chrono::steady_clock::now();
  const auto log = run_scenario(sc, ControllerKind::kErpf, 0, params);
  const double elapsed =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const auto metrics = compute_metrics(log, 2.0, sc.target_lane_y);

  const bool pass = !log.truncated && metrics.collision_count == 0 &&
                    metrics.min_distance >= 2.0 && elapsed < 10.0 &&
                    metrics.lane_change_completion >= 0.0;
  char buf[160];
  std::snprintf(buf, sizeof(buf),
                "events=%d min_distance=%.3fm (soft target 2.3±0.5) "
                "completion=%.1fs runtime=%.2fs",
                metrics.collision_count, metrics.min_distance,
                metrics.lane_change_completion, elapsed);
  report(1, "scenario-1 lane change", pass, buf);
}

// 2. Scenario-2 Monte Carlo: 20 seeded runs per controller under bounded
//    acceleration noise; erpf collision-free in every run; collision-mean
//    ordering erpf=0 <= cbf < rpf <= plain; erpf mean speed within 10% of
//    35 m/s and strictly above cbf.
void criterion_2() {
  const auto sc = scenario_preset("scenario2");
  SimParams params;
  params.noise.enabled = true;
  const std::vector<ControllerKind> kinds = {
      ControllerKind::kErpf, ControllerKind::kCbf, ControllerKind::kRpf,
      ControllerKind::kPlainMpc};
  const auto entries = monte_carlo(sc, kinds, 20, 0, params);

  const auto& erpf = entries[0];
  const auto& cbf = entries[1];
  const auto& rpf = entries[2];
  const auto& plain = entries[3];

  const bool all_valid = erpf.invalid_runs == 0 && cbf.invalid_runs == 0 &&
                         rpf.invalid_runs == 0 && plain.invalid_runs == 0;
  const bool erpf_safe = erpf.max_collisions == 0;
  const bool ordering = erpf.mean_collisions <= cbf.mean_collisions &&
                        cbf.mean_collisions < rpf.mean_collisions &&
                        rpf.mean_collisions <= plain.mean_collisions;
  const bool speed = std::abs(erpf.mean_speed - 35.0) <= 3.5 &&
                     erpf.mean_speed > cbf.mean_speed;

  char buf[200];
  std::snprintf(buf, sizeof(buf),
                "collisions erpf=%.2f cbf=%.2f rpf=%.2f plain=%.2f | "
                "speed erpf=%.2f cbf=%.2f | erpf min_d=%.2fm",
                erpf.mean_collisions, cbf.mean_collisions, rpf.mean_collisions,
                plain.mean_collisions, erpf.mean_speed, cbf.mean_speed,
                erpf.min_distance);
  report(2, "scenario-2 Monte Carlo suite", all_valid && erpf_safe && ordering && speed,
         buf);
}

// 3. Six-vehicle highway: collision-free with clearance >= 2.0 m.
void criterion_3() {
  const auto sc = scenario_preset("highway6");
  SimParams params;
  const auto log = run_scenario(sc, ControllerKind::kErpf, 0, params);
  const auto metrics = compute_metrics(log, 2.0, sc.target_lane_y);
  const bool pass =
      !log.truncated && metrics.collision_count == 0 && metrics.min_distance >= 2.0;
  char buf[120];
  std::snprintf(buf, sizeof(buf), "events=%d min_clearance=%.3fm (paper reports 4.3m)",
                metrics.collision_count, metrics.min_distance);
  report(3, "six-vehicle highway", pass, buf);
}

// 4. Ellipse sweep: the (TTC=4, TWH=0.2) cell at v_rel=10, w_obs=2 exceeds
//    aspect ratio 5; caps and row/column monotonicity hold on the full grid.
void criterion_4() {
  EllipseParams p;
  std::vector<double> ttc_grid, twh_grid;
  for (int i = 1; i <= 25; ++i) ttc_grid.push_back(0.2 * i);
  for (int i = 1; i <= 25; ++i) twh_grid.push_back(0.08 * i);
  const auto cells = aspect_ratio_sweep(ttc_grid, twh_grid, 10.0, 2.0, p);

  bool caps = true;
  for (const auto& c : cells) {
    caps = caps && c.a <= p.a_cap + 1e-12 && c.b <= p.b_cap + 1e-12;
  }
  bool monotone = true;
  const size_t nt = twh_grid.size();
  for (size_t i = 0; i < ttc_grid.size(); ++i) {
    for (size_t j = 0; j < nt; ++j) {
      if (i > 0 && cells[i * nt + j].a < cells[(i - 1) * nt + j].a - 1e-12) monotone = false;
      if (j > 0 && cells[i * nt + j].b < cells[i * nt + j - 1].b - 1e-12) monotone = false;
    }
  }
  double target_ratio = 0.0;
  for (const auto& c : cells) {
    if (std::abs(c.ttc - 4.0) < 1e-9 && std::abs(c.twh - 0.16) < 1e-9) {
      // nearest grid cell below 0.2; evaluate the exact paper cell directly
    }
  }
  const auto exact = aspect_ratio_sweep(std::vector<double>{4.0},
                                        std::vector<double>{0.2}, 10.0, 2.0, p);
  target_ratio = exact[0].aspect_ratio;

  const bool pass = caps && monotone && target_ratio > 5.0;
  char buf[120];
  std::snprintf(buf, sizeof(buf), "a/b(TTC=4,TWH=0.2)=%.2f caps=%s monotone=%s",
                target_ratio, caps ? "ok" : "violated", monotone ? "ok" : "violated");
  report(4, "ellipse aspect-ratio sweep", pass, buf);
}

// 5. Numerical property suite.
void criterion_5() {
  const LinearModel m(0.1);
  bool ok_grad = true, ok_stack = true, ok_qp = true, ok_grid = true, ok_lambda = true;
  std::string detail;

  // (a) analytic gradients vs central differences, away from kinks
  {
    RiskFieldParams field;
    std::vector<ObstacleTracker> trackers;
    trackers.emplace_back(Obstacle{1, {9.0, 2.5}, {18.0, 0.0}, 2.0}, field.n_history);
    trackers[0].eta = 1.8;
    trackers.emplace_back(Obstacle{2, {-4.0, -1.0}, {0.0, 0.0}, 2.0}, field.n_history);
    trackers[1].eta = 1.3;

    std::mt19937 rng(101);
    std::uniform_real_distribution<double> dist(-8.0, 8.0);
    const double h = 1e-5;
    int checked = 0;
    for (int i = 0; i < 500 && checked < 60; ++i) {
      const VehicleState s{dist(rng), dist(rng), 15.0};
      bool kink = false;
      for (const auto& tr : trackers) {
        const double d = distance(s, tr.obstacle.p0);
        if (std::abs(d - field.d_safe) < 5e-2 || d < field.epsilon + 5e-2) kink = true;
      }
      if (kink) continue;
      const auto g = erpf_gradient(s, trackers, 0.0, field);
      const double fx = (erpf_value({s.x + h, s.y, s.v}, trackers, 0.0, field) -
                         erpf_value({s.x - h, s.y, s.v}, trackers, 0.0, field)) /
                        (2 * h);
      const double fy = (erpf_value({s.x, s.y + h, s.v}, trackers, 0.0, field) -
                         erpf_value({s.x, s.y - h, s.v}, trackers, 0.0, field)) /
                        (2 * h);
      const double scale = std::max(1.0, std::abs(fx) + std::abs(fy));
      if (std::abs(g(0) - fx) / scale > 1e-5 || std::abs(g(1) - fy) / scale > 1e-5) {
        ok_grad = false;
      }
      ++checked;
    }

    // full objective gradient
    const int n = 6;
    const auto pred = build_prediction_matrices(m, n);
    MPCWeights w;
    const VehicleState s0{0.0, 1.75, 25.0};
    const auto refs = lane_change_reference(1.75, 5.25, 28.0, 0.0, n, m.dt);
    MpcProblem pb;
    pb.pred = pred;
    pb.quad = build_quadratic(pred, w, s0, refs);
    pb.s0 = s0.vec();
    pb.risk = {w.gamma, trackers, field, m.dt};
    pb.box.y_lo = -1e6;
    pb.box.y_hi = 1e6;
    pb.box.v_max = 1e6;

    std::uniform_real_distribution<double> du(-1.5, 1.5);
    int full_checked = 0;
    for (int trial = 0; trial < 200 && full_checked < 20; ++trial) {
      Eigen::VectorXd u(2 * n);
      for (int i = 0; i < u.size(); ++i) u(i) = du(rng);
      const Eigen::VectorXd states = pb.pred.calA * pb.s0 + pb.pred.calB * u;
      bool kink = false;
      for (int k = 0; k < n; ++k) {
        const auto sk = VehicleState::from_vec(states.segment<3>(3 * k));
        for (const auto& tr : trackers) {
          const double d = distance(sk, propagate(tr.obstacle, k * m.dt));
          if (std::abs(d - field.d_safe) < 5e-2 || d < field.epsilon + 5e-2) kink = true;
        }
      }
      if (kink) continue;
      const Eigen::VectorXd g = objective_gradient(pb, u);
      const double hh = 1e-6;
      for (int i = 0; i < u.size(); i += 5) {
        Eigen::VectorXd up = u, dn = u;
        up(i) += hh;
        dn(i) -= hh;
        const double fd = (objective(pb, up) - objective(pb, dn)) / (2 * hh);
        const double scale = std::max(1.0, std::abs(fd));
        if (std::abs(g(i) - fd) / scale > 1e-5) ok_grad = false;
      }
      ++full_checked;
    }
  }

  // (b) stacked vs iterated rollout
  {
    const int n = 15;
    const auto pred = build_prediction_matrices(m, n);
    std::mt19937 rng(7);
    std::uniform_real_distribution<double> dist(-1e3, 1e3);
    for (int trial = 0; trial < 100; ++trial) {
      const VehicleState s0{dist(rng), dist(rng), dist(rng)};
      std::vector<ControlInput> controls(n);
      Eigen::VectorXd stacked_u(2 * n);
      for (int k = 0; k < n; ++k) {
        controls[static_cast<size_t>(k)] = {dist(rng), dist(rng)};
        stacked_u.segment<2>(2 * k) = controls[static_cast<size_t>(k)].vec();
      }
      const Eigen::VectorXd stacked = pred.calA * s0.vec() + pred.calB * stacked_u;
      const auto states = rollout(s0, controls, m);
      for (int k = 0; k <= n; ++k) {
        const double err = (states[static_cast<size_t>(k)].vec() -
                            stacked.segment<3>(3 * k))
                               .cwiseAbs()
                               .maxCoeff();
        if (err > 1e-9) ok_stack = false;
      }
    }
  }

  // (c) gamma=0 vs closed-form quadratic minimizer
  {
    const int n = 8;
    const auto pred = build_prediction_matrices(m, n);
    const MPCWeights w;
    const VehicleState s0{0.0, 3.0, 28.0};
    const auto refs = lane_change_reference(1.75, 5.25, 30.0, 0.0, n, m.dt);
    MpcProblem pb;
    pb.pred = pred;
    pb.quad = build_quadratic(pred, w, s0, refs);
    pb.s0 = s0.vec();
    pb.box.a_lo = -1e3;
    pb.box.a_hi = 1e3;
    pb.box.vy_lo = -1e3;
    pb.box.vy_hi = 1e3;
    pb.box.y_lo = -1e6;
    pb.box.y_hi = 1e6;
    pb.box.v_max = 1e6;
    pb.config.max_iterations = 20000;
    pb.config.grad_tolerance = 1e-10;
    pb.config.state_penalty_weight = 0.0;
    const auto sol = solve(pb, Eigen::VectorXd::Zero(2 * n));
    const Eigen::VectorXd closed = -pb.quad.H.ldlt().solve(pb.quad.g);
    if ((sol.controls - closed).norm() / closed.norm() > 1e-6) ok_qp = false;
  }

  // (d) N=2 grid oracle (0.05 resolution) never beats the solver by > 1e-3
  {
    const int n = 2;
    const auto pred = build_prediction_matrices(m, n);
    MPCWeights w;
    w.gamma = 50.0;
    RiskFieldParams field;
    const VehicleState s0{0.0, 0.0, 10.0};
    const auto refs = lane_change_reference(0.0, 0.0, 10.0, 0.0, n, m.dt);
    std::vector<ObstacleTracker> trackers;
    trackers.emplace_back(Obstacle{1, {4.5, 0.5}, {8.0, 0.0}, 2.0}, field.n_history);
    trackers[0].eta = 1.6;

    auto cost = [&](double a0, double vy0, double a1, double vy1) {
      const std::vector<ControlInput> u{{a0, vy0}, {a1, vy1}};
      const auto states = rollout(s0, u, m);
      double c = 0.0;
      for (int k = 0; k < n; ++k) {
        const Eigen::Vector3d ds = states[static_cast<size_t>(k)].vec() -
                                   refs.states[static_cast<size_t>(k)].vec();
        const Eigen::Vector2d uv = u[static_cast<size_t>(k)].vec();
        c += ds.dot(w.Q * ds) + uv.dot(w.R * uv);
        c += w.gamma *
             erpf_value(states[static_cast<size_t>(k)], trackers, k * m.dt, field);
      }
      const Eigen::Vector3d dn = states[2].vec() - refs.states[2].vec();
      return c + dn.dot(w.Q_N * dn);
    };

    double best = std::numeric_limits<double>::infinity();
    for (int i0 = 0; i0 <= 40; ++i0)
      for (int j0 = 0; j0 <= 40; ++j0)
        for (int i1 = 0; i1 <= 40; ++i1)
          for (int j1 = 0; j1 <= 40; ++j1)
            best = std::min(best, cost(-1 + 0.05 * i0, -1 + 0.05 * j0, -1 + 0.05 * i1,
                                       -1 + 0.05 * j1));

    MpcProblem pb;
    pb.pred = pred;
    pb.quad = build_quadratic(pred, w, s0, refs);
    pb.s0 = s0.vec();
    pb.risk = {w.gamma, trackers, field, m.dt};
    pb.box.a_lo = -1.0;
    pb.box.a_hi = 1.0;
    pb.box.vy_lo = -1.0;
    pb.box.vy_hi = 1.0;
    pb.box.y_lo = -1e6;
    pb.box.y_hi = 1e6;
    pb.box.v_max = 1e6;
    pb.config.state_penalty_weight = 0.0;
    const auto sol = solve(pb, Eigen::VectorXd::Zero(2 * n));
    const double solver_cost =
        cost(sol.controls(0), sol.controls(1), sol.controls(2), sol.controls(3));
    if (solver_cost > best + 1e-3) ok_grid = false;
  }

  // (e) lambda = 0 collapses erpf onto the rpf baseline, trajectory-identical
  {
    const auto sc = scenario_preset("scenario1");
    SimParams params;
    params.field.lambda = 0.0;
    params.use_ellipse_weight = false;
    const auto a = run_scenario(sc, ControllerKind::kErpf, 0, params);
    const auto b = run_scenario(sc, ControllerKind::kRpf, 0, params);
    if (a.steps.size() != b.steps.size()) ok_lambda = false;
    for (size_t k = 0; ok_lambda && k < a.steps.size(); ++k) {
      if (a.steps[k].state.x != b.steps[k].state.x ||
          a.steps[k].state.y != b.steps[k].state.y ||
          a.steps[k].state.v != b.steps[k].state.v ||
          a.steps[k].u.a != b.steps[k].u.a || a.steps[k].u.vy != b.steps[k].u.vy) {
        ok_lambda = false;
      }
    }
  }

  char buf[160];
  std::snprintf(buf, sizeof(buf),
                "gradients=%s stacked=%s qp_closed_form=%s grid_oracle=%s lambda0=%s",
                ok_grad ? "ok" : "FAIL", ok_stack ? "ok" : "FAIL",
                ok_qp ? "ok" : "FAIL", ok_grid ? "ok" : "FAIL",
                ok_lambda ? "ok" : "FAIL");
  report(5, "numerical property suite",
         ok_grad && ok_stack && ok_qp && ok_grid && ok_lambda, buf);
}

// 6. Sigmoid evolution yields strictly smaller worst-case control steps than
//    the binary indicator on scenario 1.
void criterion_6() {
  const auto sc = scenario_preset("scenario1");
  SimParams params;
  const auto smooth = run_scenario(sc, ControllerKind::kErpf, 0, params);
  const auto binary = run_scenario(sc, ControllerKind::kErpfBinary, 0, params);
  const auto ms = compute_metrics(smooth, 2.0, sc.target_lane_y);
  const auto mb = compute_metrics(binary, 2.0, sc.target_lane_y);
  const bool pass = ms.max_control_delta < mb.max_control_delta;
  char buf[120];
  std::snprintf(buf, sizeof(buf), "max|du| sigmoid=%.3f binary=%.3f",
                ms.max_control_delta, mb.max_control_delta);
  report(6, "sigmoid smoothness A/B", pass, buf);
}

// 7. Determinism, formats, FLOP accounting.
void criterion_7() {
  bool deterministic = true, roundtrip = true, flops_ok = true;
  double per_interaction = 0.0, per_step = 0.0;

  const auto out = std::filesystem::temp_directory_path() / "erpf_acceptance";
  std::filesystem::remove_all(out);

  {
    const auto sc = scenario_preset("scenario1");
    SimParams params;
    const auto log1 = run_scenario(sc, ControllerKind::kErpf, 3, params);
    const auto m1 = compute_metrics(log1, 2.0, sc.target_lane_y);
    const auto dir1 = export_log(log1, m1, out / "a");
    const auto log2 = run_scenario(sc, ControllerKind::kErpf, 3, params);
    const auto m2 = compute_metrics(log2, 2.0, sc.target_lane_y);
    const auto dir2 = export_log(log2, m2, out / "b");
    for (const char* file : {"trajectory.csv", "diagnostics.csv", "metrics.txt"}) {
      if (slurp(dir1 / file) != slurp(dir2 / file)) deterministic = false;
    }

    const auto table = read_csv(dir1 / "trajectory.csv");
    for (size_t k = 0; k < log1.steps.size(); ++k) {
      if (std::abs(table.rows[k][1] - log1.steps[k].state.x) > 1e-9 ||
          std::abs(table.rows[k][2] - log1.steps[k].state.y) > 1e-9 ||
          std::abs(table.rows[k][8] - log1.steps[k].v_erpf) > 1e-9) {
        roundtrip = false;
      }
    }

    // constant per-interaction cost on every tick
    for (const auto& rec : log1.steps) {
      if (rec.flops.interactions == 0 ||
          rec.flops.interaction_flops !=
              rec.flops.interactions * flops::kValueTermFlops) {
        flops_ok = false;
      }
    }
  }

  // linear scaling in obstacle count
  {
    RiskFieldParams field;
    auto& counters = flops::local();
    counters.enabled = true;
    std::vector<ObstacleTracker> trackers;
    for (int i = 0; i < 4; ++i) {
      trackers.emplace_back(Obstacle{i, {6.0 + i, 0.0}, {0.0, 0.0}, 2.0}, 4);
    }
    counters.reset();
    erpf_value({0, 0, 0}, std::span(trackers.data(), 2), 0.0, field);
    const auto two = counters.interaction_flops;
    counters.reset();
    erpf_value({0, 0, 0}, std::span(trackers.data(), 4), 0.0, field);
    const auto four = counters.interaction_flops;
    counters.enabled = false;
    if (four != 2 * two) flops_ok = false;
  }

  // order-of-magnitude band against the published figures, measured on the
  // six-vehicle preset the computational analysis describes
  {
    const auto sc = scenario_preset("highway6");
    SimParams params;
    const auto log = run_scenario(sc, ControllerKind::kErpf, 0, params);
    const auto m = compute_metrics(log, 2.0, sc.target_lane_y);
    per_interaction = m.flops_per_interaction;
    per_step = m.flops_per_step;
    if (per_interaction < 6.07 || per_interaction > 607.0) flops_ok = false;
    if (per_step < 35.0 || per_step > 3500.0) flops_ok = false;
  }

  char buf[160];
  std::snprintf(buf, sizeof(buf),
                "byte_identical=%s roundtrip=%s per_interaction=%.1f (60.7) "
                "per_step=%.1f (350)",
                deterministic ? "ok" : "FAIL", roundtrip ? "ok" : "FAIL",
                per_interaction, per_step);
  report(7, "determinism, formats, flops", deterministic && roundtrip && flops_ok, buf);
}

}  // namespace

int main() {
  std::printf("=== acceptance suite ===\n");
  criterion_1();
  criterion_2();
  criterion_3();
  criterion_4();
  criterion_5();
  criterion_6();
  criterion_7();
  std::printf("=== %s (%d failure%s) ===\n", failures == 0 ? "ALL PASS" : "FAILED",
              failures, failures == 1 ? "" : "s");
  return failures == 0 ? 0 : 1;
}
