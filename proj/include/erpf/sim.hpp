#ifndef ERPF_SIM_HPP_
#define ERPF_SIM_HPP_

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "erpf/controllers.hpp"
#include "erpf/flops.hpp"
#include "erpf/scenario.hpp"

namespace erpf {

/// Bounded per-step acceleration noise on the surrounding vehicles. Samples
/// are a pure function of (seed, step, obstacle), so runs replay bit-exact
/// regardless of evaluation order.
struct UncertaintyModel {
  bool enabled = false;
  double accel_bound = 1.5;  // m/s^2, uniform in [-bound, bound]
};

/// Uniform sample in [-1, 1] from a counter-based hash of the inputs.
double noise_sample(std::uint64_t seed, std::uint64_t step, std::uint64_t obstacle);

/// Kinematics at step k: the constant-velocity path plus the stepwise
/// integrated noise offsets (exactly zero when noise is off).
std::vector<ObstacleKinematics> propagate_obstacles(std::span<const Obstacle> obstacles,
                                                    int k, double dt,
                                                    const UncertaintyModel& noise,
                                                    std::uint64_t seed);

struct StepRecord {
  double t = 0.0;
  VehicleState state;
  ControlInput u;
  std::vector<double> obstacle_distance;
  std::vector<double> eta;
  double v_erpf = 0.0;  // field value at the executed state
  SolverDiagnostics solver;
  bool cbf_fallback = false;
  flops::Counters flops;  // per-tick deltas
};

struct SimulationLog {
  std::string scenario;
  std::string controller;
  std::uint64_t seed = 0;
  double dt = 0.1;
  int n_obstacles = 0;
  std::vector<StepRecord> steps;
  bool truncated = false;      // solver failure; run is invalid, not a collision
  std::string failure;
};

struct SimParams {
  int horizon = 30;
  RiskFieldParams field;
  EllipseParams ellipse;
  MPCWeights weights;
  BoxConstraints box;
  SolverConfig solver;
  CbfParams cbf;
  bool use_ellipse_weight = true;
  UncertaintyModel noise;
  bool count_flops = true;
  double collision_threshold = 2.0;  // m, center distance

  /// MpcConfig matching this parameter set for a given scenario band.
  MpcConfig mpc_config(const Scenario& sc) const;
  void validate() const;
};

/// Per-tick obstacle observations; index k runs over simulation steps.
using ObstacleSource = std::function<std::vector<ObstacleKinematics>(int k)>;

SimulationLog run_scenario(const Scenario& sc, ControllerKind kind,
                           std::uint64_t seed, const SimParams& params);

/// Variant with externally supplied obstacle motion (replay).
SimulationLog run_scenario(const Scenario& sc, ControllerKind kind,
                           std::uint64_t seed, const SimParams& params,
                           const ObstacleSource& source);

struct CollisionEvent {
  int start_step = 0;
  int end_step = 0;       // inclusive
  double min_distance = 0.0;
};

/// One event per contiguous interval with any center distance below the
/// threshold.
std::vector<CollisionEvent> detect_collision(const SimulationLog& log, double threshold);

struct Metrics {
  int collision_count = 0;
  double min_distance = 0.0;
  double avg_speed = 0.0;
  double max_control_delta = 0.0;          // max_k |u_k - u_{k-1}|
  double lane_change_completion = -1.0;    // s; -1 when not applicable/reached
  std::uint64_t flops_total = 0;
  double flops_per_tick = 0.0;
  double flops_per_step = 0.0;             // per horizon stage per tick
  double flops_per_interaction = 0.0;
  std::uint64_t interactions = 0;
};

Metrics compute_metrics(const SimulationLog& log, double collision_threshold,
                        double target_lane_y = 0.0);

struct MonteCarloEntry {
  ControllerKind controller;
  std::vector<Metrics> runs;     // valid runs only
  int invalid_runs = 0;
  double mean_collisions = 0.0;
  int min_collisions = 0;
  int max_collisions = 0;
  double mean_speed = 0.0;
  double min_distance = 0.0;     // worst case over runs
};

/// n_runs seeded closed-loop runs per controller, executed in parallel
/// workers; seeds are seed_base + run index.
std::vector<MonteCarloEntry> monte_carlo(const Scenario& sc,
                                         std::span<const ControllerKind> controllers,
                                         int n_runs, std::uint64_t seed_base,
                                         const SimParams& params);

/// Recorded obstacle trajectories: rows (t, vehicle_id, x, y) resampled to the
/// scenario dt by linear interpolation.
struct ReplayTracks {
  std::vector<int> vehicle_ids;
  std::vector<std::vector<Eigen::Vector2d>> positions;  // [vehicle][step]
  double dt = 0.1;

  int steps() const;
  ObstacleSource source(double dt_expected) const;
  std::vector<Obstacle> obstacles(double default_width) const;
};

ReplayTracks resample_tracks(const std::vector<double>& t,
                             const std::vector<int>& vehicle_id,
                             const std::vector<double>& x,
                             const std::vector<double>& y, double dt,
                             double duration);

}  // namespace erpf

#endif  // ERPF_SIM_HPP_
