#include "erpf/sim.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <limits>
#include <map>
#include <numeric>
#include <thread>

#include "erpf/errors.hpp"

namespace erpf {

namespace {

std::uint64_t splitmix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace

double noise_sample(std::uint64_t seed, std::uint64_t step, std::uint64_t obstacle) {
  std::uint64_t h = splitmix64(seed ^ splitmix64(step ^ splitmix64(obstacle)));
  // 53 mantissa bits -> [0, 1) -> [-1, 1]
  const double unit = static_cast<double>(h >> 11) * 0x1.0p-53;
  return 2.0 * unit - 1.0;
}

std::vector<ObstacleKinematics> propagate_obstacles(std::span<const Obstacle> obstacles,
                                                    int k, double dt,
                                                    const UncertaintyModel& noise,
                                                    std::uint64_t seed) {
  if (k < 0) throw ValidationError("propagate_obstacles: k must be >= 0");
  std::vector<ObstacleKinematics> out(obstacles.size());
  for (size_t i = 0; i < obstacles.size(); ++i) {
    const auto& obs = obstacles[i];
    ObstacleKinematics kin;
    kin.pos = obs.p0 + obs.vel * (k * dt);
    kin.vel = obs.vel;
    if (noise.enabled) {
      // Velocity offset integrates the per-step acceleration; position offset
      // integrates the offset. Both are exactly zero with the noise disabled.
      double dv = 0.0;
      double dp = 0.0;
      for (int j = 0; j < k; ++j) {
        dv += noise.accel_bound *
              noise_sample(seed, static_cast<std::uint64_t>(j),
                           static_cast<std::uint64_t>(obs.id)) *
              dt;
        dp += dv * dt;
      }
      kin.pos.x() += dp;
      kin.vel.x() += dv;
    }
    out[i] = kin;
  }
  return out;
}

MpcConfig SimParams::mpc_config(const Scenario& sc) const {
  MpcConfig cfg;
  cfg.model = LinearModel(sc.dt);
  cfg.horizon = horizon;
  cfg.weights = weights;
  cfg.box = box;
  cfg.box.y_lo = sc.y_min;
  cfg.box.y_hi = sc.y_max;
  cfg.field = field;
  cfg.ellipse = ellipse;
  cfg.ellipse.t_horizon = horizon * sc.dt;
  cfg.use_ellipse_weight = use_ellipse_weight;
  cfg.solver = solver;
  return cfg;
}

void SimParams::validate() const {
  if (horizon < 1) throw ValidationError("sim: horizon must be >= 1");
  if (!(collision_threshold > 0.0)) {
    throw ValidationError("sim: collision threshold must be > 0");
  }
  if (!(noise.accel_bound >= 0.0)) {
    throw ValidationError("sim: noise bound must be >= 0");
  }
  field.validate();
  ellipse.validate();
  weights.validate();
  box.validate();
}

SimulationLog run_scenario(const Scenario& sc, ControllerKind kind,
                           std::uint64_t seed, const SimParams& params) {
  const UncertaintyModel noise = params.noise;
  ObstacleSource source = [&sc, noise, seed](int k) {
    return propagate_obstacles(sc.obstacles, k, sc.dt, noise, seed);
  };
  return run_scenario(sc, kind, seed, params, source);
}

SimulationLog run_scenario(const Scenario& sc, ControllerKind kind,
                           std::uint64_t seed, const SimParams& params,
                           const ObstacleSource& source) {
  sc.validate();
  params.validate();

  SimulationLog log;
  log.scenario = sc.name;
  log.controller = controller_name(kind);
  log.seed = seed;
  log.dt = sc.dt;
  log.n_obstacles = static_cast<int>(sc.obstacles.size());

  const ReferenceTrajectory reference = build_reference(sc, params.horizon + 1);
  ControllerParams cp;
  cp.mpc = params.mpc_config(sc);
  cp.cbf = params.cbf;
  auto controller = make_controller(kind, cp, sc, reference);

  auto& counters = flops::local();
  const bool was_enabled = counters.enabled;
  counters.enabled = params.count_flops;
  counters.reset();

  const LinearModel model(sc.dt);
  VehicleState s = sc.ego;
  const int n_steps = sc.steps();
  log.steps.reserve(static_cast<size_t>(n_steps));

  flops::Counters before = counters;
  for (int k = 0; k < n_steps; ++k) {
    const auto observed = source(k);

    StepRecord rec;
    rec.t = k * sc.dt;
    rec.state = s;
    try {
      const ControlDecision dec = controller->step(s, k, observed);
      rec.u = dec.u;
      rec.solver = dec.diagnostics;
      rec.cbf_fallback = dec.cbf_fallback;
    } catch (const NonFiniteError& e) {
      log.truncated = true;
      log.failure = e.what();
      break;
    }

    rec.flops.interactions = counters.interactions - before.interactions;
    rec.flops.interaction_flops = counters.interaction_flops - before.interaction_flops;
    rec.flops.gradient_flops = counters.gradient_flops - before.gradient_flops;
    rec.flops.overhead_flops = counters.overhead_flops - before.overhead_flops;
    rec.flops.stage_evals = counters.stage_evals - before.stage_evals;
    before = counters;

    rec.obstacle_distance.resize(observed.size());
    for (size_t i = 0; i < observed.size(); ++i) {
      rec.obstacle_distance[i] = distance(s, observed[i].pos);
    }
    const auto trackers = controller->trackers();
    rec.eta.resize(trackers.size());
    for (size_t i = 0; i < trackers.size(); ++i) rec.eta[i] = trackers[i].eta;

    // Field value for the log only; keep it out of the planner accounting.
    counters.enabled = false;
    rec.v_erpf = erpf_value(s, trackers, 0.0, controller->field());
    counters.enabled = params.count_flops;

    log.steps.push_back(std::move(rec));
    s = clamp_speed(step(s, log.steps.back().u, model));
  }

  counters.enabled = was_enabled;
  return log;
}

std::vector<CollisionEvent> detect_collision(const SimulationLog& log, double threshold) {
  if (!(threshold > 0.0)) throw ValidationError("detect_collision: threshold must be > 0");
  std::vector<CollisionEvent> events;
  bool inside = false;
  for (size_t k = 0; k < log.steps.size(); ++k) {
    const auto& dists = log.steps[k].obstacle_distance;
    const double dmin = dists.empty()
                            ? std::numeric_limits<double>::infinity()
                            : *std::min_element(dists.begin(), dists.end());
    if (dmin < threshold) {
      if (!inside) {
        events.push_back({static_cast<int>(k), static_cast<int>(k), dmin});
        inside = true;
      } else {
        events.back().end_step = static_cast<int>(k);
        events.back().min_distance = std::min(events.back().min_distance, dmin);
      }
    } else {
      inside = false;
    }
  }
  return events;
}

Metrics compute_metrics(const SimulationLog& log, double collision_threshold,
                        double target_lane_y) {
  if (log.steps.empty()) throw ValidationError("compute_metrics: empty log");

  Metrics m;
  m.collision_count = static_cast<int>(detect_collision(log, collision_threshold).size());

  double dmin = std::numeric_limits<double>::infinity();
  double speed_sum = 0.0;
  for (const auto& rec : log.steps) {
    speed_sum += rec.state.v;
    for (double d : rec.obstacle_distance) dmin = std::min(dmin, d);
  }
  m.min_distance = dmin;
  m.avg_speed = speed_sum / static_cast<double>(log.steps.size());

  for (size_t k = 1; k < log.steps.size(); ++k) {
    const double da = log.steps[k].u.a - log.steps[k - 1].u.a;
    const double dvy = log.steps[k].u.vy - log.steps[k - 1].u.vy;
    m.max_control_delta = std::max(m.max_control_delta, std::hypot(da, dvy));
  }

  if (target_lane_y != 0.0) {
    constexpr double kBand = 0.25;
    int settled = -1;
    for (int k = static_cast<int>(log.steps.size()) - 1; k >= 0; --k) {
      if (std::abs(log.steps[static_cast<size_t>(k)].state.y - target_lane_y) <= kBand) {
        settled = k;
      } else {
        break;
      }
    }
    if (settled >= 0) m.lane_change_completion = settled * log.dt;
  }

  std::uint64_t total = 0;
  std::uint64_t interactions = 0;
  std::uint64_t interaction_flops = 0;
  std::uint64_t stage_evals = 0;
  for (const auto& rec : log.steps) {
    total += rec.flops.total();
    interactions += rec.flops.interactions;
    interaction_flops += rec.flops.interaction_flops;
    stage_evals += rec.flops.stage_evals;
  }
  m.flops_total = total;
  m.interactions = interactions;
  const double ticks = static_cast<double>(log.steps.size());
  m.flops_per_tick = static_cast<double>(total) / ticks;
  // Average arithmetic cost of one horizon-stage risk evaluation.
  m.flops_per_step = stage_evals > 0
                         ? static_cast<double>(total) / static_cast<double>(stage_evals)
                         : 0.0;
  m.flops_per_interaction =
      interactions > 0 ? static_cast<double>(interaction_flops) /
                             static_cast<double>(interactions)
                       : 0.0;
  return m;
}

std::vector<MonteCarloEntry> monte_carlo(const Scenario& sc,
                                         std::span<const ControllerKind> controllers,
                                         int n_runs, std::uint64_t seed_base,
                                         const SimParams& params) {
  if (n_runs < 1) throw ValidationError("monte_carlo: n_runs must be >= 1");

  struct Task {
    size_t controller_index;
    int run;
  };
  std::vector<Task> tasks;
  for (size_t ci = 0; ci < controllers.size(); ++ci) {
    for (int r = 0; r < n_runs; ++r) tasks.push_back({ci, r});
  }

  struct RunResult {
    bool valid = false;
    Metrics metrics;
  };
  std::vector<RunResult> results(tasks.size());

  const unsigned workers = std::max(1u, std::thread::hardware_concurrency());
  for (size_t start = 0; start < tasks.size(); start += workers) {
    const size_t end = std::min(tasks.size(), start + workers);
    std::vector<std::future<RunResult>> futures;
    futures.reserve(end - start);
    for (size_t i = start; i < end; ++i) {
      futures.push_back(std::async(std::launch::async, [&, i]() -> RunResult {
        const Task& task = tasks[i];
        const std::uint64_t seed = seed_base + static_cast<std::uint64_t>(task.run);
        const SimulationLog log =
            run_scenario(sc, controllers[task.controller_index], seed, params);
        RunResult rr;
        if (!log.truncated) {
          rr.valid = true;
          rr.metrics = compute_metrics(log, params.collision_threshold,
                                       sc.target_lane_y);
        }
        return rr;
      }));
    }
    for (size_t i = start; i < end; ++i) {
      results[i] = futures[i - start].get();
    }
  }

  std::vector<MonteCarloEntry> entries(controllers.size());
  for (size_t ci = 0; ci < controllers.size(); ++ci) {
    entries[ci].controller = controllers[ci];
    entries[ci].min_distance = std::numeric_limits<double>::infinity();
  }
  for (size_t i = 0; i < tasks.size(); ++i) {
    auto& entry = entries[tasks[i].controller_index];
    if (!results[i].valid) {
      ++entry.invalid_runs;
      continue;
    }
    entry.runs.push_back(results[i].metrics);
  }
  for (auto& entry : entries) {
    if (entry.runs.empty()) continue;
    double collision_sum = 0.0;
    double speed_sum = 0.0;
    entry.min_collisions = entry.runs.front().collision_count;
    entry.max_collisions = entry.runs.front().collision_count;
    for (const auto& m : entry.runs) {
      collision_sum += m.collision_count;
      speed_sum += m.avg_speed;
      entry.min_collisions = std::min(entry.min_collisions, m.collision_count);
      entry.max_collisions = std::max(entry.max_collisions, m.collision_count);
      entry.min_distance = std::min(entry.min_distance, m.min_distance);
    }
    entry.mean_collisions = collision_sum / static_cast<double>(entry.runs.size());
    entry.mean_speed = speed_sum / static_cast<double>(entry.runs.size());
  }
  return entries;
}

int ReplayTracks::steps() const {
  return positions.empty() ? 0 : static_cast<int>(positions.front().size()) - 1;
}

ObstacleSource ReplayTracks::source(double dt_expected) const {
  if (std::abs(dt - dt_expected) > 1e-9) {
    throw ValidationError("replay: track dt does not match scenario dt");
  }
  const auto tracks = positions;
  const double step_dt = dt;
  return [tracks, step_dt](int k) {
    std::vector<ObstacleKinematics> out(tracks.size());
    for (size_t i = 0; i < tracks.size(); ++i) {
      const auto& track = tracks[i];
      const int last = static_cast<int>(track.size()) - 1;
      const int idx = std::min(k, last);
      ObstacleKinematics kin;
      kin.pos = track[static_cast<size_t>(idx)];
      const int a = std::min(idx, last - 1);
      if (a >= 0 && a + 1 <= last) {
        kin.vel = (track[static_cast<size_t>(a + 1)] - track[static_cast<size_t>(a)]) /
                  step_dt;
      }
      out[i] = kin;
    }
    return out;
  };
}

std::vector<Obstacle> ReplayTracks::obstacles(double default_width) const {
  std::vector<Obstacle> out;
  out.reserve(vehicle_ids.size());
  for (size_t i = 0; i < vehicle_ids.size(); ++i) {
    Obstacle obs;
    obs.id = vehicle_ids[i];
    obs.p0 = positions[i].front();
    if (positions[i].size() > 1) {
      obs.vel = (positions[i][1] - positions[i][0]) / dt;
    }
    obs.width = default_width;
    out.push_back(obs);
  }
  return out;
}

ReplayTracks resample_tracks(const std::vector<double>& t,
                             const std::vector<int>& vehicle_id,
                             const std::vector<double>& x,
                             const std::vector<double>& y, double dt,
                             double duration) {
  if (t.size() != vehicle_id.size() || t.size() != x.size() || t.size() != y.size()) {
    throw ValidationError("replay: column lengths differ");
  }
  if (t.empty()) throw ValidationError("replay: no samples");

  struct Sample {
    double t, x, y;
  };
  std::map<int, std::vector<Sample>> by_vehicle;
  for (size_t i = 0; i < t.size(); ++i) {
    by_vehicle[vehicle_id[i]].push_back({t[i], x[i], y[i]});
  }

  ReplayTracks tracks;
  tracks.dt = dt;
  const int n = static_cast<int>(std::lround(duration / dt));
  for (auto& [id, samples] : by_vehicle) {
    std::sort(samples.begin(), samples.end(),
              [](const Sample& a, const Sample& b) { return a.t < b.t; });
    std::vector<Eigen::Vector2d> track(static_cast<size_t>(n) + 1);
    for (int k = 0; k <= n; ++k) {
      const double tk = k * dt;
      if (tk <= samples.front().t) {
        track[static_cast<size_t>(k)] = {samples.front().x, samples.front().y};
        continue;
      }
      if (tk >= samples.back().t) {
        track[static_cast<size_t>(k)] = {samples.back().x, samples.back().y};
        continue;
      }
      auto hi = std::lower_bound(samples.begin(), samples.end(), tk,
                                 [](const Sample& s, double value) { return s.t < value; });
      auto lo = hi - 1;
      const double span = hi->t - lo->t;
      const double w = span > 0.0 ? (tk - lo->t) / span : 0.0;
      track[static_cast<size_t>(k)] = {lo->x + w * (hi->x - lo->x),
                                       lo->y + w * (hi->y - lo->y)};
    }
    tracks.vehicle_ids.push_back(id);
    tracks.positions.push_back(std::move(track));
  }
  return tracks;
}

}  // namespace erpf
