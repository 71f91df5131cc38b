#include <cstdio>
#include <exception>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "erpf/cli_io.hpp"
#include "erpf/errors.hpp"
#include "erpf/sim.hpp"

namespace {

struct CommonArgs {
  std::string config_path;
  std::string scenario;
  std::string controller;
  std::uint64_t seed = 0;
  bool seed_set = false;
  int runs = 0;
  std::string out_dir;
  std::vector<std::string> overrides;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("--config", args.config_path, "JSON config file");
  cmd->add_option("--scenario", args.scenario, "scenario preset name or JSON file");
  cmd->add_option("--controller", args.controller,
                  "erpf | erpf_binary | rpf | plain_mpc | cbf");
  cmd->add_option("--seed", args.seed, "run seed")->each([&](const std::string&) {
    args.seed_set = true;
  });
  cmd->add_option("--runs", args.runs, "Monte Carlo runs per controller");
  cmd->add_option("--out", args.out_dir, "output directory");
  cmd->add_option("--set", args.overrides, "parameter override key=value")
      ->take_all();
}

erpf::RunConfig resolve_config(const CommonArgs& args) {
  erpf::RunConfig cfg;
  if (!args.config_path.empty()) cfg = erpf::load_config(args.config_path);
  if (!args.scenario.empty()) cfg.scenario = args.scenario;
  if (!args.controller.empty()) cfg.controller = args.controller;
  if (args.seed_set) cfg.seed = args.seed;
  if (args.runs > 0) cfg.runs = args.runs;
  if (!args.out_dir.empty()) cfg.out_dir = args.out_dir;
  for (const auto& kv : args.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) {
      throw erpf::ValidationError("--set expects key=value, got: " + kv);
    }
    erpf::apply_override(cfg, kv.substr(0, eq), kv.substr(eq + 1));
  }
  cfg.params.validate();
  return cfg;
}

int cmd_simulate(const CommonArgs& args) {
  const auto cfg = resolve_config(args);
  const auto scenario = erpf::resolve_scenario(cfg.scenario);
  const auto kind = erpf::controller_kind_from_name(cfg.controller);

  const auto log = erpf::run_scenario(scenario, kind, cfg.seed, cfg.params);
  if (log.truncated) {
    std::printf("run invalid: %s\n", log.failure.c_str());
    return 2;
  }
  const auto metrics = erpf::compute_metrics(log, cfg.params.collision_threshold,
                                             scenario.target_lane_y);
  const auto dir = erpf::export_log(log, metrics, cfg.out_dir);

  std::printf("scenario=%s controller=%s seed=%llu\n", scenario.name.c_str(),
              cfg.controller.c_str(), static_cast<unsigned long long>(cfg.seed));
  std::printf("collisions=%d min_distance=%.3f avg_speed=%.2f max_du=%.3f\n",
              metrics.collision_count, metrics.min_distance, metrics.avg_speed,
              metrics.max_control_delta);
  if (metrics.lane_change_completion >= 0.0) {
    std::printf("lane_change_completion=%.1fs\n", metrics.lane_change_completion);
  }
  std::printf("flops: total=%llu per_tick=%.0f per_step=%.1f per_interaction=%.2f\n",
              static_cast<unsigned long long>(metrics.flops_total),
              metrics.flops_per_tick, metrics.flops_per_step,
              metrics.flops_per_interaction);
  std::printf("exported to %s\n", dir.string().c_str());
  return 0;
}

int cmd_bench(const CommonArgs& args) {
  auto cfg = resolve_config(args);
  const auto scenario = erpf::resolve_scenario(cfg.scenario);

  const std::vector<erpf::ControllerKind> kinds = {
      erpf::ControllerKind::kErpf, erpf::ControllerKind::kCbf,
      erpf::ControllerKind::kRpf, erpf::ControllerKind::kPlainMpc};
  const auto entries =
      erpf::monte_carlo(scenario, kinds, cfg.runs, cfg.seed, cfg.params);

  std::printf("%-10s %8s %8s %8s %8s %10s %10s %8s\n", "controller", "runs",
              "invalid", "mean_col", "min_col", "max_col", "mean_v", "min_d");
  for (const auto& e : entries) {
    std::printf("%-10s %8zu %8d %8.2f %8d %10d %10.2f %8.2f\n",
                erpf::controller_name(e.controller).c_str(), e.runs.size(),
                e.invalid_runs, e.mean_collisions, e.min_collisions,
                e.max_collisions, e.mean_speed, e.min_distance);
  }

  std::filesystem::create_directories(cfg.out_dir);
  const auto path = std::filesystem::path(cfg.out_dir) /
                    (scenario.name + "_bench_seed" + std::to_string(cfg.seed) + ".csv");
  std::ofstream out(path, std::ios::binary);
  out << "controller,run,collisions,min_distance,avg_speed,max_control_delta\n";
  for (const auto& e : entries) {
    for (size_t r = 0; r < e.runs.size(); ++r) {
      out << erpf::controller_name(e.controller) << ',' << r << ','
          << e.runs[r].collision_count << ','
          << erpf::format_double(e.runs[r].min_distance) << ','
          << erpf::format_double(e.runs[r].avg_speed) << ','
          << erpf::format_double(e.runs[r].max_control_delta) << '\n';
    }
  }
  std::printf("per-run table: %s\n", path.string().c_str());
  return 0;
}

int cmd_sweep(const CommonArgs& args, double v_rel, double w_obs, double ttc_max,
              double twh_max, int steps) {
  auto cfg = resolve_config(args);
  std::vector<double> ttc_grid, twh_grid;
  for (int i = 1; i <= steps; ++i) {
    ttc_grid.push_back(ttc_max * i / steps);
    twh_grid.push_back(twh_max * i / steps);
  }
  const auto cells =
      erpf::aspect_ratio_sweep(ttc_grid, twh_grid, v_rel, w_obs, cfg.params.ellipse);
  std::filesystem::create_directories(cfg.out_dir);
  const auto path = std::filesystem::path(cfg.out_dir) / "ellipse_sweep.csv";
  erpf::write_sweep_csv(cells, path);
  std::printf("%zu cells -> %s\n", cells.size(), path.string().c_str());
  return 0;
}

int cmd_field(const CommonArgs& args, int tick, double x0, double x1, double y0,
              double y1, int nx, int ny) {
  const auto cfg = resolve_config(args);
  const auto scenario = erpf::resolve_scenario(cfg.scenario);
  const auto kind = erpf::controller_kind_from_name(cfg.controller);

  auto sc = scenario;
  const int want = std::min(std::max(tick + 1, 1), scenario.steps());
  sc.duration = want * sc.dt;
  const auto log = erpf::run_scenario(sc, kind, cfg.seed, cfg.params);
  if (log.steps.empty() || log.truncated) {
    std::printf("run invalid: %s\n", log.failure.c_str());
    return 2;
  }
  const auto& rec = log.steps.back();

  // Field at the requested tick from the tick's frozen evolution factors.
  std::vector<erpf::ObstacleTracker> trackers;
  const auto observed = erpf::propagate_obstacles(scenario.obstacles, tick, sc.dt,
                                                  cfg.params.noise, cfg.seed);
  for (size_t i = 0; i < scenario.obstacles.size(); ++i) {
    erpf::ObstacleTracker tr(scenario.obstacles[i], cfg.params.field.n_history);
    tr.obstacle.p0 = observed[i].pos;
    tr.obstacle.vel = observed[i].vel;
    tr.eta = rec.eta.size() > i ? rec.eta[i] : 1.0;
    trackers.push_back(std::move(tr));
  }

  erpf::FieldGridSpec spec{x0, x1, y0, y1, nx, ny};
  const auto grid = erpf::dump_field(rec.state, trackers, cfg.params.field, spec);
  std::filesystem::create_directories(cfg.out_dir);
  const auto path = std::filesystem::path(cfg.out_dir) /
                    (scenario.name + "_field_t" + std::to_string(tick) + ".csv");
  erpf::write_field_csv(grid, path);
  std::printf("field grid (%dx%d) at tick %d -> %s\n", nx, ny, tick,
              path.string().c_str());
  return 0;
}

int cmd_replay(const CommonArgs& args, const std::string& input) {
  const auto cfg = resolve_config(args);
  auto scenario = erpf::resolve_scenario(cfg.scenario);
  const auto kind = erpf::controller_kind_from_name(cfg.controller);

  std::vector<double> t, x, y;
  std::vector<int> ids;
  erpf::read_replay_csv(input, t, ids, x, y);
  const auto tracks = erpf::resample_tracks(t, ids, x, y, scenario.dt, scenario.duration);

  scenario.obstacles = tracks.obstacles(2.0);
  scenario.name += "_replay";
  const auto log =
      erpf::run_scenario(scenario, kind, cfg.seed, cfg.params, tracks.source(scenario.dt));
  if (log.truncated) {
    std::printf("run invalid: %s\n", log.failure.c_str());
    return 2;
  }
  const auto metrics = erpf::compute_metrics(log, cfg.params.collision_threshold,
                                             scenario.target_lane_y);
  const auto dir = erpf::export_log(log, metrics, cfg.out_dir);
  std::printf("replayed %zu vehicles, collisions=%d min_distance=%.3f -> %s\n",
              tracks.vehicle_ids.size(), metrics.collision_count, metrics.min_distance,
              dir.string().c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"risk-field MPC planning benchmarks"};
  app.require_subcommand(1);

  CommonArgs sim_args, bench_args, sweep_args, field_args, replay_args;

  auto* simulate = app.add_subcommand("simulate", "one closed-loop run");
  add_common(simulate, sim_args);

  auto* bench = app.add_subcommand("bench", "Monte Carlo controller comparison");
  add_common(bench, bench_args);

  auto* sweep = app.add_subcommand("sweep", "ellipse aspect-ratio grid");
  add_common(sweep, sweep_args);
  double v_rel = 10.0, w_obs = 2.0, ttc_max = 5.0, twh_max = 2.0;
  int sweep_steps = 25;
  sweep->add_option("--vrel", v_rel, "relative speed, m/s");
  sweep->add_option("--wobs", w_obs, "obstacle width, m");
  sweep->add_option("--ttc-max", ttc_max, "TTC grid upper end, s");
  sweep->add_option("--twh-max", twh_max, "TWH grid upper end, s");
  sweep->add_option("--steps", sweep_steps, "grid steps per axis");

  auto* field = app.add_subcommand("field", "risk-field grid dump at a tick");
  add_common(field, field_args);
  int tick = 0, nx = 120, ny = 40;
  double fx0 = 0.0, fx1 = 120.0, fy0 = 0.0, fy1 = 7.0;
  field->add_option("--tick", tick, "simulation tick to dump");
  field->add_option("--x0", fx0);
  field->add_option("--x1", fx1);
  field->add_option("--y0", fy0);
  field->add_option("--y1", fy1);
  field->add_option("--nx", nx);
  field->add_option("--ny", ny);

  auto* replay = app.add_subcommand("replay", "run against recorded trajectories");
  add_common(replay, replay_args);
  std::string input;
  replay->add_option("--input", input, "CSV with t,vehicle_id,x,y")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (simulate->parsed()) return cmd_simulate(sim_args);
    if (bench->parsed()) return cmd_bench(bench_args);
    if (sweep->parsed()) {
      return cmd_sweep(sweep_args, v_rel, w_obs, ttc_max, twh_max, sweep_steps);
    }
    if (field->parsed()) {
      return cmd_field(field_args, tick, fx0, fx1, fy0, fy1, nx, ny);
    }
    if (replay->parsed()) return cmd_replay(replay_args, input);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
