#include "erpf/cli_io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <sstream>

#include <json.hpp>

#include "erpf/errors.hpp"

namespace erpf {

namespace {

using nlohmann::json;

enum class ValueKind { kDouble, kInt, kBool };

struct OverrideEntry {
  const char* key;
  ValueKind kind;
  std::function<double(const RunConfig&)> get;
  std::function<void(RunConfig&, double)> set;
};

const std::vector<OverrideEntry>& override_table() {
  static const std::vector<OverrideEntry> table = {
      // risk field
      {"alpha", ValueKind::kDouble, [](const RunConfig& c) { return c.params.field.alpha; },
       [](RunConfig& c, double v) { c.params.field.alpha = v; }},
      {"d_safe", ValueKind::kDouble, [](const RunConfig& c) { return c.params.field.d_safe; },
       [](RunConfig& c, double v) { c.params.field.d_safe = v; }},
      {"epsilon", ValueKind::kDouble, [](const RunConfig& c) { return c.params.field.epsilon; },
       [](RunConfig& c, double v) { c.params.field.epsilon = v; }},
      {"lambda", ValueKind::kDouble, [](const RunConfig& c) { return c.params.field.lambda; },
       [](RunConfig& c, double v) { c.params.field.lambda = v; }},
      {"n_history", ValueKind::kInt,
       [](const RunConfig& c) { return static_cast<double>(c.params.field.n_history); },
       [](RunConfig& c, double v) { c.params.field.n_history = static_cast<int>(std::lround(v)); }},
      {"gamma", ValueKind::kDouble, [](const RunConfig& c) { return c.params.weights.gamma; },
       [](RunConfig& c, double v) {
         c.params.weights.gamma = v;
         c.params.field.gamma = v;
       }},
      // collision ellipse
      {"a_cap", ValueKind::kDouble, [](const RunConfig& c) { return c.params.ellipse.a_cap; },
       [](RunConfig& c, double v) { c.params.ellipse.a_cap = v; }},
      {"b_cap", ValueKind::kDouble, [](const RunConfig& c) { return c.params.ellipse.b_cap; },
       [](RunConfig& c, double v) { c.params.ellipse.b_cap = v; }},
      {"a_max_decel", ValueKind::kDouble,
       [](const RunConfig& c) { return c.params.ellipse.a_max_decel; },
       [](RunConfig& c, double v) { c.params.ellipse.a_max_decel = v; }},
      {"d_lat_max", ValueKind::kDouble,
       [](const RunConfig& c) { return c.params.ellipse.d_lat_max; },
       [](RunConfig& c, double v) { c.params.ellipse.d_lat_max = v; }},
      {"alpha_decay", ValueKind::kDouble,
       [](const RunConfig& c) { return c.params.ellipse.alpha_decay; },
       [](RunConfig& c, double v) { c.params.ellipse.alpha_decay = v; }},
      {"twh", ValueKind::kDouble, [](const RunConfig& c) { return c.params.ellipse.twh; },
       [](RunConfig& c, double v) { c.params.ellipse.twh = v; }},
      // tracking weights
      {"q_x", ValueKind::kDouble, [](const RunConfig& c) { return c.params.weights.Q(0, 0); },
       [](RunConfig& c, double v) { c.params.weights.Q(0, 0) = v; }},
      {"q_y", ValueKind::kDouble, [](const RunConfig& c) { return c.params.weights.Q(1, 1); },
       [](RunConfig& c, double v) { c.params.weights.Q(1, 1) = v; }},
      {"q_v", ValueKind::kDouble, [](const RunConfig& c) { return c.params.weights.Q(2, 2); },
       [](RunConfig& c, double v) { c.params.weights.Q(2, 2) = v; }},
      {"qn_x", ValueKind::kDouble, [](const RunConfig& c) { return c.params.weights.Q_N(0, 0); },
       [](RunConfig& c, double v) { c.params.weights.Q_N(0, 0) = v; }},
      {"qn_y", ValueKind::kDouble, [](const RunConfig& c) { return c.params.weights.Q_N(1, 1); },
       [](RunConfig& c, double v) { c.params.weights.Q_N(1, 1) = v; }},
      {"qn_v", ValueKind::kDouble, [](const RunConfig& c) { return c.params.weights.Q_N(2, 2); },
       [](RunConfig& c, double v) { c.params.weights.Q_N(2, 2) = v; }},
      {"r_a", ValueKind::kDouble, [](const RunConfig& c) { return c.params.weights.R(0, 0); },
       [](RunConfig& c, double v) { c.params.weights.R(0, 0) = v; }},
      {"r_vy", ValueKind::kDouble, [](const RunConfig& c) { return c.params.weights.R(1, 1); },
       [](RunConfig& c, double v) { c.params.weights.R(1, 1) = v; }},
      // input box
      {"a_lo", ValueKind::kDouble, [](const RunConfig& c) { return c.params.box.a_lo; },
       [](RunConfig& c, double v) { c.params.box.a_lo = v; }},
      {"a_hi", ValueKind::kDouble, [](const RunConfig& c) { return c.params.box.a_hi; },
       [](RunConfig& c, double v) { c.params.box.a_hi = v; }},
      {"vy_lo", ValueKind::kDouble, [](const RunConfig& c) { return c.params.box.vy_lo; },
       [](RunConfig& c, double v) { c.params.box.vy_lo = v; }},
      {"vy_hi", ValueKind::kDouble, [](const RunConfig& c) { return c.params.box.vy_hi; },
       [](RunConfig& c, double v) { c.params.box.vy_hi = v; }},
      {"v_max", ValueKind::kDouble, [](const RunConfig& c) { return c.params.box.v_max; },
       [](RunConfig& c, double v) { c.params.box.v_max = v; }},
      // solver
      {"max_iterations", ValueKind::kInt,
       [](const RunConfig& c) { return static_cast<double>(c.params.solver.max_iterations); },
       [](RunConfig& c, double v) {
         c.params.solver.max_iterations = static_cast<int>(std::lround(v));
       }},
      {"grad_tolerance", ValueKind::kDouble,
       [](const RunConfig& c) { return c.params.solver.grad_tolerance; },
       [](RunConfig& c, double v) { c.params.solver.grad_tolerance = v; }},
      {"state_penalty_weight", ValueKind::kDouble,
       [](const RunConfig& c) { return c.params.solver.state_penalty_weight; },
       [](RunConfig& c, double v) { c.params.solver.state_penalty_weight = v; }},
      // harness
      {"horizon", ValueKind::kInt,
       [](const RunConfig& c) { return static_cast<double>(c.params.horizon); },
       [](RunConfig& c, double v) { c.params.horizon = static_cast<int>(std::lround(v)); }},
      {"use_ellipse_weight", ValueKind::kBool,
       [](const RunConfig& c) { return c.params.use_ellipse_weight ? 1.0 : 0.0; },
       [](RunConfig& c, double v) { c.params.use_ellipse_weight = v != 0.0; }},
      {"noise_enabled", ValueKind::kBool,
       [](const RunConfig& c) { return c.params.noise.enabled ? 1.0 : 0.0; },
       [](RunConfig& c, double v) { c.params.noise.enabled = v != 0.0; }},
      {"noise_accel_bound", ValueKind::kDouble,
       [](const RunConfig& c) { return c.params.noise.accel_bound; },
       [](RunConfig& c, double v) { c.params.noise.accel_bound = v; }},
      {"count_flops", ValueKind::kBool,
       [](const RunConfig& c) { return c.params.count_flops ? 1.0 : 0.0; },
       [](RunConfig& c, double v) { c.params.count_flops = v != 0.0; }},
      {"collision_threshold", ValueKind::kDouble,
       [](const RunConfig& c) { return c.params.collision_threshold; },
       [](RunConfig& c, double v) { c.params.collision_threshold = v; }},
      {"cbf_kappa", ValueKind::kDouble, [](const RunConfig& c) { return c.params.cbf.kappa; },
       [](RunConfig& c, double v) { c.params.cbf.kappa = v; }},
  };
  return table;
}

const OverrideEntry& find_entry(const std::string& key) {
  for (const auto& entry : override_table()) {
    if (key == entry.key) return entry;
  }
  throw ValidationError("unknown override key: " + key);
}

void apply_json_override(RunConfig& cfg, const std::string& key, const json& value) {
  const auto& entry = find_entry(key);
  double v = 0.0;
  if (value.is_boolean()) {
    v = value.get<bool>() ? 1.0 : 0.0;
  } else if (value.is_number()) {
    v = value.get<double>();
  } else {
    throw ValidationError("override " + key + ": expected a number");
  }
  entry.set(cfg, v);
}

void validate_config(const RunConfig& cfg) {
  controller_kind_from_name(cfg.controller);
  if (cfg.runs < 1) throw ValidationError("config: runs must be >= 1");
  cfg.params.validate();
}

Scenario scenario_from_json(const json& j, const std::string& origin) {
  Scenario sc;
  for (const auto& [key, value] : j.items()) {
    if (key == "name") {
      sc.name = value.get<std::string>();
    } else if (key == "ego") {
      sc.ego = {value.at(0).get<double>(), value.at(1).get<double>(),
                value.at(2).get<double>()};
    } else if (key == "obstacles") {
      for (const auto& o : value) {
        Obstacle obs;
        obs.id = o.at("id").get<int>();
        obs.p0 = {o.at("x").get<double>(), o.at("y").get<double>()};
        obs.vel = {o.at("vx").get<double>(), o.at("vy").get<double>()};
        if (o.contains("width")) obs.width = o.at("width").get<double>();
        sc.obstacles.push_back(obs);
      }
    } else if (key == "lane_centers") {
      sc.lane_centers = value.get<std::vector<double>>();
    } else if (key == "y_min") {
      sc.y_min = value.get<double>();
    } else if (key == "y_max") {
      sc.y_max = value.get<double>();
    } else if (key == "kind") {
      const std::string kind = value.get<std::string>();
      if (kind == "lane_keep") sc.kind = ReferenceKind::kLaneKeep;
      else if (kind == "lane_change") sc.kind = ReferenceKind::kLaneChange;
      else if (kind == "overtake") sc.kind = ReferenceKind::kOvertake;
      else throw ValidationError(origin + ": unknown reference kind " + kind);
    } else if (key == "segments") {
      for (const auto& s : value) {
        sc.segments.push_back({s.at("t_start").get<double>(),
                               s.at("duration").get<double>(),
                               s.at("y_to").get<double>()});
      }
    } else if (key == "v_ref") {
      sc.v_ref = value.get<double>();
    } else if (key == "target_lane_y") {
      sc.target_lane_y = value.get<double>();
    } else if (key == "duration") {
      sc.duration = value.get<double>();
    } else if (key == "dt") {
      sc.dt = value.get<double>();
    } else {
      throw ValidationError(origin + ": unknown scenario key " + key);
    }
  }
  sc.validate();
  return sc;
}

}  // namespace

std::vector<std::string> override_keys() {
  std::vector<std::string> keys;
  for (const auto& entry : override_table()) keys.emplace_back(entry.key);
  return keys;
}

RunConfig parse_config(const std::string& text, const std::string& origin) {
  RunConfig cfg;
  const bool blank = std::all_of(text.begin(), text.end(),
                                 [](unsigned char ch) { return std::isspace(ch); });
  if (blank) {
    validate_config(cfg);
    return cfg;
  }

  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ValidationError(origin + ": parse error at byte " + std::to_string(e.byte) +
                          ": " + e.what());
  }
  if (!j.is_object()) throw ValidationError(origin + ": config must be a JSON object");

  for (const auto& [key, value] : j.items()) {
    if (key == "scenario") {
      cfg.scenario = value.get<std::string>();
    } else if (key == "controller") {
      cfg.controller = value.get<std::string>();
    } else if (key == "seed") {
      cfg.seed = value.get<std::uint64_t>();
    } else if (key == "runs") {
      cfg.runs = value.get<int>();
    } else if (key == "out") {
      cfg.out_dir = value.get<std::string>();
    } else if (key == "overrides") {
      if (!value.is_object()) throw ValidationError(origin + ": overrides must be an object");
      for (const auto& [okey, ovalue] : value.items()) {
        apply_json_override(cfg, okey, ovalue);
      }
    } else {
      throw ValidationError(origin + ": unknown config key " + key);
    }
  }
  validate_config(cfg);
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("config: cannot open " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_config(buffer.str(), path);
}

std::string serialize_config(const RunConfig& cfg) {
  json overrides = json::object();
  for (const auto& entry : override_table()) {
    const double v = entry.get(cfg);
    switch (entry.kind) {
      case ValueKind::kDouble: overrides[entry.key] = v; break;
      case ValueKind::kInt: overrides[entry.key] = static_cast<long long>(std::llround(v)); break;
      case ValueKind::kBool: overrides[entry.key] = v != 0.0; break;
    }
  }
  json j;
  j["scenario"] = cfg.scenario;
  j["controller"] = cfg.controller;
  j["seed"] = cfg.seed;
  j["runs"] = cfg.runs;
  j["out"] = cfg.out_dir;
  j["overrides"] = overrides;
  return j.dump(2) + "\n";
}

void apply_override(RunConfig& cfg, const std::string& key, const std::string& value) {
  const auto& entry = find_entry(key);
  double v = 0.0;
  if (entry.kind == ValueKind::kBool && (value == "true" || value == "false")) {
    v = value == "true" ? 1.0 : 0.0;
  } else {
    const char* begin = value.data();
    const char* end = begin + value.size();
    auto [ptr, ec] = std::from_chars(begin, end, v);
    if (ec != std::errc() || ptr != end) {
      throw ValidationError("override " + key + ": cannot parse value '" + value + "'");
    }
  }
  entry.set(cfg, v);
}

Scenario resolve_scenario(const std::string& name_or_path) {
  const auto presets = scenario_preset_names();
  if (std::find(presets.begin(), presets.end(), name_or_path) != presets.end()) {
    return scenario_preset(name_or_path);
  }
  std::ifstream in(name_or_path);
  if (!in) {
    throw ValidationError("scenario: not a preset and cannot open file: " + name_or_path);
  }
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ValidationError(name_or_path + ": parse error at byte " +
                          std::to_string(e.byte) + ": " + e.what());
  }
  return scenario_from_json(j, name_or_path);
}

std::string format_double(double value) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  if (ec != std::errc()) return "nan";
  return std::string(buf, ptr);
}

std::filesystem::path run_directory(const std::filesystem::path& out_dir,
                                    const SimulationLog& log) {
  return out_dir / (log.scenario + "_" + log.controller + "_seed" +
                    std::to_string(log.seed));
}

std::vector<std::string> trajectory_columns(int n_obstacles) {
  std::vector<std::string> cols = {"t", "x", "y", "v", "a_cmd", "vy_cmd"};
  for (int i = 1; i <= n_obstacles; ++i) cols.push_back("d_" + std::to_string(i));
  cols.push_back("v_erpf");
  for (int i = 1; i <= n_obstacles; ++i) cols.push_back("eta_" + std::to_string(i));
  return cols;
}

namespace {

void write_joined(std::ofstream& out, const std::vector<std::string>& fields) {
  for (size_t i = 0; i < fields.size(); ++i) {
    if (i) out << ',';
    out << fields[i];
  }
  out << '\n';
}

}  // namespace

std::filesystem::path export_log(const SimulationLog& log, const Metrics& metrics,
                                 const std::filesystem::path& out_dir) {
  const auto dir = run_directory(out_dir, log);
  std::filesystem::create_directories(dir);

  {
    std::ofstream out(dir / "trajectory.csv", std::ios::binary);
    if (!out) throw ValidationError("export: cannot write " + (dir / "trajectory.csv").string());
    write_joined(out, trajectory_columns(log.n_obstacles));
    for (const auto& rec : log.steps) {
      std::vector<std::string> fields = {
          format_double(rec.t),       format_double(rec.state.x),
          format_double(rec.state.y), format_double(rec.state.v),
          format_double(rec.u.a),     format_double(rec.u.vy)};
      for (double d : rec.obstacle_distance) fields.push_back(format_double(d));
      fields.push_back(format_double(rec.v_erpf));
      for (double e : rec.eta) fields.push_back(format_double(e));
      write_joined(out, fields);
    }
  }

  {
    std::ofstream out(dir / "metrics.txt", std::ios::binary);
    out << "scenario: " << log.scenario << '\n';
    out << "controller: " << log.controller << '\n';
    out << "seed: " << log.seed << '\n';
    out << "steps: " << log.steps.size() << '\n';
    out << "truncated: " << (log.truncated ? 1 : 0) << '\n';
    out << "collision_count: " << metrics.collision_count << '\n';
    out << "min_distance: " << format_double(metrics.min_distance) << '\n';
    out << "avg_speed: " << format_double(metrics.avg_speed) << '\n';
    out << "max_control_delta: " << format_double(metrics.max_control_delta) << '\n';
    out << "lane_change_completion: " << format_double(metrics.lane_change_completion)
        << '\n';
    out << "flops_total: " << metrics.flops_total << '\n';
    out << "flops_per_tick: " << format_double(metrics.flops_per_tick) << '\n';
    out << "flops_per_step: " << format_double(metrics.flops_per_step) << '\n';
    out << "flops_per_interaction: " << format_double(metrics.flops_per_interaction)
        << '\n';
    out << "interactions: " << metrics.interactions << '\n';
  }

  {
    std::ofstream out(dir / "diagnostics.csv", std::ios::binary);
    write_joined(out, {"t", "iterations", "final_cost", "grad_norm", "active_bounds",
                       "converged", "cbf_fallback", "interactions", "interaction_flops",
                       "gradient_flops", "overhead_flops", "stage_evals"});
    for (const auto& rec : log.steps) {
      std::vector<std::string> fields = {
          format_double(rec.t),
          std::to_string(rec.solver.iterations),
          format_double(rec.solver.final_cost),
          format_double(rec.solver.grad_norm),
          std::to_string(rec.solver.active_bounds),
          rec.solver.converged ? "1" : "0",
          rec.cbf_fallback ? "1" : "0",
          std::to_string(rec.flops.interactions),
          std::to_string(rec.flops.interaction_flops),
          std::to_string(rec.flops.gradient_flops),
          std::to_string(rec.flops.overhead_flops),
          std::to_string(rec.flops.stage_evals)};
      write_joined(out, fields);
    }
  }

  return dir;
}

CsvTable read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("read_csv: cannot open " + path.string());
  CsvTable table;
  std::string line;
  if (!std::getline(in, line)) throw ValidationError("read_csv: empty file " + path.string());
  if (!line.empty() && line.back() == '\r') line.pop_back();
  {
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) table.columns.push_back(cell);
  }
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      double v = 0.0;
      auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
      if (ec != std::errc()) {
        throw ValidationError("read_csv: bad number '" + cell + "' in " + path.string());
      }
      (void)ptr;
      row.push_back(v);
    }
    if (row.size() != table.columns.size()) {
      throw ValidationError("read_csv: ragged row in " + path.string());
    }
    table.rows.push_back(std::move(row));
  }
  return table;
}

void FieldGridSpec::validate() const {
  if (nx < 1 || ny < 1) throw ValidationError("field grid: resolution must be >= 1");
  if (!(x1 >= x0) || !(y1 >= y0)) throw ValidationError("field grid: empty extent");
}

FieldGrid dump_field(const VehicleState& ego, std::span<const ObstacleTracker> trackers,
                     const RiskFieldParams& field, const FieldGridSpec& spec) {
  spec.validate();
  FieldGrid grid;
  grid.spec = spec;
  grid.erpf.resize(static_cast<size_t>(spec.nx) * static_cast<size_t>(spec.ny));
  grid.rpf.resize(grid.erpf.size());
  for (int iy = 0; iy < spec.ny; ++iy) {
    const double y = spec.ny == 1 ? spec.y0
                                  : spec.y0 + (spec.y1 - spec.y0) * iy / (spec.ny - 1);
    for (int ix = 0; ix < spec.nx; ++ix) {
      const double x = spec.nx == 1 ? spec.x0
                                    : spec.x0 + (spec.x1 - spec.x0) * ix / (spec.nx - 1);
      const VehicleState cell{x, y, ego.v};
      const size_t idx = static_cast<size_t>(iy) * static_cast<size_t>(spec.nx) +
                         static_cast<size_t>(ix);
      grid.erpf[idx] = erpf_value(cell, trackers, 0.0, field);
      grid.rpf[idx] = rpf_total(cell, trackers, 0.0, field);
    }
  }
  return grid;
}

void write_field_csv(const FieldGrid& grid, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("field: cannot write " + path.string());
  write_joined(out, {"x", "y", "v_erpf", "v_rpf"});
  for (int iy = 0; iy < grid.spec.ny; ++iy) {
    const double y = grid.spec.ny == 1
                         ? grid.spec.y0
                         : grid.spec.y0 + (grid.spec.y1 - grid.spec.y0) * iy /
                               (grid.spec.ny - 1);
    for (int ix = 0; ix < grid.spec.nx; ++ix) {
      const double x = grid.spec.nx == 1
                           ? grid.spec.x0
                           : grid.spec.x0 + (grid.spec.x1 - grid.spec.x0) * ix /
                                 (grid.spec.nx - 1);
      const size_t idx = static_cast<size_t>(iy) * static_cast<size_t>(grid.spec.nx) +
                         static_cast<size_t>(ix);
      write_joined(out, {format_double(x), format_double(y),
                         format_double(grid.erpf[idx]), format_double(grid.rpf[idx])});
    }
  }
}

void write_sweep_csv(std::span<const SweepCell> cells, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("sweep: cannot write " + path.string());
  write_joined(out, {"ttc", "twh", "a", "b", "aspect_ratio"});
  for (const auto& cell : cells) {
    write_joined(out, {format_double(cell.ttc), format_double(cell.twh),
                       format_double(cell.a), format_double(cell.b),
                       format_double(cell.aspect_ratio)});
  }
}

void read_replay_csv(const std::filesystem::path& path, std::vector<double>& t,
                     std::vector<int>& vehicle_id, std::vector<double>& x,
                     std::vector<double>& y) {
  const CsvTable table = read_csv(path);
  const std::vector<std::string> expected = {"t", "vehicle_id", "x", "y"};
  if (table.columns != expected) {
    throw ValidationError("replay: expected header t,vehicle_id,x,y in " + path.string());
  }
  t.clear();
  vehicle_id.clear();
  x.clear();
  y.clear();
  for (const auto& row : table.rows) {
    t.push_back(row[0]);
    vehicle_id.push_back(static_cast<int>(std::lround(row[1])));
    x.push_back(row[2]);
    y.push_back(row[3]);
  }
}

}  // namespace erpf
