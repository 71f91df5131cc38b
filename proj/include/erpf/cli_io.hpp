#ifndef ERPF_CLI_IO_HPP_
#define ERPF_CLI_IO_HPP_

#include <filesystem>
#include <string>
#include <vector>

#include "erpf/sim.hpp"

namespace erpf {

/// Operator-facing run description. `scenario` is a preset name or a path to
/// a scenario JSON file; overrides address any tunable by flat key.
struct RunConfig {
  std::string scenario = "scenario1";
  std::string controller = "erpf";
  std::uint64_t seed = 0;
  int runs = 20;
  std::string out_dir = "runs";
  SimParams params;
};

/// Parses and validates a JSON config; an empty file yields all defaults.
/// Unknown keys are rejected with the offending key named.
RunConfig load_config(const std::string& path);
RunConfig parse_config(const std::string& text, const std::string& origin);

/// Canonical JSON with every effective value; load(serialize(cfg))
/// reproduces cfg exactly.
std::string serialize_config(const RunConfig& cfg);

/// Applies one --set key=value override.
void apply_override(RunConfig& cfg, const std::string& key, const std::string& value);
std::vector<std::string> override_keys();

/// Scenario from a preset name or a scenario JSON file path.
Scenario resolve_scenario(const std::string& name_or_path);

/// Shortest round-trip decimal form of a double.
std::string format_double(double value);

/// Per-run export directory: <out>/<scenario>_<controller>_seed<seed>.
std::filesystem::path run_directory(const std::filesystem::path& out_dir,
                                    const SimulationLog& log);

/// Writes trajectory.csv, metrics.txt and diagnostics.csv; returns the run
/// directory. Column orders are fixed and documented in docs/formats.md.
std::filesystem::path export_log(const SimulationLog& log, const Metrics& metrics,
                                 const std::filesystem::path& out_dir);

/// Columns of trajectory.csv for n obstacles.
std::vector<std::string> trajectory_columns(int n_obstacles);

struct CsvTable {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
};

CsvTable read_csv(const std::filesystem::path& path);

struct FieldGridSpec {
  double x0 = 0.0, x1 = 1.0;
  double y0 = 0.0, y1 = 1.0;
  int nx = 10, ny = 10;

  void validate() const;
};

/// Row-major field samples for external plotting.
struct FieldGrid {
  FieldGridSpec spec;
  std::vector<double> erpf;  // ny * nx, row-major over y then x
  std::vector<double> rpf;
};

FieldGrid dump_field(const VehicleState& ego, std::span<const ObstacleTracker> trackers,
                     const RiskFieldParams& field, const FieldGridSpec& spec);

void write_field_csv(const FieldGrid& grid, const std::filesystem::path& path);

void write_sweep_csv(std::span<const SweepCell> cells, const std::filesystem::path& path);

/// Replay input: CSV with header t,vehicle_id,x,y.
void read_replay_csv(const std::filesystem::path& path, std::vector<double>& t,
                     std::vector<int>& vehicle_id, std::vector<double>& x,
                     std::vector<double>& y);

}  // namespace erpf

#endif  // ERPF_CLI_IO_HPP_
