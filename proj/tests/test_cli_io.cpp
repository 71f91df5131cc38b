#include <doctest.h>

#include <charconv>
#include <filesystem>
#include <fstream>
#include <random>

#include "erpf/cli_io.hpp"
#include "erpf/errors.hpp"

using namespace erpf;

namespace {

std::filesystem::path temp_dir() {
  auto dir = std::filesystem::temp_directory_path() / "erpf_io_test";
  std::filesystem::create_directories(dir);
  return dir;
}

std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), {});
}

SimulationLog tiny_log() {
  Scenario sc;
  sc.name = "io";
  sc.ego = {0.0, 1.75, 30.0};
  sc.obstacles = {{1, {20.0, 1.75}, {12.0, 0.0}, 2.0}, {2, {15.0, 5.25}, {20.0, 0.0}, 2.0}};
  sc.kind = ReferenceKind::kLaneKeep;
  sc.v_ref = 30.0;
  sc.duration = 1.5;
  SimParams params;
  params.horizon = 12;
  return run_scenario(sc, ControllerKind::kErpf, 11, params);
}

}  // namespace

TEST_CASE("config defaults and round trip") {
  const RunConfig defaults = parse_config("", "test");
  CHECK(defaults.scenario == "scenario1");
  CHECK(defaults.controller == "erpf");
  CHECK(defaults.params.field.d_safe == doctest::Approx(10.0));

  const std::string text = serialize_config(defaults);
  const RunConfig reloaded = parse_config(text, "test");
  CHECK(serialize_config(reloaded) == text);

  RunConfig tweaked = defaults;
  apply_override(tweaked, "gamma", "314.5");
  apply_override(tweaked, "n_history", "7");
  apply_override(tweaked, "use_ellipse_weight", "false");
  const RunConfig reloaded2 = parse_config(serialize_config(tweaked), "test");
  CHECK(serialize_config(reloaded2) == serialize_config(tweaked));
  CHECK(reloaded2.params.weights.gamma == doctest::Approx(314.5));
  CHECK(reloaded2.params.field.gamma == doctest::Approx(314.5));
  CHECK(reloaded2.params.field.n_history == 7);
  CHECK_FALSE(reloaded2.params.use_ellipse_weight);
}

TEST_CASE("config rejects unknown keys and bad values") {
  CHECK_THROWS_AS(parse_config(R"({"scnario": "x"})", "test"), ValidationError);
  CHECK_THROWS_AS(parse_config(R"({"overrides": {"d_saf": 1}})", "test"), ValidationError);
  CHECK_THROWS_AS(parse_config(R"({"overrides": {"d_safe": 0}})", "test"), ValidationError);
  CHECK_THROWS_AS(parse_config(R"({"controller": "magic"})", "test"), ValidationError);
  RunConfig cfg;
  CHECK_THROWS_AS(apply_override(cfg, "nope", "1"), ValidationError);
  CHECK_THROWS_AS(apply_override(cfg, "gamma", "many"), ValidationError);
}

TEST_CASE("config parse errors carry the byte position") {
  try {
    parse_config("{\"scenario\": }", "test");
    FAIL("expected a parse error");
  } catch (const ValidationError& e) {
    CHECK(std::string(e.what()).find("byte") != std::string::npos);
  }
}

TEST_CASE("preset resolution through the config surface") {
  const auto sc = resolve_scenario("scenario1");
  CHECK(sc.ego.y == doctest::Approx(1.75));
  CHECK(sc.obstacles[0].p0.x() == doctest::Approx(50.0));
  CHECK_THROWS(resolve_scenario("missing_file.json"));

  const auto path = temp_dir() / "custom.json";
  {
    std::ofstream out(path);
    out << R"({"name": "custom", "ego": [0, 1.75, 20],
               "obstacles": [{"id": 1, "x": 30, "y": 1.75, "vx": 10, "vy": 0}],
               "kind": "lane_keep", "v_ref": 20, "duration": 2.0, "dt": 0.1})";
  }
  const auto custom = resolve_scenario(path.string());
  CHECK(custom.name == "custom");
  CHECK(custom.obstacles.size() == 1);

  {
    std::ofstream out(path);
    out << R"({"name": "bad", "egoo": [0, 0, 0]})";
  }
  CHECK_THROWS(resolve_scenario(path.string()));
}

TEST_CASE("format_double round-trips bitwise") {
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> dist(-1e6, 1e6);
  for (int i = 0; i < 2000; ++i) {
    const double v = dist(rng);
    const std::string s = format_double(v);
    double back = 0.0;
    std::from_chars(s.data(), s.data() + s.size(), back);
    CHECK(back == v);
  }
  CHECK(format_double(0.1) == "0.1");
}

TEST_CASE("trajectory export") {
  const auto log = tiny_log();
  const auto metrics = compute_metrics(log, 2.0);
  const auto out = temp_dir() / "runs";
  std::filesystem::remove_all(out);
  const auto dir = export_log(log, metrics, out);

  SUBCASE("run directory is named by scenario, controller and seed") {
    CHECK(dir.filename().string() == "io_erpf_seed11");
  }

  SUBCASE("header matches the documented column order") {
    const auto table = read_csv(dir / "trajectory.csv");
    CHECK(table.columns == trajectory_columns(2));
    CHECK(table.columns[0] == "t");
    CHECK(table.columns[6] == "d_1");
    CHECK(table.columns[8] == "v_erpf");
    CHECK(table.columns[9] == "eta_1");
  }

  SUBCASE("round trip reproduces the trajectory") {
    const auto table = read_csv(dir / "trajectory.csv");
    REQUIRE(table.rows.size() == log.steps.size());
    for (size_t k = 0; k < log.steps.size(); ++k) {
      CHECK(std::abs(table.rows[k][1] - log.steps[k].state.x) <= 1e-9);
      CHECK(std::abs(table.rows[k][2] - log.steps[k].state.y) <= 1e-9);
      CHECK(std::abs(table.rows[k][3] - log.steps[k].state.v) <= 1e-9);
      CHECK(std::abs(table.rows[k][4] - log.steps[k].u.a) <= 1e-9);
      CHECK(std::abs(table.rows[k][6] - log.steps[k].obstacle_distance[0]) <= 1e-9);
      CHECK(std::abs(table.rows[k][8] - log.steps[k].v_erpf) <= 1e-9);
    }
  }

  SUBCASE("metrics summary carries the required keys") {
    const std::string text = slurp(dir / "metrics.txt");
    CHECK(text.find("collision_count:") != std::string::npos);
    CHECK(text.find("min_distance:") != std::string::npos);
    CHECK(text.find("avg_speed:") != std::string::npos);
  }

  SUBCASE("exports are byte-identical across repeated runs") {
    const std::string traj = slurp(dir / "trajectory.csv");
    const std::string diag = slurp(dir / "diagnostics.csv");
    const std::string mets = slurp(dir / "metrics.txt");
    const auto log2 = tiny_log();
    const auto dir2 = export_log(log2, compute_metrics(log2, 2.0), out);
    CHECK(slurp(dir2 / "trajectory.csv") == traj);
    CHECK(slurp(dir2 / "diagnostics.csv") == diag);
    CHECK(slurp(dir2 / "metrics.txt") == mets);
  }
}

TEST_CASE("field grid dump") {
  RiskFieldParams field;
  std::vector<ObstacleTracker> trackers;
  trackers.emplace_back(Obstacle{1, {20.0, 1.75}, {10.0, 0.0}, 2.0}, field.n_history);
  trackers.emplace_back(Obstacle{2, {28.0, 5.25}, {15.0, 0.0}, 2.0}, field.n_history);
  for (auto& tr : trackers) tr.eta = evolution_factor(9.0, 6.0, field);

  FieldGridSpec spec{0.0, 40.0, 0.0, 7.0, 60, 20};
  const VehicleState ego{10.0, 1.75, 25.0};
  const auto grid = dump_field(ego, trackers, field, spec);

  SUBCASE("far cells are zero") {
    // cell (0, 0) sits 20+ m from both obstacles
    CHECK(grid.erpf.front() == 0.0);
  }
  SUBCASE("erpf dominates rpf on every cell") {
    for (size_t i = 0; i < grid.erpf.size(); ++i) {
      CHECK(grid.erpf[i] >= grid.rpf[i]);
    }
  }
  SUBCASE("approaching tick peaks above a receding tick at equal distance") {
    auto approaching = trackers;
    auto receding = trackers;
    for (auto& tr : approaching) tr.eta = evolution_factor(9.0, 6.0, field);
    for (auto& tr : receding) tr.eta = evolution_factor(3.0, 6.0, field);
    const auto ga = dump_field(ego, approaching, field, spec);
    const auto gr = dump_field(ego, receding, field, spec);
    const double peak_a = *std::max_element(ga.erpf.begin(), ga.erpf.end());
    const double peak_r = *std::max_element(gr.erpf.begin(), gr.erpf.end());
    CHECK(peak_a > peak_r);
  }
  SUBCASE("csv export shape") {
    const auto path = temp_dir() / "field.csv";
    write_field_csv(grid, path);
    const auto table = read_csv(path);
    CHECK(table.columns == std::vector<std::string>{"x", "y", "v_erpf", "v_rpf"});
    CHECK(table.rows.size() == static_cast<size_t>(spec.nx) * spec.ny);
  }
  CHECK_THROWS(FieldGridSpec{0, 1, 0, 1, 0, 5}.validate());
}

TEST_CASE("sweep csv format") {
  EllipseParams p;
  const std::vector<double> g{1.0, 2.0};
  const auto cells = aspect_ratio_sweep(g, g, 10.0, 2.0, p);
  const auto path = temp_dir() / "sweep.csv";
  write_sweep_csv(cells, path);
  const auto table = read_csv(path);
  CHECK(table.columns ==
        std::vector<std::string>{"ttc", "twh", "a", "b", "aspect_ratio"});
  CHECK(table.rows.size() == 4);
}

TEST_CASE("replay csv parsing") {
  const auto path = temp_dir() / "replay.csv";
  {
    std::ofstream out(path);
    out << "t,vehicle_id,x,y\n0,1,10,1.75\n0.5,1,15,1.75\n";
  }
  std::vector<double> t, x, y;
  std::vector<int> id;
  read_replay_csv(path, t, id, x, y);
  REQUIRE(t.size() == 2);
  CHECK(id[0] == 1);
  CHECK(x[1] == doctest::Approx(15.0));

  {
    std::ofstream out(path);
    out << "time,vehicle,x,y\n0,1,10,1.75\n";
  }
  CHECK_THROWS(read_replay_csv(path, t, id, x, y));
}
