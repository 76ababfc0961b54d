#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>

#include "diffpump/harness.hpp"

using namespace diffpump;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           fs::path("diffpump_test_" +
                    std::to_string(std::chrono::steady_clock::now()
                                       .time_since_epoch()
                                       .count()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  fs::path file(const std::string& name, const std::string& content) const {
    const fs::path p = path / name;
    std::ofstream out(p, std::ios::binary);
    out << content;
    return p;
  }
};

const char* kEasyFix = "min 1 1\nrow >= 1 1 1\nbin 0 1\n";
const char* kHardFix = "min 1 1\nrow = 2 2 1\nbin 0 1\n";  // no 0/1 point
const char* kInfeasFix = "min 0 0\nrow >= 1 1 3\nbin 0 1\n";

}  // namespace

TEST_CASE("load_instance names after the file stem") {
  TempDir dir;
  auto p = dir.file("cover3.fix", kEasyFix);
  MilpInstance inst = load_instance(p);
  CHECK(inst.name == "cover3");
  CHECK(inst.num_vars == 2);
  CHECK(inst.num_binary() == 2);
}

TEST_CASE("list_instances filters and sorts by filename") {
  TempDir dir;
  dir.file("b.fix", kEasyFix);
  dir.file("a.mps", "ROWS\n N obj\nCOLUMNS\nENDATA\n");
  dir.file("c.txt", "ignored");
  dir.file("notes.md", "ignored");
  auto files = list_instances(dir.path);
  REQUIRE(files.size() == 2);
  CHECK(files[0].filename() == "a.mps");
  CHECK(files[1].filename() == "b.fix");
}

TEST_CASE("run_one fills a complete row") {
  TempDir dir;
  MilpInstance inst = load_instance(dir.file("easy.fix", kEasyFix));
  PumpConfig cfg = make_preset("FP");
  cfg.seed = 3;
  SuiteRow row = run_one(inst, cfg);
  CHECK(row.instance == "easy");
  CHECK(row.preset == "FP");
  CHECK(row.status == "Found");
  CHECK(row.iterations == 1);
  CHECK(row.restarts == 0);
  CHECK(row.restart_ratio == 0.0);
  CHECK(row.seed == 3);
  CHECK(row.jacobian == std::string("identity"));
  CHECK(row.optimizer == std::string("gd"));
}

TEST_CASE("suite aggregates count fails and restarts") {
  TempDir dir;
  dir.file("easy.fix", kEasyFix);
  dir.file("hard.fix", kHardFix);
  dir.file("infeas.fix", kInfeasFix);
  PumpConfig cfg = make_preset("FP");
  cfg.n_max = 25;
  SuiteReport rep = run_suite(list_instances(dir.path), cfg);
  REQUIRE(rep.rows.size() == 3);
  CHECK(rep.rows[0].status == "Found");
  CHECK(rep.rows[1].status == "IterationLimit");
  CHECK(rep.rows[2].status == "LpInfeasible");
  CHECK(rep.num_fails == 2);
  CHECK(rep.total_iterations == 1 + 25 + 0);
  CHECK(rep.total_restarts == rep.rows[1].restarts);
  CHECK_THAT(rep.restart_ratio_overall,
             Catch::Matchers::WithinAbs(
                 100.0 * rep.total_restarts / rep.total_iterations, 1e-12));
}

TEST_CASE("parse failures become rows excluded from the aggregates") {
  TempDir dir;
  dir.file("easy.fix", kEasyFix);
  dir.file("broken.fix", "min 1\nrow >= 1\n");  // wrong arity
  dir.file("ranged.mps",
           "ROWS\n N obj\n G c\nCOLUMNS\n X c 1\nRANGES\n R c 1\nENDATA\n");
  PumpConfig cfg = make_preset("FP");
  SuiteReport rep = run_suite(list_instances(dir.path), cfg);
  REQUIRE(rep.rows.size() == 3);
  CHECK(rep.rows[0].status == "ParseError");   // broken.fix
  CHECK(rep.rows[1].status == "Found");        // easy.fix
  CHECK(rep.rows[2].status == "ParseError");   // ranged.mps
  CHECK(rep.num_fails == 0);
  CHECK(rep.total_iterations == 1);
}

TEST_CASE("parallel suite runs match the serial rows") {
  TempDir dir;
  dir.file("a.fix", kEasyFix);
  dir.file("b.fix", kHardFix);
  dir.file("c.fix", kEasyFix);
  dir.file("d.fix", kHardFix);
  PumpConfig cfg = make_preset("FP");
  cfg.n_max = 20;
  auto files = list_instances(dir.path);
  SuiteReport serial = run_suite(files, cfg, 1);
  SuiteReport parallel = run_suite(files, cfg, 4);
  REQUIRE(serial.rows.size() == parallel.rows.size());
  for (std::size_t i = 0; i < serial.rows.size(); ++i) {
    CHECK(serial.rows[i].instance == parallel.rows[i].instance);
    CHECK(serial.rows[i].status == parallel.rows[i].status);
    CHECK(serial.rows[i].iterations == parallel.rows[i].iterations);
    CHECK(serial.rows[i].restarts == parallel.rows[i].restarts);
    CHECK(serial.rows[i].seed == parallel.rows[i].seed);
  }
}

TEST_CASE("per-instance seeds depend on the filename, not the file set") {
  TempDir dir;
  dir.file("b.fix", kHardFix);
  PumpConfig cfg = make_preset("FP");
  cfg.seed = 99;
  cfg.n_max = 15;
  SuiteReport before = run_suite(list_instances(dir.path), cfg);
  dir.file("a.fix", kEasyFix);  // sorts in front of b.fix
  SuiteReport after = run_suite(list_instances(dir.path), cfg);
  REQUIRE(after.rows.size() == 2);
  CHECK(after.rows[1].instance == "b");
  CHECK(after.rows[1].seed == before.rows[0].seed);
  CHECK(after.rows[1].iterations == before.rows[0].iterations);
  CHECK(before.rows[0].seed == mix_seed(99, fnv1a("b.fix")));
}

TEST_CASE("suite CSV round-trips") {
  TempDir dir;
  dir.file("easy.fix", kEasyFix);
  dir.file("hard.fix", kHardFix);
  PumpConfig cfg = make_preset("DP2");
  cfg.n_max = 10;
  SuiteReport rep = run_suite(list_instances(dir.path), cfg);
  SuiteReport back = parse_suite_csv(suite_csv(rep));
  REQUIRE(back.rows.size() == rep.rows.size());
  for (std::size_t i = 0; i < rep.rows.size(); ++i) {
    CHECK(back.rows[i].instance == rep.rows[i].instance);
    CHECK(back.rows[i].preset == rep.rows[i].preset);
    CHECK(back.rows[i].eta == rep.rows[i].eta);
    CHECK(back.rows[i].gamma == rep.rows[i].gamma);
    CHECK(back.rows[i].p == rep.rows[i].p);
    CHECK(back.rows[i].status == rep.rows[i].status);
    CHECK(back.rows[i].iterations == rep.rows[i].iterations);
    CHECK(back.rows[i].restarts == rep.rows[i].restarts);
    CHECK(back.rows[i].seed == rep.rows[i].seed);
  }
  CHECK(back.num_fails == rep.num_fails);
  CHECK(back.total_iterations == rep.total_iterations);
  CHECK(back.total_restarts == rep.total_restarts);
}

TEST_CASE("suite CSV rejects a foreign header") {
  CHECK_THROWS_AS(parse_suite_csv("instance,status\nx,Found\n"), ParseError);
}

TEST_CASE("grid spec parsing") {
  GridSpec g = parse_grid_spec(
      "# comment\neta 0.5 1\ngamma 0.1 0.9\n\nmomentum 0.8\n");
  CHECK(g.eta == std::vector<double>{0.5, 1.0});
  CHECK(g.gamma == std::vector<double>{0.1, 0.9});
  CHECK(g.p == std::vector<double>{1.0});       // untouched default
  CHECK(g.momentum == std::vector<double>{0.8});
  CHECK_THROWS_MATCHES(
      parse_grid_spec("eta 1\nrho 2\n"), ParseError,
      Catch::Matchers::Message("grid file line 2: unknown axis 'rho'"));
  CHECK_THROWS_AS(parse_grid_spec("eta\n"), ParseError);
  CHECK_THROWS_AS(parse_grid_spec("eta x\n"), ParseError);
}

TEST_CASE("grid enumeration order and size") {
  GridSpec g;
  g.eta = {0.5, 1.0};
  g.gamma = {0.1, 0.9};
  g.momentum = {};
  auto cfgs = grid_configs(g, PumpConfig{});
  REQUIRE(cfgs.size() == 4);
  CHECK(cfgs[0].eta == 0.5);
  CHECK(cfgs[0].weights.gamma == 0.1);
  CHECK(cfgs[1].eta == 0.5);
  CHECK(cfgs[1].weights.gamma == 0.9);
  CHECK(cfgs[2].eta == 1.0);
  for (const auto& c : cfgs) {
    CHECK(c.preset_name == "grid");
    CHECK(c.optimizer.kind == OptimizerKind::Plain);
  }
  g.momentum = {0.5, 0.9};
  auto with_mom = grid_configs(g, PumpConfig{});
  REQUIRE(with_mom.size() == 8);
  CHECK(with_mom[0].optimizer.kind == OptimizerKind::Momentum);
  CHECK(with_mom[0].optimizer.momentum == 0.5);
  CHECK(with_mom[1].optimizer.momentum == 0.9);
}

TEST_CASE("grid summary ranks by fails then iterations") {
  std::vector<GridPoint> pts(3);
  pts[0].report.rows.push_back({});
  pts[0].report.num_fails = 1;
  pts[0].report.total_iterations = 5;
  pts[1].report.num_fails = 0;
  pts[1].report.total_iterations = 40;
  pts[2].report.num_fails = 0;
  pts[2].report.total_iterations = 12;
  auto rows = grid_summary(pts);
  REQUIRE(rows.size() == 3);
  CHECK(rows[0].config_index == 2);
  CHECK(rows[1].config_index == 1);
  CHECK(rows[2].config_index == 0);
}

TEST_CASE("run_grid evaluates every configuration on every instance") {
  TempDir dir;
  dir.file("easy.fix", kEasyFix);
  dir.file("hard.fix", kHardFix);
  GridSpec g;
  g.eta = {0.5, 1.0};
  PumpConfig base;
  base.n_max = 10;
  auto points = run_grid(g, base, list_instances(dir.path));
  REQUIRE(points.size() == 2);
  for (const GridPoint& p : points) {
    REQUIRE(p.report.rows.size() == 2);
    CHECK(p.report.rows[0].status == "Found");
    CHECK(p.report.rows[1].status == "IterationLimit");
  }
  CHECK(points[0].cfg.eta == 0.5);
  CHECK(points[1].cfg.eta == 1.0);
}
