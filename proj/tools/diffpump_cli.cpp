// Command-line harness: single runs, suite runs over instance directories,
// and hyperparameter grid search with CSV/JSON reports.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "diffpump/engine.hpp"
#include "diffpump/harness.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace diffpump;

namespace {

struct CommonFlags {
  std::string preset;
  std::optional<double> eta, gamma, alpha, beta, lambda, p, eps_round, eps_feas;
  std::string jacobian = "identity";
  double pert_eps = 1.0;
  int pert_samples = 1;
  std::string optimizer = "gd";
  double momentum = 0.5;
  int max_iters = 1000;
  std::uint64_t seed = 0;
  double tol = 1e-6;
  std::string out_path;
  std::string format = "csv";
  int jobs = 1;
  bool trace = false;
};

void add_common_flags(CLI::App* app, CommonFlags& f) {
  app->add_option("--preset", f.preset, "Preset name: FP, DP1, DP2, DP3, DP4");
  app->add_option("--eta", f.eta, "Step size");
  app->add_option("--gamma", f.gamma, "Regularization weight");
  app->add_option("--alpha", f.alpha, "Cost-term weight");
  app->add_option("--beta", f.beta, "Integrality-loss weight");
  app->add_option("--lambda", f.lambda, "Feasibility-loss weight");
  app->add_option("--p", f.p, "Integrality loss order");
  app->add_option("--eps-round", f.eps_round, "Soft-rounding scale");
  app->add_option("--eps-feas", f.eps_feas, "Feasibility slack deadband");
  app->add_option("--jacobian", f.jacobian, "identity | perturbation")
      ->check(CLI::IsMember({"identity", "perturbation"}));
  app->add_option("--pert-eps", f.pert_eps, "Perturbation scale");
  app->add_option("--pert-samples", f.pert_samples, "Perturbation samples M");
  app->add_option("--optimizer", f.optimizer, "gd | momentum | adam")
      ->check(CLI::IsMember({"gd", "momentum", "adam"}));
  app->add_option("--momentum", f.momentum, "Momentum coefficient");
  app->add_option("--max-iters", f.max_iters, "Iteration limit N_max");
  app->add_option("--seed", f.seed, "Base RNG seed");
  app->add_option("--tol", f.tol, "Integrality/feasibility tolerance");
  app->add_option("--out", f.out_path, "Output file (default stdout)");
  app->add_option("--format", f.format, "csv | json")
      ->check(CLI::IsMember({"csv", "json"}));
  app->add_option("--jobs", f.jobs, "Parallel workers for suite/grid");
  app->add_flag("--trace", f.trace, "Dump the full trace as JSON lines");
}

PumpConfig build_config(const CommonFlags& f) {
  PumpConfig cfg = f.preset.empty() ? PumpConfig{} : make_preset(f.preset);
  if (f.eta) cfg.eta = *f.eta;
  if (f.gamma) cfg.weights.gamma = *f.gamma;
  if (f.alpha) cfg.weights.alpha = *f.alpha;
  if (f.beta) cfg.weights.beta = *f.beta;
  if (f.lambda) cfg.weights.lambda = *f.lambda;
  if (f.p) cfg.weights.p = *f.p;
  if (f.eps_round) cfg.weights.eps_round = *f.eps_round;
  if (f.eps_feas) cfg.weights.eps_feas = *f.eps_feas;
  if (f.jacobian == "perturbation")
    cfg.jacobian = JacobianMode::perturbation(f.pert_eps, f.pert_samples);
  if (f.optimizer == "momentum") {
    cfg.optimizer.kind = OptimizerKind::Momentum;
    cfg.optimizer.momentum = f.momentum;
  } else if (f.optimizer == "adam") {
    cfg.optimizer.kind = OptimizerKind::Adam;
  }
  cfg.n_max = f.max_iters;
  cfg.seed = f.seed;
  cfg.tol = f.tol;
  cfg.keep_trace = f.trace;
  cfg.validate();
  return cfg;
}

void write_output(const std::string& path, const std::string& content) {
  if (path.empty()) {
    std::cout << content;
  } else {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open output file '" + path + "'");
    out << content;
  }
}

json row_json(const SuiteRow& r) {
  return json{{"instance", r.instance},
              {"preset", r.preset},
              {"eta", r.eta},
              {"gamma", r.gamma},
              {"alpha", r.alpha},
              {"beta", r.beta},
              {"lambda", r.lambda},
              {"p", r.p},
              {"jacobian", r.jacobian},
              {"optimizer", r.optimizer},
              {"seed", r.seed},
              {"status", r.status},
              {"iterations", r.iterations},
              {"restarts", r.restarts},
              {"restart_ratio", r.restart_ratio},
              {"objective", r.objective},
              {"wall_ms", r.wall_ms}};
}

json report_json(const SuiteReport& rep) {
  json rows = json::array();
  for (const SuiteRow& r : rep.rows) rows.push_back(row_json(r));
  return json{{"rows", rows},
              {"aggregates",
               {{"fails", rep.num_fails},
                {"iterations", rep.total_iterations},
                {"restarts", rep.total_restarts},
                {"restart_ratio", rep.restart_ratio_overall}}}};
}

void dump_trace(const PumpResult& res, const std::string& instance) {
  for (const TraceEntry& e : res.trace) {
    json j{{"instance", instance},
           {"k", e.k},
           {"theta", e.theta},
           {"x_hat", e.x_hat},
           {"x_round", e.x_round},
           {"loss",
            {{"cost", e.loss.cost_term},
             {"integrality", e.loss.integrality_term},
             {"feasibility", e.loss.feasibility_term},
             {"regularization", e.loss.regularization_term},
             {"total", e.loss.total}}},
           {"restart", e.restart == RestartKind::None
                           ? "none"
                           : (e.restart == RestartKind::Flip ? "flip"
                                                             : "perturb")},
           {"flip_count", e.flip_count}};
    std::cerr << j.dump() << "\n";
  }
}

int exit_code(const std::string& status) {
  if (status == "Found") return 0;
  if (status == "IterationLimit") return 2;
  if (status == "LpInfeasible") return 3;
  return 1;
}

int cmd_run(const CommonFlags& f, const std::string& instance_path) {
  PumpConfig cfg = build_config(f);
  MilpInstance inst = load_instance(instance_path);
  SuiteRow row = describe_config(cfg);
  row.instance = inst.name;
  row.seed = cfg.seed;
  PumpResult res = run_differentiable_pump(inst, cfg);
  row.status = status_name(res.status);
  row.iterations = res.iterations;
  row.restarts = res.restarts;
  row.restart_ratio =
      res.iterations > 0 ? 100.0 * res.restarts / res.iterations : 0.0;
  row.objective = res.status == PumpStatus::Found ? res.objective : 0.0;
  row.wall_ms = res.wall_ms;
  if (f.trace) dump_trace(res, inst.name);
  if (f.format == "json") {
    write_output(f.out_path, row_json(row).dump(2) + "\n");
  } else {
    write_output(f.out_path,
                 std::string(kCsvHeader) + "\n" + csv_row(row) + "\n");
  }
  return exit_code(row.status);
}

int cmd_suite(const CommonFlags& f, const std::string& dir) {
  PumpConfig cfg = build_config(f);
  auto files = list_instances(dir);
  if (files.empty()) {
    std::cerr << "error: no .mps or .fix instances in '" << dir << "'\n";
    return 1;
  }
  SuiteReport rep = run_suite(files, cfg, f.jobs);
  if (f.format == "json")
    write_output(f.out_path, report_json(rep).dump(2) + "\n");
  else
    write_output(f.out_path, suite_csv(rep));
  return 0;
}

int cmd_grid(const CommonFlags& f, const std::string& dir,
             const std::string& grid_path) {
  PumpConfig base = build_config(f);
  GridSpec spec = parse_grid_spec(read_file(grid_path));
  auto files = list_instances(dir);
  if (files.empty()) {
    std::cerr << "error: no .mps or .fix instances in '" << dir << "'\n";
    return 1;
  }
  auto points = run_grid(spec, base, files, f.jobs);
  auto summary = grid_summary(points);
  std::ostringstream os;
  os << "eta,gamma,p,lambda,beta,optimizer,momentum,iterations,fails,best\n";
  for (std::size_t rank = 0; rank < summary.size(); ++rank) {
    const auto& s = summary[rank];
    const PumpConfig& c = points[s.config_index].cfg;
    os << format_real(c.eta) << ',' << format_real(c.weights.gamma) << ','
       << format_real(c.weights.p) << ',' << format_real(c.weights.lambda)
       << ',' << format_real(c.weights.beta) << ','
       << optimizer_name(c.optimizer) << ','
       << (c.optimizer.kind == OptimizerKind::Momentum
               ? format_real(c.optimizer.momentum)
               : "-")
       << ',' << s.iterations << ',' << s.fails << ','
       << (rank == 0 ? "*" : "") << '\n';
  }
  write_output(f.out_path, os.str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Differentiable feasibility pump for binary MILPs"};
  app.require_subcommand(1);

  CommonFlags run_flags, suite_flags, grid_flags;
  std::string run_instance, suite_dir, grid_dir, grid_file;

  CLI::App* run = app.add_subcommand("run", "Run one pump on one instance");
  run->add_option("--instance", run_instance, "Instance file (.mps or .fix)")
      ->required()
      ->check(CLI::ExistingFile);
  add_common_flags(run, run_flags);

  CLI::App* suite =
      app.add_subcommand("suite", "Run one config over an instance directory");
  suite->add_option("--dir", suite_dir, "Instance directory")
      ->required()
      ->check(CLI::ExistingDirectory);
  add_common_flags(suite, suite_flags);

  CLI::App* grid =
      app.add_subcommand("grid", "Grid search over an instance directory");
  grid->add_option("--dir", grid_dir, "Instance directory")
      ->required()
      ->check(CLI::ExistingDirectory);
  grid->add_option("--grid", grid_file, "Grid spec file")
      ->required()
      ->check(CLI::ExistingFile);
  add_common_flags(grid, grid_flags);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    if (run->parsed()) return cmd_run(run_flags, run_instance);
    if (suite->parsed()) return cmd_suite(suite_flags, suite_dir);
    if (grid->parsed()) return cmd_grid(grid_flags, grid_dir, grid_file);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const UnsupportedFeature& e) {
    std::cerr << "error: unsupported feature: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
