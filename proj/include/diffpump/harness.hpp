#ifndef DIFFPUMP_HARNESS_HPP
#define DIFFPUMP_HARNESS_HPP

#include <algorithm>
#include <atomic>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "diffpump/common.hpp"
#include "diffpump/engine.hpp"
#include "diffpump/mps.hpp"

namespace diffpump {

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open '" + path.string() + "'");
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

// .fix files use the native fixture grammar; anything else is read as MPS.
inline MilpInstance load_instance(const std::filesystem::path& path) {
  const std::string text = read_file(path);
  MpsModel m = path.extension() == ".fix" ? parse_fixture(text) : parse_mps(text);
  if (m.name.empty()) m.name = path.stem().string();
  MilpInstance inst = canonicalize(m);
  inst.name = path.stem().string();
  return inst;
}

struct SuiteRow {
  std::string instance;
  std::string preset;
  double eta = 0, gamma = 0, alpha = 0, beta = 0, lambda = 0, p = 0;
  std::string jacobian;
  std::string optimizer;
  std::uint64_t seed = 0;
  std::string status;  // Found | IterationLimit | LpInfeasible | ParseError
  int iterations = 0;
  int restarts = 0;
  double restart_ratio = 0.0;  // percent
  double objective = 0.0;
  double wall_ms = 0.0;
};

struct SuiteReport {
  std::vector<SuiteRow> rows;
  int num_fails = 0;             // IterationLimit + LpInfeasible
  long long total_iterations = 0;
  long long total_restarts = 0;
  double restart_ratio_overall = 0.0;  // percent

  void recompute_aggregates() {
    num_fails = 0;
    total_iterations = 0;
    total_restarts = 0;
    for (const SuiteRow& r : rows) {
      if (r.status == "ParseError") continue;  // excluded from totals
      if (r.status != "Found") ++num_fails;
      total_iterations += r.iterations;
      total_restarts += r.restarts;
    }
    restart_ratio_overall =
        total_iterations > 0
            ? 100.0 * static_cast<double>(total_restarts) / total_iterations
            : 0.0;
  }
};

inline const char* status_name(PumpStatus s) {
  switch (s) {
    case PumpStatus::Found: return "Found";
    case PumpStatus::IterationLimit: return "IterationLimit";
    case PumpStatus::LpInfeasible: return "LpInfeasible";
  }
  return "?";
}

inline const char* jacobian_name(const JacobianMode& m) {
  return m.kind == JacobianMode::Kind::MinusIdentity ? "identity"
                                                     : "perturbation";
}

inline const char* optimizer_name(const OptimizerConfig& o) {
  switch (o.kind) {
    case OptimizerKind::Plain: return "gd";
    case OptimizerKind::Momentum: return "momentum";
    case OptimizerKind::Adam: return "adam";
  }
  return "?";
}

inline SuiteRow describe_config(const PumpConfig& cfg) {
  SuiteRow r;
  r.preset = cfg.preset_name.empty() ? "custom" : cfg.preset_name;
  r.eta = cfg.eta;
  r.gamma = cfg.weights.gamma;
  r.alpha = cfg.weights.alpha;
  r.beta = cfg.weights.beta;
  r.lambda = cfg.weights.lambda;
  r.p = cfg.weights.p;
  r.jacobian = jacobian_name(cfg.jacobian);
  r.optimizer = optimizer_name(cfg.optimizer);
  return r;
}

inline SuiteRow run_one(const MilpInstance& inst, const PumpConfig& cfg) {
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
  return row;
}

inline std::vector<std::filesystem::path> list_instances(
    const std::filesystem::path& dir) {
  std::vector<std::filesystem::path> files;
  for (const auto& e : std::filesystem::directory_iterator(dir)) {
    if (!e.is_regular_file()) continue;
    const auto ext = e.path().extension();
    if (ext == ".mps" || ext == ".fix") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end(),
            [](const auto& a, const auto& b) {
              return a.filename().string() < b.filename().string();
            });
  return files;
}

// One pump run per instance file, deterministic row order, per-instance seed
// derived from (base seed, filename) so adding or removing instances never
// shifts other instances' runs.
inline SuiteReport run_suite(const std::vector<std::filesystem::path>& files,
                             const PumpConfig& base_cfg, int jobs = 1) {
  SuiteReport rep;
  rep.rows.resize(files.size());
  auto work = [&](std::size_t i) {
    const auto& path = files[i];
    PumpConfig cfg = base_cfg;
    cfg.seed = mix_seed(base_cfg.seed, fnv1a(path.filename().string()));
    try {
      MilpInstance inst = load_instance(path);
      rep.rows[i] = run_one(inst, cfg);
    } catch (const ParseError&) {
      rep.rows[i] = describe_config(cfg);
      rep.rows[i].instance = path.stem().string();
      rep.rows[i].seed = cfg.seed;
      rep.rows[i].status = "ParseError";
    } catch (const UnsupportedFeature&) {
      rep.rows[i] = describe_config(cfg);
      rep.rows[i].instance = path.stem().string();
      rep.rows[i].seed = cfg.seed;
      rep.rows[i].status = "ParseError";
    }
  };
  if (jobs <= 1) {
    for (std::size_t i = 0; i < files.size(); ++i) work(i);
  } else {
    std::vector<std::thread> pool;
    std::atomic<std::size_t> next{0};
    for (int t = 0; t < jobs; ++t)
      pool.emplace_back([&]() {
        for (;;) {
          const std::size_t i = next.fetch_add(1);
          if (i >= files.size()) return;
          work(i);
        }
      });
    for (auto& th : pool) th.join();
  }
  rep.recompute_aggregates();
  return rep;
}

// ---------------------------------------------------------------------------
// Reports.  The CSV column set and order below are fixed; tests round-trip it.
// ---------------------------------------------------------------------------

inline const char* kCsvHeader =
    "instance,preset,eta,gamma,alpha,beta,lambda,p,jacobian,optimizer,seed,"
    "status,iterations,restarts,restart_ratio,objective,wall_ms";

inline std::string format_real(double v) {
  std::ostringstream os;
  os.precision(12);
  os << v;
  return os.str();
}

inline std::string csv_row(const SuiteRow& r) {
  std::ostringstream os;
  os << r.instance << ',' << r.preset << ',' << format_real(r.eta) << ','
     << format_real(r.gamma) << ',' << format_real(r.alpha) << ','
     << format_real(r.beta) << ',' << format_real(r.lambda) << ','
     << format_real(r.p) << ',' << r.jacobian << ',' << r.optimizer << ','
     << r.seed << ',' << r.status << ',' << r.iterations << ',' << r.restarts
     << ',' << format_real(r.restart_ratio) << ',' << format_real(r.objective)
     << ',' << format_real(r.wall_ms);
  return os.str();
}

inline std::string suite_csv(const SuiteReport& rep) {
  std::ostringstream os;
  os << kCsvHeader << '\n';
  for (const SuiteRow& r : rep.rows) os << csv_row(r) << '\n';
  os << "# fails=" << rep.num_fails << " iterations=" << rep.total_iterations
     << " restarts=" << rep.total_restarts
     << " restart_ratio=" << format_real(rep.restart_ratio_overall) << '\n';
  return os.str();
}

inline SuiteReport parse_suite_csv(const std::string& text) {
  SuiteReport rep;
  std::istringstream is(text);
  std::string line;
  if (!std::getline(is, line) || line != kCsvHeader)
    throw ParseError("suite CSV: bad header");
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> f;
    std::istringstream ls(line);
    std::string tok;
    while (std::getline(ls, tok, ',')) f.push_back(tok);
    if (f.size() != 17) throw ParseError("suite CSV: bad row '" + line + "'");
    SuiteRow r;
    r.instance = f[0];
    r.preset = f[1];
    r.eta = std::stod(f[2]);
    r.gamma = std::stod(f[3]);
    r.alpha = std::stod(f[4]);
    r.beta = std::stod(f[5]);
    r.lambda = std::stod(f[6]);
    r.p = std::stod(f[7]);
    r.jacobian = f[8];
    r.optimizer = f[9];
    r.seed = std::stoull(f[10]);
    r.status = f[11];
    r.iterations = std::stoi(f[12]);
    r.restarts = std::stoi(f[13]);
    r.restart_ratio = std::stod(f[14]);
    r.objective = std::stod(f[15]);
    r.wall_ms = std::stod(f[16]);
    rep.rows.push_back(std::move(r));
  }
  rep.recompute_aggregates();
  return rep;
}

// ---------------------------------------------------------------------------
// Grid search.  Spec file, line oriented: "<param> <v1> <v2> ..." with params
// in {eta, gamma, p, lambda, beta, momentum}.  Enumeration order is the fixed
// field order above, values in file order.
// ---------------------------------------------------------------------------

struct GridSpec {
  std::vector<double> eta{1.0};
  std::vector<double> gamma{1.0};
  std::vector<double> p{1.0};
  std::vector<double> lambda{0.0};
  std::vector<double> beta{1.0};
  std::vector<double> momentum{};  // empty: plain gradient descent
};

inline GridSpec parse_grid_spec(const std::string& text) {
  GridSpec g;
  std::istringstream is(text);
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    auto toks = detail::tokenize(line);
    if (toks.empty() || toks[0][0] == '#') continue;
    std::vector<double>* axis = nullptr;
    if (toks[0] == "eta") axis = &g.eta;
    else if (toks[0] == "gamma") axis = &g.gamma;
    else if (toks[0] == "p") axis = &g.p;
    else if (toks[0] == "lambda") axis = &g.lambda;
    else if (toks[0] == "beta") axis = &g.beta;
    else if (toks[0] == "momentum") axis = &g.momentum;
    else
      throw ParseError("grid file line " + std::to_string(lineno) +
                       ": unknown axis '" + toks[0] + "'");
    if (toks.size() < 2)
      throw ParseError("grid file line " + std::to_string(lineno) +
                       ": empty axis");
    axis->clear();
    for (std::size_t k = 1; k < toks.size(); ++k)
      axis->push_back(detail::parse_real(toks[k], lineno));
  }
  return g;
}

struct GridPoint {
  PumpConfig cfg;
  SuiteReport report;
};

inline std::vector<PumpConfig> grid_configs(const GridSpec& g,
                                            const PumpConfig& base) {
  std::vector<PumpConfig> out;
  const std::vector<double> moms =
      g.momentum.empty() ? std::vector<double>{-1.0} : g.momentum;
  for (double eta : g.eta)
    for (double gamma : g.gamma)
      for (double p : g.p)
        for (double lambda : g.lambda)
          for (double beta : g.beta)
            for (double mu : moms) {
              PumpConfig c = base;
              c.preset_name = "grid";
              c.eta = eta;
              c.weights.gamma = gamma;
              c.weights.p = p;
              c.weights.lambda = lambda;
              c.weights.beta = beta;
              if (mu >= 0.0) {
                c.optimizer.kind = OptimizerKind::Momentum;
                c.optimizer.momentum = mu;
              }
              out.push_back(std::move(c));
            }
  return out;
}

// Summary rows sorted by (fails, iterations) ascending; index 0 is the best.
struct GridSummaryRow {
  std::size_t config_index = 0;
  int fails = 0;
  long long iterations = 0;
};

inline std::vector<GridSummaryRow> grid_summary(
    const std::vector<GridPoint>& points) {
  std::vector<GridSummaryRow> rows;
  for (std::size_t i = 0; i < points.size(); ++i)
    rows.push_back({i, points[i].report.num_fails,
                    points[i].report.total_iterations});
  std::stable_sort(rows.begin(), rows.end(),
                   [](const GridSummaryRow& a, const GridSummaryRow& b) {
                     if (a.fails != b.fails) return a.fails < b.fails;
                     return a.iterations < b.iterations;
                   });
  return rows;
}

inline std::vector<GridPoint> run_grid(
    const GridSpec& g, const PumpConfig& base,
    const std::vector<std::filesystem::path>& files, int jobs = 1) {
  std::vector<GridPoint> points;
  for (const PumpConfig& cfg : grid_configs(g, base))
    points.push_back({cfg, run_suite(files, cfg, jobs)});
  return points;
}

}  // namespace diffpump

#endif
