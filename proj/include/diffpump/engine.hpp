#ifndef DIFFPUMP_ENGINE_HPP
#define DIFFPUMP_ENGINE_HPP

#include <algorithm>
#include <chrono>
#include <deque>
#include <numeric>
#include <string>
#include <vector>

#include "diffpump/common.hpp"
#include "diffpump/diffopt.hpp"
#include "diffpump/losses.hpp"
#include "diffpump/model.hpp"
#include "diffpump/simplex.hpp"

namespace diffpump {

struct RestartPolicy {
  int flip_T = 20;            // base flip magnitude
  double perturb_lo = -0.3;
  double perturb_hi = 0.7;
  int history_window = 100;   // cycle-detection lookback

  void validate() const {
    if (flip_T < 1) throw ConfigError("flip_T must be >= 1");
    if (perturb_lo >= perturb_hi)
      throw ConfigError("perturb_lo must be below perturb_hi");
    if (history_window < 1) throw ConfigError("history_window must be >= 1");
  }
};

enum class OptimizerKind { Plain, Momentum, Adam };

struct OptimizerConfig {
  OptimizerKind kind = OptimizerKind::Plain;
  double momentum = 0.9;   // mu for Momentum
  double b1 = 0.9, b2 = 0.999, eps_adam = 1e-8;
};

struct PumpConfig {
  LossWeights weights;
  double eta = 1.0;
  JacobianMode jacobian;
  OptimizerConfig optimizer;
  int n_max = 1000;
  std::uint64_t seed = 0;
  RestartPolicy restart;
  double tol = 1e-6;
  std::string preset_name;
  bool keep_trace = false;

  void validate() const {
    weights.validate();
    restart.validate();
    if (eta <= 0) throw ConfigError("eta must be positive");
    if (n_max < 1) throw ConfigError("n_max must be >= 1");
    if (tol < 0) throw ConfigError("tol must be nonnegative");
  }
};

enum class RestartKind { None, Flip, Perturb };
enum class CycleKind { None, LengthOne, LongCycle };

struct TraceEntry {
  int k = 0;
  Vec theta;
  Vec x_hat;
  Vec x_round;
  LossBreakdown loss;
  RestartKind restart = RestartKind::None;
  int flip_count = 0;
};

enum class PumpStatus { Found, IterationLimit, LpInfeasible };

struct PumpResult {
  PumpStatus status = PumpStatus::IterationLimit;
  Vec solution;
  double objective = 0.0;  // c^T solution in the canonical min sense
  int iterations = 0;      // LP solves performed
  int restarts = 0;
  double wall_ms = 0.0;
  std::vector<TraceEntry> trace;  // populated when keep_trace
};

// LengthOne iff the current rounded point repeats the immediately previous
// one; LongCycle iff it matches any older entry within the window.
inline CycleKind detect_cycle(const std::deque<Vec>& history,
                              const Vec& current, int window) {
  if (history.empty()) return CycleKind::None;
  auto same = [](const Vec& a, const Vec& b) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i)
      if (a[i] != b[i]) return false;
    return true;
  };
  if (same(history.back(), current)) return CycleKind::LengthOne;
  const int lim = std::min<int>(window, static_cast<int>(history.size()));
  for (int d = 2; d <= lim; ++d)
    if (same(history[history.size() - d], current)) return CycleKind::LongCycle;
  return CycleKind::None;
}

namespace detail {

// Flip target selection: the T binary coordinates with the largest
// fractionality |x_hat_i - x_round_i|, ties broken by smallest index.
inline std::vector<int> flip_coordinates(const MilpInstance& inst,
                                         const Vec& x_hat, const Vec& x_round,
                                         int count) {
  std::vector<int> bins;
  for (int i = 0; i < inst.num_vars; ++i)
    if (inst.var_kind[i] == VarKind::Binary) bins.push_back(i);
  count = std::min<int>(count, static_cast<int>(bins.size()));
  std::stable_sort(bins.begin(), bins.end(), [&](int a, int b) {
    return std::fabs(x_hat[a] - x_round[a]) > std::fabs(x_hat[b] - x_round[b]);
  });
  bins.resize(count);
  return bins;
}

inline int draw_flip_count(const RestartPolicy& policy, Rng& rng) {
  const int t = policy.flip_T;
  return static_cast<int>(rng.uniform_int(t / 2, (3 * t) / 2));
}

// Perturbation rule: coordinate i flips iff |x_hat_i - x_round_i| +
// max(rho_i, 0) > 0.5 with rho_i ~ U[lo, hi].  One draw per binary
// coordinate, consumed in index order.
inline std::vector<int> perturb_coordinates(const MilpInstance& inst,
                                            const Vec& x_hat,
                                            const Vec& x_round,
                                            const RestartPolicy& policy,
                                            Rng& rng) {
  std::vector<int> out;
  for (int i = 0; i < inst.num_vars; ++i) {
    if (inst.var_kind[i] != VarKind::Binary) continue;
    const double rho = rng.uniform(policy.perturb_lo, policy.perturb_hi);
    if (std::fabs(x_hat[i] - x_round[i]) + std::max(rho, 0.0) > 0.5)
      out.push_back(i);
  }
  return out;
}

}  // namespace detail

// Restart applied to theta: negation of the selected binary coordinates
// (equivalent to flipping the corresponding entries of the rounded point).
// Returns the number of coordinates negated.
inline int apply_restart(CycleKind kind, Vec& theta, const MilpInstance& inst,
                         const Vec& x_hat, const Vec& x_round,
                         const RestartPolicy& policy, Rng& rng) {
  std::vector<int> coords;
  if (kind == CycleKind::LengthOne) {
    const int t = detail::draw_flip_count(policy, rng);
    coords = detail::flip_coordinates(inst, x_hat, x_round, t);
  } else if (kind == CycleKind::LongCycle) {
    coords = detail::perturb_coordinates(inst, x_hat, x_round, policy, rng);
  }
  for (int i : coords) theta[i] = -theta[i];
  return static_cast<int>(coords.size());
}

struct OptimizerState {
  Vec velocity;   // momentum
  Vec m1, m2;     // adam moments
  int t = 0;      // adam step counter
};

// theta' = step(theta, grad); continuous coordinates never move.
inline Vec optimizer_step(OptimizerState& state, const MilpInstance& inst,
                          const Vec& theta, const Vec& grad, double eta,
                          const OptimizerConfig& opt) {
  const int n = inst.num_vars;
  Vec out = theta;
  switch (opt.kind) {
    case OptimizerKind::Plain:
      for (int i = 0; i < n; ++i)
        if (inst.var_kind[i] == VarKind::Binary) out[i] -= eta * grad[i];
      break;
    case OptimizerKind::Momentum: {
      if (state.velocity.empty()) state.velocity.assign(n, 0.0);
      for (int i = 0; i < n; ++i) {
        if (inst.var_kind[i] != VarKind::Binary) continue;
        state.velocity[i] = opt.momentum * state.velocity[i] + grad[i];
        out[i] -= eta * state.velocity[i];
      }
      break;
    }
    case OptimizerKind::Adam: {
      if (state.m1.empty()) {
        state.m1.assign(n, 0.0);
        state.m2.assign(n, 0.0);
      }
      ++state.t;
      const double c1 = 1.0 - std::pow(opt.b1, state.t);
      const double c2 = 1.0 - std::pow(opt.b2, state.t);
      for (int i = 0; i < n; ++i) {
        if (inst.var_kind[i] != VarKind::Binary) continue;
        state.m1[i] = opt.b1 * state.m1[i] + (1.0 - opt.b1) * grad[i];
        state.m2[i] = opt.b2 * state.m2[i] + (1.0 - opt.b2) * grad[i] * grad[i];
        const double mhat = state.m1[i] / c1;
        const double vhat = state.m2[i] / c2;
        out[i] -= eta * mhat / (std::sqrt(vhat) + opt.eps_adam);
      }
      break;
    }
  }
  return out;
}

namespace detail {

inline void push_history(std::deque<Vec>& history, Vec x, int window) {
  history.push_back(std::move(x));
  while (static_cast<int>(history.size()) > window) history.pop_front();
}

inline void verify_found(const MilpInstance& inst, const Vec& sol, double tol) {
  if (!is_integral(inst, sol, tol) || !is_feasible(inst, sol, tol))
    throw SolverNumericError(
        "pump returned a point failing the independent integrality/feasibility "
        "re-check");
}

}  // namespace detail

// The differentiable pump: solve the relaxation at theta, hard-round, stop if
// feasible, otherwise descend on the general loss; restarts negate theta
// coordinates when the rounded-point sequence cycles.
inline PumpResult run_differentiable_pump(const MilpInstance& inst,
                                          const PumpConfig& cfg) {
  cfg.validate();
  const auto t0 = std::chrono::steady_clock::now();
  PumpResult res;
  Rng rng(cfg.seed);
  Vec theta = inst.objective;
  OptimizerState opt_state;
  std::deque<Vec> history;

  for (int k = 0; k < cfg.n_max; ++k) {
    LpSolution sol = solve_relaxation(inst, theta);
    if (sol.status == LpStatus::Infeasible) {
      if (k > 0)
        throw SolverNumericError("relaxation became infeasible mid-run");
      res.status = PumpStatus::LpInfeasible;
      res.iterations = 0;
      break;
    }
    if (sol.status == LpStatus::Unbounded)
      throw SolverNumericError("relaxation unbounded at iteration " +
                               std::to_string(k));
    res.iterations = k + 1;
    const Vec& x_hat = sol.x_hat;
    Vec x_round = hard_round_point(inst, x_hat);

    TraceEntry entry;
    if (cfg.keep_trace) {
      entry.k = k;
      entry.theta = theta;
      entry.x_hat = x_hat;
      entry.x_round = x_round;
      entry.loss = evaluate_loss(inst, theta, x_hat,
                                 soft_round_point(inst, x_hat,
                                                  cfg.weights.eps_round),
                                 cfg.weights);
    }

    if (is_feasible(inst, x_round, cfg.tol)) {
      detail::verify_found(inst, x_round, cfg.tol);
      res.status = PumpStatus::Found;
      res.solution = x_round;
      res.objective = dot(inst.objective, x_round);
      if (cfg.keep_trace) res.trace.push_back(std::move(entry));
      break;
    }

    const CycleKind cyc =
        detect_cycle(history, x_round, cfg.restart.history_window);
    GradReport grad = full_gradient(inst, theta, sol, cfg.weights,
                                    cfg.jacobian, rng);
    theta = optimizer_step(opt_state, inst, theta, grad.grad, cfg.eta,
                           cfg.optimizer);
    if (cyc != CycleKind::None) {
      entry.flip_count = apply_restart(cyc, theta, inst, x_hat, x_round,
                                       cfg.restart, rng);
      entry.restart =
          cyc == CycleKind::LengthOne ? RestartKind::Flip : RestartKind::Perturb;
      ++res.restarts;
    }
    detail::push_history(history, std::move(x_round),
                         cfg.restart.history_window);
    if (cfg.keep_trace) res.trace.push_back(std::move(entry));
    res.status = PumpStatus::IterationLimit;
  }

  res.wall_ms = std::chrono::duration<double, std::milli>(
                    std::chrono::steady_clock::now() - t0)
                    .count();
  return res;
}

// Reference implementation of the classic pump, kept deliberately in the
// rounded-point formulation (distance objective rebuilt from x_round each
// iteration, restarts flip x_round itself).  Shares the restart draw protocol
// with run_differentiable_pump so the two can be compared run-for-run.
inline PumpResult run_original_fp(const MilpInstance& inst, int n_max,
                                  std::uint64_t seed, double tol,
                                  const RestartPolicy& policy = {},
                                  bool keep_trace = false) {
  policy.validate();
  if (n_max < 1) throw ConfigError("n_max must be >= 1");
  const auto t0 = std::chrono::steady_clock::now();
  PumpResult res;
  Rng rng(seed);
  std::deque<Vec> history;
  LossWeights fp_weights;  // FP-row weights, used only for trace loss values

  auto finish = [&](PumpStatus st, const Vec* sol) {
    res.status = st;
    if (sol != nullptr) {
      detail::verify_found(inst, *sol, tol);
      res.solution = *sol;
      res.objective = dot(inst.objective, *sol);
    }
    res.wall_ms = std::chrono::duration<double, std::milli>(
                      std::chrono::steady_clock::now() - t0)
                      .count();
    return res;
  };

  Vec theta = inst.objective;
  Vec x_tilde;  // current reference rounded point (possibly restarted)
  for (int k = 0; k < n_max; ++k) {
    if (k > 0) {
      // Hamming-distance objective toward x_tilde: -1 where x_tilde is 1,
      // +1 where it is 0; continuous coordinates keep their original cost.
      for (int i = 0; i < inst.num_vars; ++i)
        if (inst.var_kind[i] == VarKind::Binary)
          theta[i] = x_tilde[i] > 0.5 ? -1.0 : 1.0;
    }
    LpSolution sol = solve_relaxation(inst, theta);
    if (sol.status == LpStatus::Infeasible) {
      if (k > 0)
        throw SolverNumericError("relaxation became infeasible mid-run");
      res.status = PumpStatus::LpInfeasible;
      res.iterations = 0;
      return finish(PumpStatus::LpInfeasible, nullptr);
    }
    if (sol.status == LpStatus::Unbounded)
      throw SolverNumericError("relaxation unbounded at iteration " +
                               std::to_string(k));
    res.iterations = k + 1;
    const Vec& x_hat = sol.x_hat;
    Vec x_round = hard_round_point(inst, x_hat);

    TraceEntry entry;
    if (keep_trace) {
      entry.k = k;
      entry.theta = theta;
      entry.x_hat = x_hat;
      entry.x_round = x_round;
      entry.loss = evaluate_loss(inst, theta, x_hat,
                                 soft_round_point(inst, x_hat,
                                                  fp_weights.eps_round),
                                 fp_weights);
    }

    if (is_integral(inst, x_hat, tol)) {
      if (keep_trace) res.trace.push_back(std::move(entry));
      return finish(PumpStatus::Found, &x_hat);
    }
    if (is_feasible(inst, x_round, tol)) {
      if (keep_trace) res.trace.push_back(std::move(entry));
      return finish(PumpStatus::Found, &x_round);
    }

    const CycleKind cyc = detect_cycle(history, x_round, policy.history_window);
    x_tilde = x_round;
    if (cyc == CycleKind::LengthOne) {
      const int t = detail::draw_flip_count(policy, rng);
      for (int i : detail::flip_coordinates(inst, x_hat, x_round, t)) {
        x_tilde[i] = 1.0 - x_tilde[i];
        ++entry.flip_count;
      }
      entry.restart = RestartKind::Flip;
      ++res.restarts;
    } else if (cyc == CycleKind::LongCycle) {
      for (int i :
           detail::perturb_coordinates(inst, x_hat, x_round, policy, rng)) {
        x_tilde[i] = 1.0 - x_tilde[i];
        ++entry.flip_count;
      }
      entry.restart = RestartKind::Perturb;
      ++res.restarts;
    }
    detail::push_history(history, std::move(x_round), policy.history_window);
    if (keep_trace) res.trace.push_back(std::move(entry));
  }
  return finish(PumpStatus::IterationLimit, nullptr);
}

// Table-row presets.  All use the minus-identity Jacobian and plain gradient
// descent; DP3/DP4 enable soft rounding at eps_round = 0.15.
inline PumpConfig make_preset(const std::string& name) {
  PumpConfig cfg;
  cfg.preset_name = name;
  cfg.weights.alpha = 0.0;
  cfg.weights.eps_round = 0.15;
  if (name == "FP") {
    cfg.eta = 1.0;
    cfg.weights.beta = 1.0;
    cfg.weights.lambda = 0.0;
    cfg.weights.gamma = 1.0;
    cfg.weights.p = 1.0;
  } else if (name == "DP1") {
    cfg.eta = 1.0;
    cfg.weights.beta = 1.0;
    cfg.weights.lambda = 0.0;
    cfg.weights.gamma = 0.95;
    cfg.weights.p = 1.0;
  } else if (name == "DP2") {
    cfg.eta = 0.8;
    cfg.weights.beta = 1.0;
    cfg.weights.lambda = 0.0;
    cfg.weights.gamma = 0.1;
    cfg.weights.p = 2.0;
  } else if (name == "DP3") {
    cfg.eta = 0.3;
    cfg.weights.beta = 0.0;
    cfg.weights.lambda = 1.0;
    cfg.weights.gamma = 1.0;
    cfg.weights.p = 1.0;  // unused: beta = 0
  } else if (name == "DP4") {
    cfg.eta = 0.6;
    cfg.weights.beta = 10.0;
    cfg.weights.lambda = 1e-3;
    cfg.weights.gamma = 0.1;
    cfg.weights.p = 2.0;
  } else {
    throw ConfigError("unknown preset '" + name +
                      "' (valid: FP, DP1, DP2, DP3, DP4)");
  }
  return cfg;
}

}  // namespace diffpump

#endif
