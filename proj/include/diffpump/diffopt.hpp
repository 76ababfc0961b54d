#ifndef DIFFPUMP_DIFFOPT_HPP
#define DIFFPUMP_DIFFOPT_HPP

#include <span>
#include <vector>

#include "diffpump/common.hpp"
#include "diffpump/losses.hpp"
#include "diffpump/model.hpp"
#include "diffpump/simplex.hpp"

namespace diffpump {

// Surrogate Jacobian for the relaxation argmin: minus identity (free), or the
// Monte-Carlo perturbed-optimizer estimator (M extra LP solves per gradient).
struct JacobianMode {
  enum class Kind { MinusIdentity, Perturbation };
  Kind kind = Kind::MinusIdentity;
  double eps_pert = 1.0;
  int samples = 1;

  static JacobianMode minus_identity() { return {}; }
  static JacobianMode perturbation(double eps, int m) {
    if (eps <= 0) throw ConfigError("perturbation eps must be positive");
    if (m < 1) throw ConfigError("perturbation sample count must be >= 1");
    return {Kind::Perturbation, eps, m};
  }
};

struct GradReport {
  Vec grad;             // zero on continuous coordinates
  Vec g_cost, g_int, g_feas, g_reg;  // unweighted per-path contributions
  int lp_solves_used = 0;
};

// Transpose-Jacobian action on a batch of vectors, sharing the perturbation
// samples (and hence the LP solves) across the batch.
// Perturbation estimator: Jhat = (1/(M eps)) sum_s x*(theta + eps Z_s) Z_s^T.
inline std::vector<Vec> apply_jacobian_transpose_multi(
    const JacobianMode& mode, const MilpInstance& inst, const Vec& theta,
    std::span<const Vec> vs, Rng& rng, int& lp_solves_used) {
  const int n = inst.num_vars;
  std::vector<Vec> out;
  out.reserve(vs.size());
  if (mode.kind == JacobianMode::Kind::MinusIdentity) {
    for (const Vec& v : vs) {
      Vec r(v);
      for (double& x : r) x = -x;
      out.push_back(std::move(r));
    }
    return out;
  }
  for (std::size_t q = 0; q < vs.size(); ++q) out.emplace_back(n, 0.0);
  for (int s = 0; s < mode.samples; ++s) {
    Vec z(n);
    for (int i = 0; i < n; ++i) z[i] = rng.gaussian();
    Vec pert(theta);
    for (int i = 0; i < n; ++i) pert[i] += mode.eps_pert * z[i];
    LpSolution sol = solve_relaxation(inst, pert);
    ++lp_solves_used;
    if (sol.status == LpStatus::Infeasible)
      throw InstanceLpInfeasible("perturbed relaxation infeasible");
    if (sol.status != LpStatus::Optimal)
      throw SolverNumericError("perturbed relaxation not optimal");
    for (std::size_t q = 0; q < vs.size(); ++q) {
      const double proj = dot(sol.x_hat, vs[q]);
      for (int i = 0; i < n; ++i) out[q][i] += z[i] * proj;
    }
  }
  const double scale = 1.0 / (mode.samples * mode.eps_pert);
  for (Vec& r : out)
    for (double& x : r) x *= scale;
  return out;
}

inline Vec apply_jacobian_transpose(const JacobianMode& mode,
                                    const MilpInstance& inst, const Vec& theta,
                                    const Vec& v, Rng& rng) {
  if (v.size() != static_cast<std::size_t>(inst.num_vars))
    throw DimensionError("apply_jacobian_transpose: length mismatch");
  int solves = 0;
  auto r = apply_jacobian_transpose_multi(mode, inst, theta,
                                          std::span<const Vec>(&v, 1), rng,
                                          solves);
  return std::move(r[0]);
}

// Full chain-rule gradient of the general loss:
//   grad = alpha J^T c + beta J^T grad_f(x_hat)
//        + lambda J^T (D_round grad_g(soft_round(x_hat))) + gamma theta
// The soft-rounding diagonal D_round sits only on the feasibility path; the
// integrality path differentiates f at x_hat directly.
inline GradReport full_gradient(const MilpInstance& inst, const Vec& theta,
                                const LpSolution& x_hat, const LossWeights& w,
                                const JacobianMode& mode, Rng& rng) {
  if (x_hat.status != LpStatus::Optimal)
    throw std::invalid_argument("full_gradient: x_hat must be optimal");
  const int n = inst.num_vars;
  const Vec& xh = x_hat.x_hat;

  Vec gf = integrality_grad(inst, xh, w.p);
  Vec x_soft = soft_round_point(inst, xh, w.eps_round);
  Vec gg = feasibility_grad_wrt_round(inst, x_soft, w.eps_feas);
  Vec chain(n, 0.0);
  for (int i = 0; i < n; ++i)
    if (inst.var_kind[i] == VarKind::Binary)
      chain[i] = soft_round_grad(xh[i], w.eps_round) * gg[i];

  const Vec vecs[3] = {inst.objective, gf, chain};
  GradReport rep;
  auto applied = apply_jacobian_transpose_multi(
      mode, inst, theta, std::span<const Vec>(vecs, 3), rng,
      rep.lp_solves_used);
  rep.g_cost = std::move(applied[0]);
  rep.g_int = std::move(applied[1]);
  rep.g_feas = std::move(applied[2]);
  rep.g_reg = regularization(inst, theta).second;

  rep.grad.assign(n, 0.0);
  for (int i = 0; i < n; ++i) {
    if (inst.var_kind[i] != VarKind::Binary) continue;
    rep.grad[i] = w.alpha * rep.g_cost[i] + w.beta * rep.g_int[i] +
                  w.lambda * rep.g_feas[i] + w.gamma * rep.g_reg[i];
  }
  return rep;
}

}  // namespace diffpump

#endif
