#ifndef DIFFPUMP_LOSSES_HPP
#define DIFFPUMP_LOSSES_HPP

#include <algorithm>
#include <cmath>

#include "diffpump/common.hpp"
#include "diffpump/model.hpp"

namespace diffpump {

struct LossWeights {
  double alpha = 0.0;      // cost term
  double beta = 1.0;       // integrality term
  double lambda = 0.0;     // feasibility term
  double gamma = 1.0;      // regularization
  double p = 1.0;          // integrality loss order
  double eps_round = 0.15; // soft-rounding scale
  double eps_feas = 1e-6;  // slack deadband

  void validate() const {
    if (alpha < 0 || beta < 0 || lambda < 0 || gamma < 0)
      throw ConfigError("loss weights must be nonnegative");
    if (p <= 0) throw ConfigError("integrality order p must be positive");
    if (eps_round <= 0) throw ConfigError("eps_round must be positive");
    if (eps_feas <= 0) throw ConfigError("eps_feas must be positive");
  }
};

struct LossBreakdown {
  double cost_term = 0.0;
  double integrality_term = 0.0;
  double feasibility_term = 0.0;
  double regularization_term = 0.0;
  double total = 0.0;
};

inline double std_normal_pdf(double z) {
  return std::exp(-0.5 * z * z) / std::sqrt(2.0 * M_PI);
}

inline double std_normal_cdf(double z) { return 0.5 * std::erfc(-z / M_SQRT2); }

// sum_i min{x_i, 1-x_i}^p over binary coordinates
inline double integrality_loss(const MilpInstance& inst, const Vec& x, double p) {
  if (x.size() != static_cast<std::size_t>(inst.num_vars))
    throw DimensionError("integrality_loss: length mismatch");
  double s = 0.0;
  for (int i = 0; i < inst.num_vars; ++i) {
    if (inst.var_kind[i] != VarKind::Binary) continue;
    const double xi = std::clamp(x[i], 0.0, 1.0);  // LP drift guard
    s += std::pow(std::min(xi, 1.0 - xi), p);
  }
  return s;
}

// Termwise derivative; the x_i = 0.5 kink uses the lower branch so that for
// p=1 the gradient is exactly -1 above 0.5 and +1 at or below it.  For p < 1
// the endpoint derivative blows up; the loss is at its minimum there, so the
// subgradient 0 is returned instead.
inline Vec integrality_grad(const MilpInstance& inst, const Vec& x, double p) {
  if (x.size() != static_cast<std::size_t>(inst.num_vars))
    throw DimensionError("integrality_grad: length mismatch");
  Vec g(inst.num_vars, 0.0);
  for (int i = 0; i < inst.num_vars; ++i) {
    if (inst.var_kind[i] != VarKind::Binary) continue;
    const double xi = std::clamp(x[i], 0.0, 1.0);
    if (p < 1.0 && (xi <= 0.0 || xi >= 1.0)) {
      g[i] = 0.0;
    } else if (xi > 0.5) {
      g[i] = -p * std::pow(1.0 - xi, p - 1.0);
    } else {
      g[i] = p * std::pow(xi, p - 1.0);
    }
  }
  return g;
}

// (b_j - A_j x) / ||[A_j b_j]||_2; positive iff row j violated
inline double slack(const MilpInstance& inst, const Vec& x, int j) {
  return (inst.rhs[j] - row_dot(inst.rows[j], x)) / inst.row_norms[j];
}

// (1/m) sum_j relu(s_j(x) - eps_feas)
inline double feasibility_loss(const MilpInstance& inst, const Vec& x_round,
                               double eps_feas) {
  if (inst.num_cons == 0) return 0.0;
  double s = 0.0;
  for (int j = 0; j < inst.num_cons; ++j)
    s += std::max(slack(inst, x_round, j) - eps_feas, 0.0);
  return s / inst.num_cons;
}

// gradient of feasibility_loss with respect to the rounded point;
// rows at or below the deadband contribute 0 (ReLU subgradient at the kink)
inline Vec feasibility_grad_wrt_round(const MilpInstance& inst,
                                      const Vec& x_round, double eps_feas) {
  Vec g(inst.num_vars, 0.0);
  if (inst.num_cons == 0) return g;
  for (int j = 0; j < inst.num_cons; ++j) {
    if (slack(inst, x_round, j) - eps_feas <= 0.0) continue;
    const SparseRow& r = inst.rows[j];
    const double scale = -1.0 / (inst.row_norms[j] * inst.num_cons);
    for (std::size_t k = 0; k < r.idx.size(); ++k)
      g[r.idx[k]] += scale * r.val[k];
  }
  return g;
}

// Phi((x - 0.5) / eps): smooth, monotone, 0.5 at the midpoint
inline double soft_round(double x, double eps_round) {
  return std_normal_cdf((x - 0.5) / eps_round);
}

inline double soft_round_grad(double x, double eps_round) {
  return std_normal_pdf((0.5 - x) / eps_round) / eps_round;
}

// half-down: exactly 0.5 rounds to 0, matching the +1 branch of the p=1
// integrality gradient so the two descriptions of the pump stay aligned
inline double hard_round(double x) { return x > 0.5 ? 1.0 : 0.0; }

inline Vec hard_round_point(const MilpInstance& inst, const Vec& x) {
  Vec out = x;
  for (int i = 0; i < inst.num_vars; ++i)
    if (inst.var_kind[i] == VarKind::Binary) out[i] = hard_round(x[i]);
  return out;
}

inline Vec soft_round_point(const MilpInstance& inst, const Vec& x,
                            double eps_round) {
  Vec out = x;
  for (int i = 0; i < inst.num_vars; ++i)
    if (inst.var_kind[i] == VarKind::Binary) out[i] = soft_round(x[i], eps_round);
  return out;
}

inline double cost_term(const MilpInstance& inst, const Vec& x_hat) {
  return dot(inst.objective, x_hat);
}

// ||theta||^2 / 2 restricted to the coordinates the engine updates
// (binary ones); the gradient is theta on those coordinates.
inline std::pair<double, Vec> regularization(const MilpInstance& inst,
                                             const Vec& theta) {
  double val = 0.0;
  Vec grad(theta.size(), 0.0);
  for (int i = 0; i < inst.num_vars; ++i) {
    if (inst.var_kind[i] != VarKind::Binary) continue;
    val += 0.5 * theta[i] * theta[i];
    grad[i] = theta[i];
  }
  return {val, grad};
}

// The feasibility term is evaluated at the soft-rounded point: that is the
// differentiable surrogate the gradient path flows through.
inline LossBreakdown evaluate_loss(const MilpInstance& inst, const Vec& theta,
                                   const Vec& x_hat, const Vec& x_round_soft,
                                   const LossWeights& w) {
  LossBreakdown b;
  b.cost_term = cost_term(inst, x_hat);
  b.integrality_term = integrality_loss(inst, x_hat, w.p);
  b.feasibility_term = feasibility_loss(inst, x_round_soft, w.eps_feas);
  b.regularization_term = regularization(inst, theta).first;
  b.total = w.alpha * b.cost_term + w.beta * b.integrality_term +
            w.lambda * b.feasibility_term + w.gamma * b.regularization_term;
  return b;
}

}  // namespace diffpump

#endif
