#ifndef DIFFPUMP_SIMPLEX_HPP
#define DIFFPUMP_SIMPLEX_HPP

#include <algorithm>
#include <cmath>
#include <optional>
#include <vector>

#include "diffpump/common.hpp"
#include "diffpump/model.hpp"

namespace diffpump {

enum class LpStatus { Optimal, Infeasible, Unbounded };

// Vertex certificate: the basic column per row plus the at-upper flags of the
// nonbasic columns, over the column space [structurals | surplus].
struct LpBasis {
  std::vector<int> basic;               // size m
  std::vector<std::uint8_t> at_upper;   // size n + m
};

struct LpSolution {
  Vec x_hat;         // structural part only, length n
  double objective = 0.0;
  LpStatus status = LpStatus::Optimal;
  LpBasis basis;
  int iterations = 0;  // pivot count, both phases
};

// Bounded-variable primal simplex on min theta^T x s.t. Ax - s = b,
// lo <= x <= up, s >= 0.  Dense tableau, two-phase with explicit artificials,
// Bland's rule with smallest-index tie-breaking everywhere, so the argmin
// selection among degenerate optima is deterministic.
class BoundedSimplex {
 public:
  static constexpr double kOptTol = 1e-8;    // reduced costs, row slacks
  static constexpr double kPivotTol = 1e-10;

  explicit BoundedSimplex(const MilpInstance& inst) : inst_(inst) {
    n_ = inst.num_vars;
    m_ = inst.num_cons;
    ncols_ = n_ + m_;           // structurals + surplus; artificials appended
    cols_.assign(static_cast<std::size_t>(m_) * (ncols_ + m_), 0.0);
    lower_.assign(ncols_ + m_, 0.0);
    upper_.assign(ncols_ + m_, 0.0);
    for (int j = 0; j < m_; ++j) {
      const SparseRow& r = inst.rows[j];
      for (std::size_t k = 0; k < r.idx.size(); ++k)
        col(r.idx[k])[j] = r.val[k];
      col(n_ + j)[j] = -1.0;  // surplus
    }
    for (int i = 0; i < n_; ++i) {
      lower_[i] = inst.lower[i];
      upper_[i] = inst.upper[i];
    }
    for (int j = 0; j < m_; ++j) {
      lower_[n_ + j] = 0.0;
      upper_[n_ + j] = kInf;
    }
  }

  LpSolution solve(const Vec& theta, const LpBasis* warm = nullptr) {
    if (static_cast<int>(theta.size()) != n_)
      throw DimensionError("solve_relaxation: theta length mismatch");
    for (double t : theta)
      if (!std::isfinite(t))
        throw std::invalid_argument("solve_relaxation: non-finite theta");

    LpSolution out;
    pivots_ = 0;
    num_art_ = 0;
    setup_nonbasic_values();

    bool warm_ok = false;
    if (warm != nullptr) warm_ok = install_warm(*warm);
    if (!warm_ok) {
      if (!phase_one()) {
        out.status = LpStatus::Infeasible;
        out.iterations = pivots_;
        return out;
      }
    }

    // phase 2
    cost_.assign(ncols_ + num_art_, 0.0);
    for (int i = 0; i < n_; ++i) cost_[i] = theta[i];
    const LpStatus st = iterate();
    out.status = st;
    out.iterations = pivots_;
    if (st == LpStatus::Optimal) {
      Vec z = current_point();
      out.x_hat.assign(z.begin(), z.begin() + n_);
      out.objective = 0.0;
      for (int i = 0; i < n_; ++i) out.objective += theta[i] * out.x_hat[i];
      out.basis.basic = basic_;
      out.basis.at_upper.assign(at_upper_.begin(), at_upper_.begin() + ncols_);
    }
    return out;
  }

 private:
  const MilpInstance& inst_;
  int n_ = 0, m_ = 0, ncols_ = 0, num_art_ = 0;
  std::vector<double> cols_;   // column-major, m_ rows
  Vec lower_, upper_;
  Vec cost_;
  std::vector<int> basic_;                  // column basic in each row
  std::vector<std::uint8_t> is_basic_;
  std::vector<std::uint8_t> at_upper_;      // nonbasic position flag
  Vec binv_;                                // m_ x m_, row-major
  Vec xb_;                                  // basic variable values
  int pivots_ = 0;

  double* col(int j) { return &cols_[static_cast<std::size_t>(j) * m_]; }
  const double* col(int j) const {
    return &cols_[static_cast<std::size_t>(j) * m_];
  }

  int total_cols() const { return ncols_ + num_art_; }

  bool fixed(int j) const { return lower_[j] == upper_[j]; }
  bool is_free(int j) const {
    return lower_[j] == -kInf && upper_[j] == kInf;
  }

  // nonbasic rest value: finite lower if any, else finite upper, else 0
  double rest_value(int j) const {
    if (at_upper_[j]) return upper_[j];
    if (lower_[j] != -kInf) return lower_[j];
    if (upper_[j] != kInf) return upper_[j];
    return 0.0;
  }

  void setup_nonbasic_values() {
    at_upper_.assign(ncols_, 0);
    is_basic_.assign(ncols_, 0);
    basic_.clear();
  }

  Vec current_point() {
    Vec z(total_cols(), 0.0);
    for (int j = 0; j < total_cols(); ++j)
      if (!is_basic_[j]) z[j] = rest_value(j);
    for (int i = 0; i < m_; ++i) z[basic_[i]] = xb_[i];
    return z;
  }

  // binv_ = B^{-1} by Gauss-Jordan; false if numerically singular
  bool factorize() {
    Vec a(static_cast<std::size_t>(m_) * m_);
    for (int i = 0; i < m_; ++i)
      for (int r = 0; r < m_; ++r)
        a[static_cast<std::size_t>(r) * m_ + i] = col(basic_[i])[r];
    binv_.assign(static_cast<std::size_t>(m_) * m_, 0.0);
    for (int i = 0; i < m_; ++i) binv_[static_cast<std::size_t>(i) * m_ + i] = 1.0;
    for (int c = 0; c < m_; ++c) {
      int piv = -1;
      double best = kPivotTol;
      for (int r = c; r < m_; ++r) {
        const double v = std::fabs(a[static_cast<std::size_t>(r) * m_ + c]);
        if (v > best) {
          best = v;
          piv = r;
        }
      }
      if (piv < 0) return false;
      if (piv != c) {
        for (int k = 0; k < m_; ++k) {
          std::swap(a[static_cast<std::size_t>(piv) * m_ + k],
                    a[static_cast<std::size_t>(c) * m_ + k]);
          std::swap(binv_[static_cast<std::size_t>(piv) * m_ + k],
                    binv_[static_cast<std::size_t>(c) * m_ + k]);
        }
      }
      const double d = a[static_cast<std::size_t>(c) * m_ + c];
      for (int k = 0; k < m_; ++k) {
        a[static_cast<std::size_t>(c) * m_ + k] /= d;
        binv_[static_cast<std::size_t>(c) * m_ + k] /= d;
      }
      for (int r = 0; r < m_; ++r) {
        if (r == c) continue;
        const double f = a[static_cast<std::size_t>(r) * m_ + c];
        if (f == 0.0) continue;
        for (int k = 0; k < m_; ++k) {
          a[static_cast<std::size_t>(r) * m_ + k] -=
              f * a[static_cast<std::size_t>(c) * m_ + k];
          binv_[static_cast<std::size_t>(r) * m_ + k] -=
              f * binv_[static_cast<std::size_t>(c) * m_ + k];
        }
      }
    }
    return true;
  }

  void compute_xb() {
    // xb = Binv * (b - N x_N)
    Vec r(m_);
    for (int i = 0; i < m_; ++i) r[i] = inst_.rhs[i];
    for (int j = 0; j < total_cols(); ++j) {
      if (is_basic_[j]) continue;
      const double v = rest_value(j);
      if (v == 0.0) continue;
      const double* cj = col(j);
      for (int i = 0; i < m_; ++i) r[i] -= cj[i] * v;
    }
    xb_.assign(m_, 0.0);
    for (int i = 0; i < m_; ++i) {
      double s = 0.0;
      const double* bi = &binv_[static_cast<std::size_t>(i) * m_];
      for (int k = 0; k < m_; ++k) s += bi[k] * r[k];
      xb_[i] = s;
    }
  }

  Vec ftran(int j) {
    Vec w(m_, 0.0);
    const double* cj = col(j);
    for (int i = 0; i < m_; ++i) {
      double s = 0.0;
      const double* bi = &binv_[static_cast<std::size_t>(i) * m_];
      for (int k = 0; k < m_; ++k) s += bi[k] * cj[k];
      w[i] = s;
    }
    return w;
  }

  Vec duals() {
    Vec y(m_, 0.0);
    for (int k = 0; k < m_; ++k) {
      double s = 0.0;
      for (int i = 0; i < m_; ++i)
        s += cost_[basic_[i]] * binv_[static_cast<std::size_t>(i) * m_ + k];
      y[k] = s;
    }
    return y;
  }

  void pivot_update(const Vec& w, int row) {
    const double d = w[row];
    double* br = &binv_[static_cast<std::size_t>(row) * m_];
    for (int k = 0; k < m_; ++k) br[k] /= d;
    for (int i = 0; i < m_; ++i) {
      if (i == row) continue;
      const double f = w[i];
      if (f == 0.0) continue;
      double* bi = &binv_[static_cast<std::size_t>(i) * m_];
      for (int k = 0; k < m_; ++k) bi[k] -= f * br[k];
    }
  }

  // Core bounded-simplex loop on the current cost_ vector.
  LpStatus iterate() {
    int since_refactor = 0;
    for (;;) {
      const Vec y = duals();
      // Bland: smallest improvable nonbasic index
      int enter = -1, dir = 0;
      for (int j = 0; j < total_cols(); ++j) {
        if (is_basic_[j] || fixed(j)) continue;
        const double* cj = col(j);
        double d = cost_[j];
        for (int i = 0; i < m_; ++i) d -= y[i] * cj[i];
        if (is_free(j)) {
          if (d < -kOptTol) { enter = j; dir = +1; break; }
          if (d > kOptTol) { enter = j; dir = -1; break; }
        } else if (!at_upper_[j] && d < -kOptTol && upper_[j] != -kInf) {
          enter = j; dir = +1; break;
        } else if (at_upper_[j] && d > kOptTol) {
          enter = j; dir = -1; break;
        }
      }
      if (enter < 0) return LpStatus::Optimal;

      const Vec w = ftran(enter);
      // ratio test: entering moves by delta in direction dir
      double best = kInf;
      int leave_row = -1;       // -1 with finite best => bound flip
      int to_upper = 0;
      if (lower_[enter] != -kInf && upper_[enter] != kInf)
        best = upper_[enter] - lower_[enter];  // bound flip distance
      for (int i = 0; i < m_; ++i) {
        const double wi = dir * w[i];
        const int bj = basic_[i];
        double limit = kInf;
        int hits_upper = 0;
        if (wi > kPivotTol) {  // basic decreases
          if (lower_[bj] != -kInf) limit = (xb_[i] - lower_[bj]) / wi;
        } else if (wi < -kPivotTol) {  // basic increases
          if (upper_[bj] != kInf) {
            limit = (upper_[bj] - xb_[i]) / (-wi);
            hits_upper = 1;
          }
        }
        if (limit < -0.0) limit = 0.0;
        if (limit < best - 1e-12 ||
            (limit < best + 1e-12 && leave_row >= 0 &&
             basic_[i] < basic_[leave_row]) ||
            (limit < best + 1e-12 && leave_row < 0 && limit < best)) {
          best = limit;
          leave_row = i;
          to_upper = hits_upper;
        }
      }
      if (best == kInf) return LpStatus::Unbounded;
      if (best < 0.0) best = 0.0;

      if (leave_row < 0) {
        // bound flip of the entering column
        at_upper_[enter] = at_upper_[enter] ? 0 : 1;
        compute_xb();
      } else {
        const int leave = basic_[leave_row];
        const double enter_val = rest_value(enter) + dir * best;
        basic_[leave_row] = enter;
        is_basic_[enter] = 1;
        is_basic_[leave] = 0;
        at_upper_[leave] = static_cast<std::uint8_t>(to_upper);
        pivot_update(w, leave_row);
        ++since_refactor;
        if (since_refactor >= 64) {
          if (!factorize())
            throw SolverNumericError("simplex: basis refactorization failed");
          since_refactor = 0;
        }
        compute_xb();
        // guard against drift on the just-entered variable
        xb_[leave_row] = enter_val;
      }
      ++pivots_;
      if (pivots_ > 200000)
        throw SolverNumericError("simplex: pivot limit exceeded");
    }
  }

  bool phase_one() {
    // all structurals and surplus nonbasic at rest; artificials close the gap
    num_art_ = 0;
    at_upper_.assign(ncols_, 0);
    is_basic_.assign(ncols_, 0);
    basic_.assign(m_, -1);
    Vec resid(m_);
    for (int j = 0; j < m_; ++j) resid[j] = inst_.rhs[j];
    for (int jcol = 0; jcol < ncols_; ++jcol) {
      const double v = rest_value(jcol);
      if (v == 0.0) continue;
      const double* cj = col(jcol);
      for (int i = 0; i < m_; ++i) resid[i] -= cj[i] * v;
    }
    // rows with resid <= 0 take their surplus basic (s = -resid >= 0);
    // rows with resid > 0 need an artificial.
    std::vector<int> art_cols;
    for (int i = 0; i < m_; ++i) {
      if (resid[i] <= 0.0) {
        basic_[i] = n_ + i;
        is_basic_[n_ + i] = 1;
      } else {
        const int aj = ncols_ + num_art_;
        ++num_art_;
        art_cols.push_back(i);
        if (static_cast<int>(cols_.size()) <
            (aj + 1) * m_)
          cols_.resize(static_cast<std::size_t>(aj + 1) * m_, 0.0);
        std::fill(col(aj), col(aj) + m_, 0.0);
        col(aj)[i] = 1.0;
        lower_[aj] = 0.0;
        upper_[aj] = kInf;
        basic_[i] = aj;
      }
    }
    is_basic_.resize(total_cols(), 0);
    at_upper_.resize(total_cols(), 0);
    for (int i = 0; i < m_; ++i) is_basic_[basic_[i]] = 1;
    if (!factorize())
      throw SolverNumericError("simplex: phase-1 start basis singular");
    compute_xb();

    if (num_art_ > 0) {
      cost_.assign(total_cols(), 0.0);
      for (int a = ncols_; a < total_cols(); ++a) cost_[a] = 1.0;
      const LpStatus st = iterate();
      if (st == LpStatus::Unbounded)
        throw SolverNumericError("simplex: phase 1 unbounded");
      double art_sum = 0.0;
      for (int i = 0; i < m_; ++i)
        if (basic_[i] >= ncols_) art_sum += xb_[i];
      for (int j = ncols_; j < total_cols(); ++j)
        if (!is_basic_[j] && at_upper_[j]) art_sum += upper_[j];
      if (art_sum > kOptTol) return false;  // infeasible

      // drive remaining (zero-valued) artificials out of the basis
      for (int i = 0; i < m_; ++i) {
        if (basic_[i] < ncols_) continue;
        int pivot_col = -1;
        for (int j = 0; j < ncols_; ++j) {
          if (is_basic_[j]) continue;
          const Vec w = ftran(j);
          if (std::fabs(w[i]) > 1e-7) {
            pivot_col = j;
            break;
          }
        }
        if (pivot_col >= 0) {
          const Vec w = ftran(pivot_col);
          const int art = basic_[i];
          basic_[i] = pivot_col;
          is_basic_[pivot_col] = 1;
          is_basic_[art] = 0;
          lower_[art] = upper_[art] = 0.0;
          pivot_update(w, i);
          compute_xb();
        }
        // else: dependent row, artificial stays basic pinned at 0
      }
    }
    // pin every artificial so phase 2 cannot move it
    for (int a = ncols_; a < total_cols(); ++a) {
      lower_[a] = 0.0;
      upper_[a] = 0.0;
    }
    return true;
  }

  bool install_warm(const LpBasis& warm) {
    if (static_cast<int>(warm.basic.size()) != m_ ||
        static_cast<int>(warm.at_upper.size()) != ncols_)
      return false;
    for (int b : warm.basic)
      if (b < 0 || b >= ncols_) return false;
    num_art_ = 0;
    basic_ = warm.basic;
    is_basic_.assign(ncols_, 0);
    at_upper_.assign(ncols_, 0);
    for (int i = 0; i < m_; ++i) {
      if (is_basic_[basic_[i]]) return false;  // duplicate
      is_basic_[basic_[i]] = 1;
    }
    for (int j = 0; j < ncols_; ++j)
      if (!is_basic_[j]) at_upper_[j] = warm.at_upper[j];
    if (!factorize()) return false;
    compute_xb();
    for (int i = 0; i < m_; ++i) {
      const int bj = basic_[i];
      if (xb_[i] < lower_[bj] - kOptTol || xb_[i] > upper_[bj] + kOptTol)
        return false;  // warm basis primal infeasible; cold start instead
    }
    return true;
  }
};

inline LpSolution solve_relaxation(const MilpInstance& inst, const Vec& theta,
                                   const LpBasis* warm = nullptr) {
  BoundedSimplex s(inst);
  return s.solve(theta, warm);
}

// Exhaustive test oracle: every basic feasible solution of the relaxation,
// obtained by activating n constraints among {rows, variable bounds},
// deduplicated within 1e-9.
inline std::vector<Vec> enumerate_vertices_oracle(const MilpInstance& inst) {
  const int n = inst.num_vars;
  const int m = inst.num_cons;
  if (n > 12 || m > 12)
    throw OracleTooLarge("enumerate_vertices_oracle: n,m must be <= 12");

  std::vector<Vec> dense(m, Vec(n, 0.0));
  for (int j = 0; j < m; ++j)
    for (std::size_t k = 0; k < inst.rows[j].idx.size(); ++k)
      dense[j][inst.rows[j].idx[k]] = inst.rows[j].val[k];

  std::vector<Vec> verts;
  auto try_system = [&](const std::vector<int>& act_rows,
                        const std::vector<std::pair<int, double>>& fixed) {
    // solve: dense[act_rows] * x = rhs[act_rows], x_i = v for fixed (i, v)
    const int k = static_cast<int>(act_rows.size());
    std::vector<int> free_vars;
    std::vector<std::uint8_t> is_fixed(n, 0);
    Vec x(n, 0.0);
    for (auto [i, v] : fixed) {
      is_fixed[i] = 1;
      x[i] = v;
    }
    for (int i = 0; i < n; ++i)
      if (!is_fixed[i]) free_vars.push_back(i);
    if (static_cast<int>(free_vars.size()) != k) return;
    // k x k system by Gaussian elimination with partial pivoting
    Vec a(static_cast<std::size_t>(k) * (k + 1), 0.0);
    for (int r = 0; r < k; ++r) {
      const int row = act_rows[r];
      double rhs = inst.rhs[row];
      for (int i = 0; i < n; ++i)
        if (is_fixed[i]) rhs -= dense[row][i] * x[i];
      for (int c = 0; c < k; ++c)
        a[static_cast<std::size_t>(r) * (k + 1) + c] = dense[row][free_vars[c]];
      a[static_cast<std::size_t>(r) * (k + 1) + k] = rhs;
    }
    for (int c = 0; c < k; ++c) {
      int piv = -1;
      double best = 1e-10;
      for (int r = c; r < k; ++r) {
        const double v = std::fabs(a[static_cast<std::size_t>(r) * (k + 1) + c]);
        if (v > best) { best = v; piv = r; }
      }
      if (piv < 0) return;  // singular: not a vertex-defining set
      if (piv != c)
        for (int q = 0; q <= k; ++q)
          std::swap(a[static_cast<std::size_t>(piv) * (k + 1) + q],
                    a[static_cast<std::size_t>(c) * (k + 1) + q]);
      const double d = a[static_cast<std::size_t>(c) * (k + 1) + c];
      for (int q = 0; q <= k; ++q)
        a[static_cast<std::size_t>(c) * (k + 1) + q] /= d;
      for (int r = 0; r < k; ++r) {
        if (r == c) continue;
        const double f = a[static_cast<std::size_t>(r) * (k + 1) + c];
        if (f == 0.0) continue;
        for (int q = 0; q <= k; ++q)
          a[static_cast<std::size_t>(r) * (k + 1) + q] -=
              f * a[static_cast<std::size_t>(c) * (k + 1) + q];
      }
    }
    for (int c = 0; c < k; ++c)
      x[free_vars[c]] = a[static_cast<std::size_t>(c) * (k + 1) + k];
    // feasibility
    for (int i = 0; i < n; ++i)
      if (x[i] < inst.lower[i] - 1e-9 || x[i] > inst.upper[i] + 1e-9) return;
    for (int j = 0; j < m; ++j)
      if (row_dot(inst.rows[j], x) < inst.rhs[j] - 1e-9 * inst.row_norms[j])
        return;
    for (const Vec& v : verts) {
      double diff = 0.0;
      for (int i = 0; i < n; ++i) diff = std::max(diff, std::fabs(v[i] - x[i]));
      if (diff <= 1e-9) return;  // duplicate
    }
    verts.push_back(std::move(x));
  };

  // choose active rows by bitmask, then which variables sit at a bound
  for (unsigned rmask = 0; rmask < (1u << m); ++rmask) {
    std::vector<int> act_rows;
    for (int j = 0; j < m; ++j)
      if (rmask & (1u << j)) act_rows.push_back(j);
    const int k = static_cast<int>(act_rows.size());
    if (k > n) continue;
    const int nfix = n - k;
    // choose nfix variables (bitmask over n), then lower/upper side each
    for (unsigned vmask = 0; vmask < (1u << n); ++vmask) {
      if (__builtin_popcount(vmask) != nfix) continue;
      std::vector<int> fix_vars;
      for (int i = 0; i < n; ++i)
        if (vmask & (1u << i)) fix_vars.push_back(i);
      for (unsigned side = 0; side < (1u << nfix); ++side) {
        std::vector<std::pair<int, double>> fixed;
        bool ok = true;
        for (int q = 0; q < nfix; ++q) {
          const int i = fix_vars[q];
          const double v = (side & (1u << q)) ? inst.upper[i] : inst.lower[i];
          if (!std::isfinite(v)) { ok = false; break; }
          fixed.emplace_back(i, v);
        }
        if (ok) try_system(act_rows, fixed);
      }
    }
  }
  return verts;
}

}  // namespace diffpump

#endif
