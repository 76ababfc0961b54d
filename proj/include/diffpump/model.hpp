#ifndef DIFFPUMP_MODEL_HPP
#define DIFFPUMP_MODEL_HPP

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "diffpump/common.hpp"

namespace diffpump {

enum class VarKind { Binary, Continuous };

struct SparseRow {
  std::vector<int> idx;  // strictly increasing
  std::vector<double> val;
};

inline double row_dot(const SparseRow& row, const Vec& x) {
  double s = 0.0;
  for (std::size_t k = 0; k < row.idx.size(); ++k) s += row.val[k] * x[row.idx[k]];
  return s;
}

// Canonical binary MILP: min c^T x, A x >= b, Binary vars in {0,1}.
// Immutable after construction; shared freely across pump runs.
struct MilpInstance {
  std::string name;
  int num_vars = 0;
  int num_cons = 0;
  Vec objective;
  std::vector<SparseRow> rows;
  Vec rhs;
  std::vector<VarKind> var_kind;
  Vec lower, upper;
  Vec row_norms;  // ||[A_j b_j]||_2, strictly positive

  int num_binary() const {
    int k = 0;
    for (auto v : var_kind) k += (v == VarKind::Binary) ? 1 : 0;
    return k;
  }
};

inline double row_norm(const SparseRow& row, double rhs) {
  double s = rhs * rhs;
  for (double v : row.val) s += v * v;
  return std::sqrt(s);
}

inline MilpInstance make_instance(std::string name, Vec objective,
                                  std::vector<SparseRow> rows, Vec rhs,
                                  std::vector<VarKind> var_kind, Vec lower,
                                  Vec upper) {
  MilpInstance inst;
  inst.name = std::move(name);
  inst.num_vars = static_cast<int>(objective.size());
  inst.num_cons = static_cast<int>(rows.size());
  if (rhs.size() != rows.size())
    throw DimensionError("make_instance: rhs/rows mismatch");
  if (var_kind.size() != objective.size() || lower.size() != objective.size() ||
      upper.size() != objective.size())
    throw DimensionError("make_instance: per-variable field length mismatch");
  for (int i = 0; i < inst.num_vars; ++i) {
    if (var_kind[i] == VarKind::Binary && (lower[i] != 0.0 || upper[i] != 1.0))
      throw std::invalid_argument("make_instance: binary variable " +
                                  std::to_string(i) + " must have bounds [0,1]");
    if (lower[i] > upper[i])
      throw std::invalid_argument("make_instance: empty bound interval on variable " +
                                  std::to_string(i));
  }
  for (int j = 0; j < inst.num_cons; ++j) {
    const SparseRow& r = rows[j];
    if (r.idx.size() != r.val.size())
      throw DimensionError("make_instance: row " + std::to_string(j) +
                           " idx/val mismatch");
    for (std::size_t k = 0; k < r.idx.size(); ++k) {
      if (r.idx[k] < 0 || r.idx[k] >= inst.num_vars)
        throw DimensionError("make_instance: row " + std::to_string(j) +
                             " column index out of range");
      if (k > 0 && r.idx[k] <= r.idx[k - 1])
        throw std::invalid_argument("make_instance: row " + std::to_string(j) +
                                    " indices not strictly increasing");
    }
  }
  inst.row_norms.resize(inst.num_cons);
  for (int j = 0; j < inst.num_cons; ++j) {
    const double nrm = row_norm(rows[j], rhs[j]);
    if (nrm == 0.0)
      throw std::invalid_argument("make_instance: all-zero row " +
                                  std::to_string(j) + " with zero rhs");
    inst.row_norms[j] = nrm;
  }
  inst.objective = std::move(objective);
  inst.rows = std::move(rows);
  inst.rhs = std::move(rhs);
  inst.var_kind = std::move(var_kind);
  inst.lower = std::move(lower);
  inst.upper = std::move(upper);
  return inst;
}

// Convenience for tests: all-binary instance with dense rows.
inline MilpInstance make_binary_instance(std::string name, Vec objective,
                                         const std::vector<Vec>& dense_rows,
                                         Vec rhs) {
  const int n = static_cast<int>(objective.size());
  std::vector<SparseRow> rows;
  rows.reserve(dense_rows.size());
  for (const Vec& dr : dense_rows) {
    SparseRow r;
    for (int i = 0; i < n; ++i)
      if (dr[i] != 0.0) {
        r.idx.push_back(i);
        r.val.push_back(dr[i]);
      }
    rows.push_back(std::move(r));
  }
  return make_instance(std::move(name), std::move(objective), std::move(rows),
                       std::move(rhs), std::vector<VarKind>(n, VarKind::Binary),
                       Vec(n, 0.0), Vec(n, 1.0));
}

// Integrality test on binary coordinates only.
inline bool is_integral(const MilpInstance& inst, const Vec& x, double tol) {
  if (static_cast<int>(x.size()) != inst.num_vars)
    throw DimensionError("is_integral: point length mismatch");
  for (int i = 0; i < inst.num_vars; ++i) {
    if (inst.var_kind[i] != VarKind::Binary) continue;
    const double d = std::fabs(x[i] - std::round(x[i]));
    if (d > tol) return false;
  }
  return true;
}

// Row test A_j x >= b_j - tol*||[A_j b_j]||, plus bounds within tol.
// The row-normalized tolerance makes the verdict invariant to row scaling.
inline bool row_satisfied(const MilpInstance& inst, const Vec& x, int j,
                          double tol) {
  return row_dot(inst.rows[j], x) >= inst.rhs[j] - tol * inst.row_norms[j];
}

inline bool is_feasible(const MilpInstance& inst, const Vec& x, double tol) {
  if (static_cast<int>(x.size()) != inst.num_vars)
    throw DimensionError("is_feasible: point length mismatch");
  for (int i = 0; i < inst.num_vars; ++i) {
    if (x[i] < inst.lower[i] - tol || x[i] > inst.upper[i] + tol) return false;
  }
  for (int j = 0; j < inst.num_cons; ++j)
    if (!row_satisfied(inst, x, j, tol)) return false;
  return true;
}

inline std::vector<int> violated_rows(const MilpInstance& inst, const Vec& x,
                                      double tol) {
  if (static_cast<int>(x.size()) != inst.num_vars)
    throw DimensionError("violated_rows: point length mismatch");
  std::vector<int> out;
  for (int j = 0; j < inst.num_cons; ++j)
    if (!row_satisfied(inst, x, j, tol)) out.push_back(j);
  return out;
}

}  // namespace diffpump

#endif
