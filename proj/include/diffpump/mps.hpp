#ifndef DIFFPUMP_MPS_HPP
#define DIFFPUMP_MPS_HPP

#include <algorithm>
#include <cctype>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "diffpump/common.hpp"
#include "diffpump/model.hpp"

namespace diffpump {

enum class RowSense { Objective, Greater, Less, Equal };

// Structural view of an MPS (or native fixture) file, before canonicalization.
struct MpsModel {
  std::string name;
  std::vector<std::string> row_names;  // constraint rows, file order
  std::vector<RowSense> row_sense;     // parallel to row_names, no Objective
  std::string obj_name;
  bool maximize = false;

  std::vector<std::string> col_names;
  std::vector<bool> col_integer;
  // entries[col][row constraint index] summed in file order; objective kept apart
  std::vector<std::map<int, double>> col_entries;
  Vec col_obj;

  Vec row_rhs;  // per constraint row, default 0

  // bounds, defaults [0, +inf) for all columns (MPS convention)
  Vec col_lower, col_upper;
  std::vector<bool> col_bv;  // marked binary via BOUNDS BV

  int num_rows() const { return static_cast<int>(row_names.size()); }
  int num_cols() const { return static_cast<int>(col_names.size()); }
};

namespace detail {

inline std::vector<std::string> tokenize(const std::string& line) {
  std::vector<std::string> toks;
  std::istringstream is(line);
  std::string t;
  while (is >> t) toks.push_back(t);
  return toks;
}

inline double parse_real(const std::string& s, int lineno) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ParseError("line " + std::to_string(lineno) + ": bad numeric field '" +
                     s + "'");
  }
}

inline std::string upper(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return std::toupper(c); });
  return s;
}

}  // namespace detail

// Whitespace-tokenized MPS reader covering the MIPLIB binary subset:
// NAME, OBJSENSE, ROWS, COLUMNS (INTORG/INTEND markers), RHS, BOUNDS
// (UP, LO, FX, BV, MI, PL), ENDATA.  RANGES and SOS are rejected outright.
inline MpsModel parse_mps(const std::string& text) {
  MpsModel m;
  enum Section { None, Name, ObjSense, Rows, Columns, Rhs, Bounds, Done };
  Section sec = None;
  std::map<std::string, int> row_index;  // constraint rows only
  std::map<std::string, int> col_index;
  bool have_obj = false;
  bool in_integer = false;
  bool pending_objsense = false;

  std::istringstream is(text);
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '*') continue;  // comment
    const bool is_header = !std::isspace(static_cast<unsigned char>(line[0]));
    auto toks = detail::tokenize(line);
    if (toks.empty()) continue;

    if (is_header) {
      const std::string head = detail::upper(toks[0]);
      pending_objsense = false;
      if (head == "NAME") {
        if (toks.size() > 1) m.name = toks[1];
        sec = Name;
      } else if (head == "OBJSENSE") {
        if (toks.size() > 1) {
          const std::string s = detail::upper(toks[1]);
          if (s == "MAX" || s == "MAXIMIZE") m.maximize = true;
          else if (s != "MIN" && s != "MINIMIZE")
            throw ParseError("line " + std::to_string(lineno) +
                             ": unknown objective sense '" + toks[1] + "'");
        } else {
          pending_objsense = true;
        }
        sec = ObjSense;
      } else if (head == "ROWS") {
        sec = Rows;
      } else if (head == "COLUMNS") {
        sec = Columns;
      } else if (head == "RHS") {
        sec = Rhs;
      } else if (head == "BOUNDS") {
        sec = Bounds;
      } else if (head == "RANGES") {
        throw UnsupportedFeature("RANGES");
      } else if (head == "SOS") {
        throw UnsupportedFeature("SOS");
      } else if (head == "ENDATA") {
        sec = Done;
        break;
      } else {
        throw ParseError("line " + std::to_string(lineno) +
                         ": malformed section header '" + toks[0] + "'");
      }
      continue;
    }

    switch (sec) {
      case ObjSense: {
        if (pending_objsense) {
          const std::string s = detail::upper(toks[0]);
          if (s == "MAX" || s == "MAXIMIZE") m.maximize = true;
          else if (s != "MIN" && s != "MINIMIZE")
            throw ParseError("line " + std::to_string(lineno) +
                             ": unknown objective sense '" + toks[0] + "'");
          pending_objsense = false;
        }
        break;
      }
      case Rows: {
        if (toks.size() != 2)
          throw ParseError("line " + std::to_string(lineno) +
                           ": ROWS entry needs sense and name");
        const std::string s = detail::upper(toks[0]);
        if (s == "N") {
          if (have_obj)
            throw ParseError("line " + std::to_string(lineno) +
                             ": multiple objective (N) rows");
          have_obj = true;
          m.obj_name = toks[1];
        } else {
          RowSense sense;
          if (s == "G") sense = RowSense::Greater;
          else if (s == "L") sense = RowSense::Less;
          else if (s == "E") sense = RowSense::Equal;
          else
            throw ParseError("line " + std::to_string(lineno) +
                             ": unknown row sense '" + toks[0] + "'");
          row_index[toks[1]] = m.num_rows();
          m.row_names.push_back(toks[1]);
          m.row_sense.push_back(sense);
          m.row_rhs.push_back(0.0);
        }
        break;
      }
      case Columns: {
        if (toks.size() >= 3 && detail::upper(toks[1]) == "'MARKER'") {
          const std::string mk = detail::upper(toks[2]);
          if (mk == "'INTORG'") in_integer = true;
          else if (mk == "'INTEND'") in_integer = false;
          else
            throw ParseError("line " + std::to_string(lineno) +
                             ": unknown marker " + toks[2]);
          break;
        }
        if (toks.size() != 3 && toks.size() != 5)
          throw ParseError("line " + std::to_string(lineno) +
                           ": COLUMNS entry needs (col,row,value) pairs");
        const std::string& col = toks[0];
        int ci;
        auto it = col_index.find(col);
        if (it == col_index.end()) {
          ci = m.num_cols();
          col_index[col] = ci;
          m.col_names.push_back(col);
          m.col_integer.push_back(in_integer);
          m.col_entries.emplace_back();
          m.col_obj.push_back(0.0);
          m.col_lower.push_back(0.0);
          m.col_upper.push_back(kInf);
          m.col_bv.push_back(false);
        } else {
          ci = it->second;
        }
        for (std::size_t k = 1; k + 1 < toks.size(); k += 2) {
          const std::string& rname = toks[k];
          const double v = detail::parse_real(toks[k + 1], lineno);
          if (have_obj && rname == m.obj_name) {
            m.col_obj[ci] += v;  // duplicates summed in file order
          } else {
            auto rit = row_index.find(rname);
            if (rit == row_index.end())
              throw ParseError("line " + std::to_string(lineno) +
                               ": column entry references undeclared row '" +
                               rname + "'");
            m.col_entries[ci][rit->second] += v;
          }
        }
        break;
      }
      case Rhs: {
        if (toks.size() != 3 && toks.size() != 5)
          throw ParseError("line " + std::to_string(lineno) +
                           ": RHS entry needs (set,row,value) pairs");
        for (std::size_t k = 1; k + 1 < toks.size(); k += 2) {
          const std::string& rname = toks[k];
          const double v = detail::parse_real(toks[k + 1], lineno);
          if (have_obj && rname == m.obj_name) continue;  // objective constant
          auto rit = row_index.find(rname);
          if (rit == row_index.end())
            throw ParseError("line " + std::to_string(lineno) +
                             ": RHS references undeclared row '" + rname + "'");
          m.row_rhs[rit->second] = v;
        }
        break;
      }
      case Bounds: {
        if (toks.size() < 3)
          throw ParseError("line " + std::to_string(lineno) +
                           ": BOUNDS entry too short");
        const std::string kind = detail::upper(toks[0]);
        const std::string& col = toks[2];
        auto it = col_index.find(col);
        if (it == col_index.end())
          throw ParseError("line " + std::to_string(lineno) +
                           ": BOUNDS references undeclared column '" + col + "'");
        const int ci = it->second;
        auto need_val = [&]() {
          if (toks.size() < 4)
            throw ParseError("line " + std::to_string(lineno) +
                             ": BOUNDS " + kind + " needs a value");
          return detail::parse_real(toks[3], lineno);
        };
        if (kind == "UP") m.col_upper[ci] = need_val();
        else if (kind == "LO") m.col_lower[ci] = need_val();
        else if (kind == "FX") m.col_lower[ci] = m.col_upper[ci] = need_val();
        else if (kind == "BV") {
          m.col_bv[ci] = true;
          m.col_lower[ci] = 0.0;
          m.col_upper[ci] = 1.0;
        } else if (kind == "MI") m.col_lower[ci] = -kInf;
        else if (kind == "PL") m.col_upper[ci] = kInf;
        else throw UnsupportedFeature("BOUNDS " + kind);
        break;
      }
      case Name:
        break;
      default:
        throw ParseError("line " + std::to_string(lineno) +
                         ": data outside any section");
    }
  }
  if (!have_obj) throw ParseError("no objective (N) row");
  return m;
}

// L rows negate into G rows, E rows split into an adjacent (>=, negated >=)
// pair, maximization negates into minimization, binary markers become
// var_kind=Binary.  Row order is the original order.
inline MilpInstance canonicalize(const MpsModel& m) {
  const int n = m.num_cols();
  Vec objective(m.col_obj);
  if (m.maximize)
    for (double& v : objective) v = -v;

  std::vector<VarKind> kind(n, VarKind::Continuous);
  Vec lower(n), upper(n);
  for (int i = 0; i < n; ++i) {
    lower[i] = m.col_lower[i];
    upper[i] = m.col_upper[i];
    const bool binaryish = m.col_bv[i] || m.col_integer[i];
    if (binaryish) {
      // Integer columns without explicit bounds default to [0,1] here; any
      // other integer bound range means a general integer, which we reject.
      double lo = lower[i], hi = upper[i];
      if (m.col_integer[i] && !m.col_bv[i] && hi == kInf) hi = 1.0;
      if (lo != 0.0 || hi != 1.0)
        throw UnsupportedFeature("general integer variable '" + m.col_names[i] +
                                 "' (bounds [" + std::to_string(lo) + ", " +
                                 std::to_string(hi) + "])");
      kind[i] = VarKind::Binary;
      lower[i] = 0.0;
      upper[i] = 1.0;
    }
  }

  // column-major entries -> row-major sparse rows
  std::vector<SparseRow> file_rows(m.num_rows());
  for (int ci = 0; ci < n; ++ci)
    for (const auto& [ri, v] : m.col_entries[ci]) {
      file_rows[ri].idx.push_back(ci);
      file_rows[ri].val.push_back(v);
    }

  std::vector<SparseRow> rows;
  Vec rhs;
  auto push = [&](const SparseRow& r, double b, bool negate) {
    SparseRow out = r;
    double bb = b;
    if (negate) {
      for (double& v : out.val) v = -v;
      bb = -b;
    }
    rows.push_back(std::move(out));
    rhs.push_back(bb);
  };
  for (int j = 0; j < m.num_rows(); ++j) {
    switch (m.row_sense[j]) {
      case RowSense::Greater:
        push(file_rows[j], m.row_rhs[j], false);
        break;
      case RowSense::Less:
        push(file_rows[j], m.row_rhs[j], true);
        break;
      case RowSense::Equal:
        push(file_rows[j], m.row_rhs[j], false);
        push(file_rows[j], m.row_rhs[j], true);
        break;
      case RowSense::Objective:
        break;
    }
  }

  return make_instance(m.name.empty() ? "unnamed" : m.name, std::move(objective),
                       std::move(rows), std::move(rhs), std::move(kind),
                       std::move(lower), std::move(upper));
}

// ---------------------------------------------------------------------------
// Native fixture format, line oriented:
//   # comment
//   name <text>
//   min  c0 c1 ... c{n-1}
//   row  {>=|<=|=} a0 a1 ... a{n-1} rhs
//   bin  i j k ...          (variable indices; others are continuous)
//   bounds i lo hi          (continuous variables only; 'inf'/'-inf' allowed)
// Variables default to continuous with bounds [0, inf).
// ---------------------------------------------------------------------------

inline MpsModel parse_fixture(const std::string& text) {
  MpsModel m;
  m.obj_name = "obj";
  int n = -1;
  std::istringstream is(text);
  std::string line;
  int lineno = 0;
  auto bound_val = [&](const std::string& s) {
    if (s == "inf") return kInf;
    if (s == "-inf") return -kInf;
    return detail::parse_real(s, lineno);
  };
  while (std::getline(is, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    auto toks = detail::tokenize(line);
    if (toks.empty() || toks[0][0] == '#') continue;
    const std::string& key = toks[0];
    if (key == "name") {
      if (toks.size() > 1) m.name = toks[1];
    } else if (key == "min") {
      n = static_cast<int>(toks.size()) - 1;
      for (int i = 0; i < n; ++i) {
        m.col_names.push_back("x" + std::to_string(i));
        m.col_integer.push_back(false);
        m.col_entries.emplace_back();
        m.col_obj.push_back(detail::parse_real(toks[1 + i], lineno));
        m.col_lower.push_back(0.0);
        m.col_upper.push_back(kInf);
        m.col_bv.push_back(false);
      }
    } else if (key == "row") {
      if (n < 0) throw ParseError("line " + std::to_string(lineno) +
                                  ": row before min");
      if (static_cast<int>(toks.size()) != n + 3)
        throw ParseError("line " + std::to_string(lineno) +
                         ": row needs sense, " + std::to_string(n) +
                         " coefficients, and rhs");
      RowSense sense;
      if (toks[1] == ">=") sense = RowSense::Greater;
      else if (toks[1] == "<=") sense = RowSense::Less;
      else if (toks[1] == "=") sense = RowSense::Equal;
      else
        throw ParseError("line " + std::to_string(lineno) +
                         ": unknown sense '" + toks[1] + "'");
      const int ri = m.num_rows();
      m.row_names.push_back("c" + std::to_string(ri));
      m.row_sense.push_back(sense);
      for (int i = 0; i < n; ++i) {
        const double v = detail::parse_real(toks[2 + i], lineno);
        if (v != 0.0) m.col_entries[i][ri] += v;
      }
      m.row_rhs.push_back(detail::parse_real(toks[2 + n], lineno));
    } else if (key == "bin") {
      if (n < 0) throw ParseError("line " + std::to_string(lineno) +
                                  ": bin before min");
      for (std::size_t k = 1; k < toks.size(); ++k) {
        const int i = static_cast<int>(detail::parse_real(toks[k], lineno));
        if (i < 0 || i >= n)
          throw ParseError("line " + std::to_string(lineno) +
                           ": bin index out of range");
        m.col_bv[i] = true;
        m.col_lower[i] = 0.0;
        m.col_upper[i] = 1.0;
      }
    } else if (key == "bounds") {
      if (toks.size() != 4)
        throw ParseError("line " + std::to_string(lineno) +
                         ": bounds needs index lo hi");
      const int i = static_cast<int>(detail::parse_real(toks[1], lineno));
      if (i < 0 || i >= n)
        throw ParseError("line " + std::to_string(lineno) +
                         ": bounds index out of range");
      m.col_lower[i] = bound_val(toks[2]);
      m.col_upper[i] = bound_val(toks[3]);
    } else {
      throw ParseError("line " + std::to_string(lineno) + ": unknown keyword '" +
                       key + "'");
    }
  }
  if (n < 0) throw ParseError("fixture has no 'min' line");
  return m;
}

inline std::string serialize_fixture(const MpsModel& m) {
  std::ostringstream os;
  os.precision(17);
  if (!m.name.empty()) os << "name " << m.name << "\n";
  os << "min";
  for (double c : m.col_obj) os << " " << c;
  os << "\n";
  const int n = m.num_cols();
  for (int j = 0; j < m.num_rows(); ++j) {
    os << "row ";
    switch (m.row_sense[j]) {
      case RowSense::Greater: os << ">="; break;
      case RowSense::Less: os << "<="; break;
      case RowSense::Equal: os << "="; break;
      case RowSense::Objective: break;
    }
    for (int i = 0; i < n; ++i) {
      auto it = m.col_entries[i].find(j);
      os << " " << (it == m.col_entries[i].end() ? 0.0 : it->second);
    }
    os << " " << m.row_rhs[j] << "\n";
  }
  bool any_bin = false;
  for (int i = 0; i < n; ++i) any_bin |= m.col_bv[i];
  if (any_bin) {
    os << "bin";
    for (int i = 0; i < n; ++i)
      if (m.col_bv[i]) os << " " << i;
    os << "\n";
  }
  for (int i = 0; i < n; ++i) {
    if (m.col_bv[i]) continue;
    if (m.col_lower[i] != 0.0 || m.col_upper[i] != kInf) {
      os << "bounds " << i << " ";
      if (m.col_lower[i] == -kInf) os << "-inf";
      else os << m.col_lower[i];
      os << " ";
      if (m.col_upper[i] == kInf) os << "inf";
      else os << m.col_upper[i];
      os << "\n";
    }
  }
  return os.str();
}

}  // namespace diffpump

#endif
