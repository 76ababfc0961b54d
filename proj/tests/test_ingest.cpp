#include <catch2/catch_amalgamated.hpp>

#include "diffpump/mps.hpp"

using namespace diffpump;

namespace {

const char* kTwoVarMps = R"(NAME          TINY
ROWS
 N  COST
 G  C1
COLUMNS
    MARKER                 'MARKER'                 'INTORG'
    X0  COST  3  C1  1
    MARKER                 'MARKER'                 'INTEND'
RHS
    RHS  C1  1
ENDATA
)";

bool models_equal(const MpsModel& a, const MpsModel& b) {
  return a.name == b.name && a.row_sense == b.row_sense &&
         a.maximize == b.maximize && a.col_obj == b.col_obj &&
         a.col_entries == b.col_entries && a.row_rhs == b.row_rhs &&
         a.col_lower == b.col_lower && a.col_upper == b.col_upper &&
         a.col_bv == b.col_bv;
}

double eval_row(const MpsModel& m, int j, const Vec& x) {
  double s = 0.0;
  for (int i = 0; i < m.num_cols(); ++i) {
    auto it = m.col_entries[i].find(j);
    if (it != m.col_entries[i].end()) s += it->second * x[i];
  }
  return s;
}

bool satisfies_raw(const MpsModel& m, const Vec& x) {
  for (int j = 0; j < m.num_rows(); ++j) {
    const double lhs = eval_row(m, j, x);
    switch (m.row_sense[j]) {
      case RowSense::Greater:
        if (!(lhs >= m.row_rhs[j])) return false;
        break;
      case RowSense::Less:
        if (!(lhs <= m.row_rhs[j])) return false;
        break;
      case RowSense::Equal:
        if (lhs != m.row_rhs[j]) return false;
        break;
      case RowSense::Objective:
        break;
    }
  }
  return true;
}

bool satisfies_canonical(const MilpInstance& inst, const Vec& x) {
  for (int j = 0; j < inst.num_cons; ++j)
    if (!(row_dot(inst.rows[j], x) >= inst.rhs[j])) return false;
  return true;
}

}  // namespace

TEST_CASE("parse_mps on a small integer-marked file") {
  MpsModel m = parse_mps(kTwoVarMps);
  CHECK(m.name == "TINY");
  CHECK(m.obj_name == "COST");
  REQUIRE(m.num_rows() == 1);
  CHECK(m.row_sense[0] == RowSense::Greater);
  CHECK(m.row_rhs[0] == 1.0);
  REQUIRE(m.num_cols() == 1);
  CHECK(m.col_names[0] == "X0");
  CHECK(m.col_integer[0]);
  CHECK(m.col_obj[0] == 3.0);
  CHECK(m.col_entries[0].at(0) == 1.0);
}

TEST_CASE("empty COLUMNS section accepted") {
  MpsModel m = parse_mps("NAME\nROWS\n N obj\n G c1\nCOLUMNS\nRHS\nENDATA\n");
  CHECK(m.num_cols() == 0);
  CHECK(m.num_rows() == 1);
}

TEST_CASE("unsupported sections rejected by name") {
  const char* with_ranges =
      "ROWS\n N obj\n G c1\nCOLUMNS\n X obj 1\nRANGES\n R c1 2\nENDATA\n";
  CHECK_THROWS_MATCHES(parse_mps(with_ranges), UnsupportedFeature,
                       Catch::Matchers::Message("RANGES"));
  CHECK_THROWS_AS(parse_mps("ROWS\n N obj\nSOS\nENDATA\n"), UnsupportedFeature);
}

TEST_CASE("parse errors") {
  // column referencing an undeclared row
  CHECK_THROWS_AS(parse_mps("ROWS\n N obj\nCOLUMNS\n X nope 1\nENDATA\n"),
                  ParseError);
  // malformed section header
  CHECK_THROWS_AS(parse_mps("GARBAGE\nENDATA\n"), ParseError);
  // two N rows
  CHECK_THROWS_AS(parse_mps("ROWS\n N a\n N b\nENDATA\n"), ParseError);
}

TEST_CASE("duplicate column entries summed in file order") {
  MpsModel m = parse_mps(
      "ROWS\n N obj\n G c1\nCOLUMNS\n X c1 1\n X c1 2.5\nRHS\nENDATA\n");
  CHECK(m.col_entries[0].at(0) == 3.5);
}

TEST_CASE("canonicalize sign conventions") {
  // L: x0 <= 3  ->  -x0 >= -3
  MpsModel less = parse_fixture("min 0\nrow <= 1 3\n");
  MilpInstance li = canonicalize(less);
  REQUIRE(li.num_cons == 1);
  CHECK(li.rows[0].val == Vec{-1.0});
  CHECK(li.rhs[0] == -3.0);

  // E: x0 + x1 = 1 -> adjacent pair {>= 1, negated >= -1}
  MpsModel eq = parse_fixture("min 0 0\nrow = 1 1 1\n");
  MilpInstance ei = canonicalize(eq);
  REQUIRE(ei.num_cons == 2);
  CHECK(ei.rows[0].val == Vec{1.0, 1.0});
  CHECK(ei.rhs[0] == 1.0);
  CHECK(ei.rows[1].val == Vec{-1.0, -1.0});
  CHECK(ei.rhs[1] == -1.0);

  // OBJSENSE MAX negates the objective
  MpsModel mx = parse_mps(
      "OBJSENSE\n    MAX\nROWS\n N obj\n G c1\n"
      "COLUMNS\n A obj 1 c1 1\n B obj -2 c1 1\nRHS\n R c1 1\nENDATA\n");
  MilpInstance mi = canonicalize(mx);
  CHECK(mi.objective == Vec{-1.0, 2.0});
}

TEST_CASE("general integers rejected at canonicalization") {
  MpsModel m = parse_mps(
      "ROWS\n N obj\n G c1\nCOLUMNS\n"
      "    MARKER                 'MARKER'                 'INTORG'\n"
      " X obj 1 c1 1\n"
      "    MARKER                 'MARKER'                 'INTEND'\n"
      "RHS\n R c1 1\nBOUNDS\n UP BND X 5\nENDATA\n");
  CHECK_THROWS_AS(canonicalize(m), UnsupportedFeature);
}

TEST_CASE("fixture round-trip is the identity on MpsModel") {
  Rng rng(23);
  for (int rep = 0; rep < 25; ++rep) {
    const int n = static_cast<int>(rng.uniform_int(1, 5));
    const int m = static_cast<int>(rng.uniform_int(0, 4));
    std::ostringstream os;
    os << "name r" << rep << "\nmin";
    for (int i = 0; i < n; ++i) os << " " << rng.uniform_int(-5, 5);
    os << "\n";
    for (int j = 0; j < m; ++j) {
      os << "row " << (j % 3 == 0 ? ">=" : j % 3 == 1 ? "<=" : "=");
      for (int i = 0; i < n; ++i) os << " " << rng.uniform_int(-3, 3);
      os << " " << rng.uniform_int(-3, 3) << "\n";
    }
    os << "bin";
    for (int i = 0; i < n; ++i) os << " " << i;
    os << "\n";
    MpsModel a = parse_fixture(os.str());
    MpsModel b = parse_fixture(serialize_fixture(a));
    CHECK(models_equal(a, b));
  }
}

TEST_CASE("canonicalization preserves the feasible set exactly") {
  Rng rng(29);
  for (int rep = 0; rep < 40; ++rep) {
    const int n = static_cast<int>(rng.uniform_int(2, 5));
    const int m = static_cast<int>(rng.uniform_int(1, 4));
    std::ostringstream os;
    os << "min";
    for (int i = 0; i < n; ++i) os << " 0";
    os << "\n";
    for (int j = 0; j < m; ++j) {
      os << "row " << (rng.uniform_int(0, 2) == 0   ? ">="
                       : rng.uniform_int(0, 1) == 0 ? "<="
                                                    : "=");
      bool nz = false;
      for (int i = 0; i < n; ++i) {
        const auto v = rng.uniform_int(-3, 3);
        nz |= (v != 0);
        os << " " << v;
      }
      os << " " << (nz ? rng.uniform_int(-3, 3) : rng.uniform_int(1, 3))
         << "\n";
    }
    os << "bin";
    for (int i = 0; i < n; ++i) os << " " << i;
    os << "\n";
    MpsModel raw = parse_fixture(os.str());
    MilpInstance canon = canonicalize(raw);
    for (int t = 0; t < 20; ++t) {
      Vec x(n);
      for (auto& v : x)
        v = t % 2 == 0 ? static_cast<double>(rng.uniform_int(0, 1))
                       : rng.uniform();
      CHECK(satisfies_raw(raw, x) == satisfies_canonical(canon, x));
    }
  }
}

TEST_CASE("canonicalization is deterministic") {
  const std::string text =
      "min 1 2 3\nrow >= 1 0 1 1\nrow = 1 1 1 2\nbin 0 1 2\n";
  MilpInstance a = canonicalize(parse_fixture(text));
  MilpInstance b = canonicalize(parse_fixture(text));
  CHECK(a.objective == b.objective);
  CHECK(a.rhs == b.rhs);
  REQUIRE(a.num_cons == b.num_cons);
  for (int j = 0; j < a.num_cons; ++j) {
    CHECK(a.rows[j].idx == b.rows[j].idx);
    CHECK(a.rows[j].val == b.rows[j].val);
  }
}

TEST_CASE("BV bound marks a binary variable") {
  MpsModel m = parse_mps(
      "ROWS\n N obj\n G c1\nCOLUMNS\n X obj 1 c1 1\nRHS\n R c1 1\n"
      "BOUNDS\n BV BND X\nENDATA\n");
  MilpInstance inst = canonicalize(m);
  CHECK(inst.var_kind[0] == VarKind::Binary);
  CHECK(inst.lower[0] == 0.0);
  CHECK(inst.upper[0] == 1.0);
}

TEST_CASE("scientific notation in numeric fields") {
  MpsModel m = parse_mps(
      "ROWS\n N obj\n G c1\nCOLUMNS\n X obj 1.5e2 c1 -2E-1\nRHS\n R c1 1e0\n"
      "ENDATA\n");
  CHECK(m.col_obj[0] == 150.0);
  CHECK(m.col_entries[0].at(0) == -0.2);
  CHECK(m.row_rhs[0] == 1.0);
}
