#include <doctest.h>

#include <sstream>

#include "fixtures.hpp"
#include "miwols/dataset.hpp"
#include "miwols/error.hpp"

using namespace miwols;

TEST_SUITE("tabular-data") {

TEST_CASE("fully observed column encodes to itself with unit indicator") {
  const Dataset d = fixture::small({1, 2, 3}, {0, 1, 0}, {0, 1, 1}, {1, 0, 1});
  const auto e = encode_missing_indicator(d, 0.0);
  REQUIRE(e.names == std::vector<std::string>{"C", "X", "R_X"});
  CHECK(e.h.col(1) == Vector((Vector(3) << 1, 0, 1).finished()));
  CHECK(e.h.col(2) == Vector::Ones(3));
}

TEST_CASE("missing cell takes the fill value and R = 0") {
  const Dataset d = fixture::small({1, 2, 3}, {0, 1, 0}, {0, 1, 1}, {1, -1, 0});
  const auto e = encode_missing_indicator(d, 0.0);
  CHECK(e.h.col(1) == Vector((Vector(3) << 1, 0, 0).finished()));
  CHECK(e.h.col(2) == Vector((Vector(3) << 1, 0, 1).finished()));

  const auto e5 = encode_missing_indicator(d, 5.0);
  CHECK(e5.h(1, 1) == 5.0);
  CHECK(e5.h(0, 1) == 1.0);
}

TEST_CASE("all-missing column is degenerate") {
  const Dataset d = fixture::small({1, 2, 3}, {0, 1, 0}, {0, 1, 1}, {-1, -1, -1});
  try {
    encode_missing_indicator(d);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::degenerate_column);
    CHECK(std::string(e.what()).find("degenerate column") != std::string::npos);
  }
}

TEST_CASE("binary x with fill 0 equals X*R") {
  const Dataset d = fixture::small({1, 2, 3, 4}, {0, 1, 0, 1}, {0, 1, 1, 0}, {1, -1, 0, 1});
  const auto e = encode_missing_indicator(d);
  const Matrix xr = build_term_matrix(e, {"X*R_X"});
  CHECK(xr.col(1) == e.h.col(*e.find("X")));
}

TEST_CASE("design has a leading intercept and elementwise products") {
  const Dataset d = fixture::small({1, 2, 3}, {0, 1, 0}, {0, 1, 1}, {1, -1, 1});
  const auto e = encode_missing_indicator(d);
  std::vector<std::string> names;
  const Matrix m = build_term_matrix(e, {"intercept", "X*R_X", "R_X", "C"}, &names);
  CHECK(m.rows() == 3);
  CHECK(m.cols() == 4);
  CHECK(m.col(0) == Vector::Ones(3));
  CHECK(m.col(1) == Vector((Vector(3) << 1, 0, 1).finished()));
  CHECK(names == std::vector<std::string>{"intercept", "X*R_X", "R_X", "C"});
  CHECK(build_term_matrix(e, {"X·R_X"}).col(1) == m.col(1));
}

TEST_CASE("duplicate term is rejected and named") {
  const Dataset d = fixture::random(40, 1);
  const auto e = encode_missing_indicator(d);
  ModelSpec s = fixture::full_spec();
  s.treatment_terms = {"C1", "C1"};
  try {
    build_design(e, s);
    FAIL("expected rank error");
  } catch (const Error& err) {
    CHECK(err.code() == ErrorCode::rank_deficient);
    CHECK(std::string(err.what()).find("C1") != std::string::npos);
  }
}

TEST_CASE("unknown term is an input error") {
  const auto e = encode_missing_indicator(fixture::random(20, 2));
  CHECK_THROWS_AS(build_term_matrix(e, {"nope"}), Error);
}

TEST_CASE("categorical confounder gets dummies and a missing level") {
  Dataset d;
  d.y = Vector::LinSpaced(6, 0, 5);
  d.z = (Vector(6) << 0, 1, 0, 1, 0, 1).finished();
  d.c.resize(6, 0);
  PartialConfounder g{"g", (Vector(6) << 0, 1, 2, 0, 0, 1).finished(), Mask::Ones(6), true, {"a", "b", "c"}};
  g.observed[4] = false;
  d.x.push_back(g);
  const auto e = encode_missing_indicator(d);
  CHECK(e.names == std::vector<std::string>{"g=b", "g=c", "g=missing"});
  CHECK(e.h.col(2) == Vector((Vector(6) << 0, 0, 0, 0, 1, 0).finished()));
  CHECK(e.h(1, 0) == 1.0);
  CHECK(e.h(4, 0) == 0.0);
}

TEST_CASE("encoding is deterministic and row-permutation equivariant") {
  const Dataset d = fixture::random(30, 3);
  const auto a = encode_missing_indicator(d);
  const auto b = encode_missing_indicator(d);
  CHECK(a.h == b.h);
  std::vector<Index> perm;
  for (Index i = 29; i >= 0; --i) perm.push_back(i);
  const auto p = encode_missing_indicator(d.select_rows(perm));
  CHECK(p.h == a.h.colwise().reverse());
}

TEST_CASE("validate rejects non-binary treatment and bad shapes") {
  Dataset d = fixture::random(10, 4);
  d.z[3] = 0.5;
  CHECK_THROWS_AS(d.validate(), Error);
  Dataset e = fixture::random(10, 4);
  e.y.conservativeResize(9);
  CHECK_THROWS_AS(e.validate(), Error);
}

TEST_CASE("CSV: NA and empty cells, CRLF, quotes, BOM") {
  std::istringstream in(
      "\xEF\xBB\xBFy,z,\"C\",X,g\r\n"
      "1.5,1,0,NA,lo\r\n"
      "2,0,1,0.25,\r\n"
      "\"3\",1,0,,hi\r\n");
  ColumnRoles roles{"y", "z", {"C"}, {"X", "g"}, {"g"}};
  const Dataset d = read_csv(in, roles);
  CHECK(d.rows() == 3);
  CHECK(d.y[2] == 3.0);
  CHECK(d.x[0].observed.count() == 1);
  CHECK(d.x[0].values[1] == 0.25);
  CHECK(d.x[1].levels == std::vector<std::string>{"hi", "lo"});
  CHECK(d.x[1].values[0] == 1.0);
  CHECK_FALSE(d.x[1].observed[1]);
}

TEST_CASE("CSV: missing column is named") {
  std::istringstream in("y,z,C\n1,0,1\n");
  ColumnRoles roles{"y", "z", {"C", "K"}, {}, {}};
  try {
    read_csv(in, roles);
    FAIL("expected error");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("'K'") != std::string::npos);
  }
}

TEST_CASE("CSV: unparsable cell and missing outcome are errors") {
  ColumnRoles roles{"y", "z", {"C"}, {}, {}};
  std::istringstream bad("y,z,C\n1,0,abc\n");
  CHECK_THROWS_AS(read_csv(bad, roles), Error);
  std::istringstream gap("y,z,C\nNA,0,1\n");
  CHECK_THROWS_AS(read_csv(gap, roles), Error);
}

TEST_CASE("CSV: numeric categorical levels sort numerically") {
  std::istringstream in("y,z,g\n1,0,10\n2,1,9\n3,0,NA\n");
  const Dataset d = read_csv(in, {"y", "z", {}, {"g"}, {"g"}});
  CHECK(d.x[0].levels == std::vector<std::string>{"9", "10"});
}

TEST_CASE("CSV round trip preserves values and missingness") {
  const Dataset d = fixture::random(25, 5);
  std::stringstream io;
  write_csv(io, d);
  const Dataset r = read_csv(io, {"y", "z", {"C1", "C2"}, {"X"}, {}});
  CHECK(r.y == d.y);
  CHECK(r.c == d.c);
  CHECK((r.x[0].observed == d.x[0].observed).all());
  const auto a = encode_missing_indicator(d), b = encode_missing_indicator(r);
  CHECK(a.h == b.h);
}

}  // TEST_SUITE
