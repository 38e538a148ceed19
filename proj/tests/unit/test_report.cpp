#include <doctest.h>

#include <sstream>

#include "miwols/report.hpp"

using namespace miwols;

TEST_SUITE("report") {

TEST_CASE("number formatting") {
  CHECK(format_number(0.1) == "0.1");
  CHECK(format_number(-2.35) == "-2.35");
  CHECK(format_number(std::nan("")) == "NA");
  CHECK(format_fixed(3.14159, 2) == "3.14");
}

TEST_CASE("header carries the config hash and seed") {
  ReportHeader h{"simulate", "{\"a\":1}", 7};
  std::ostringstream csv, md;
  write_header(csv, h, false);
  write_header(md, h, true);
  CHECK(csv.str().rfind("# miwols simulate config_hash=", 0) == 0);
  CHECK(csv.str().find("seed=7") != std::string::npos);
  CHECK(md.str().rfind("<!--", 0) == 0);
  CHECK(h.config_hash() == fnv1a64("{\"a\":1}"));
  CHECK(fnv1a64("") == 0xcbf29ce484222325ULL);
  CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
}

TEST_CASE("balance rows") {
  const Vector grid = Vector::LinSpaced(9, 0.1, 0.9);
  const auto rows = balance_rows({WeightScheme::abs(), WeightScheme::ipw(), WeightScheme::sipw(0.73)}, grid);
  REQUIRE(rows.size() == 3);
  CHECK(rows[0].balanced);
  CHECK(rows[1].balanced);
  CHECK_FALSE(rows[2].balanced);
  CHECK(rows[2].max_abs_defect == doctest::Approx(0.46));
  std::ostringstream md;
  write_balance_markdown(md, {"balance-check", "{}", 1}, rows, {});
  CHECK(md.str().find("| SIPW") != std::string::npos);
}

}  // TEST_SUITE
