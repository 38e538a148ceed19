#include <doctest.h>

#include <cmath>
#include <numeric>

#include "miwols/cohort.hpp"
#include "miwols/error.hpp"

using namespace miwols;

TEST_SUITE("cohort") {

TEST_CASE("default marginals are proper distributions") {
  const auto cfg = CohortConfig::defaults();
  CHECK_NOTHROW(cfg.validate());
  for (const auto* m : {&cfg.age, &cfg.period, &cfg.ethnicity, &cfg.egfr}) {
    CHECK(std::abs(std::accumulate(m->probs.begin(), m->probs.end(), 0.0) - 1.0) < 1e-9);
    CHECK(m->levels.size() == m->probs.size());
  }
  CHECK(cfg.treated_fraction == doctest::Approx(0.2734).epsilon(1e-3));
  CHECK(cfg.ethnicity_missing == doctest::Approx(0.590).epsilon(1e-3));
  CHECK(cfg.egfr_missing == doctest::Approx(0.529).epsilon(1e-3));
}

TEST_CASE("invalid configurations are rejected") {
  auto a = CohortConfig::defaults();
  a.age.probs[0] += 0.01;
  CHECK_THROWS_AS(a.validate(), Error);
  auto b = CohortConfig::defaults();
  b.egfr_missing = 1.0;
  CHECK_THROWS_AS(b.validate(), Error);
  auto c = CohortConfig::defaults();
  c.egfr_older_shift.pop_back();
  CHECK_THROWS_AS(c.validate(), Error);
  auto d = CohortConfig::defaults();
  d.n = 10;
  CHECK_THROWS_AS(generate_cohort(d), Error);
}

TEST_CASE("reduced-size cohort is calibrated") {
  auto cfg = CohortConfig::defaults();
  cfg.n = 40000;
  const auto co = generate_cohort(cfg);
  const auto& d = co.data;
  CHECK(d.rows() == 40000);
  const double p = cfg.treated_fraction;
  CHECK(std::abs(d.z.mean() - p) < 3.0 * std::sqrt(p * (1 - p) / 40000.0));
  const auto s = summarize_cohort(d, cfg);
  CHECK(s.outcome_mean == doctest::Approx(82.15).epsilon(0.2 / 82.15));
  CHECK(s.outcome_sd == doctest::Approx(17.82).epsilon(0.2 / 17.82));
  REQUIRE(d.x.size() == 2);
  CHECK(std::abs(static_cast<double>(d.x[0].missing_count()) / 40000.0 - 0.590) < 0.01);
  CHECK(std::abs(static_cast<double>(d.x[1].missing_count()) / 40000.0 - 0.529) < 0.01);
  CHECK(co.pi.minCoeff() > 0.05);
  CHECK(co.pi.maxCoeff() < 0.7);
  for (const auto& r : s.rows) {
    if (r.variable == "diabetes") CHECK(std::abs(r.percent - 14.6) < 1.0);
    if (r.variable == "age" && r.level == "<45") CHECK(std::abs(r.percent - 60.0) < 1.0);
  }
}

TEST_CASE("same seed gives the same cohort") {
  auto cfg = CohortConfig::defaults();
  cfg.n = 2000;
  const auto a = generate_cohort(cfg);
  const auto b = generate_cohort(cfg);
  CHECK(a.data.y == b.data.y);
  CHECK(a.data.z == b.data.z);
  cfg.seed += 1;
  CHECK(generate_cohort(cfg).data.y != a.data.y);
}

TEST_CASE("working models toggle the interaction") {
  const auto cfg = CohortConfig::defaults();
  const auto both = cohort_models(cfg, true, true);
  const auto none = cohort_models(cfg, false, false);
  CHECK(both.treatment_terms.size() == none.treatment_terms.size() + 1);
  CHECK(both.treatment_free_terms.back() == cfg.interaction);
  CHECK(none.blip_terms == std::vector<std::string>{"intercept"});
  CHECK(illustration_grid().size() == 4);
}

TEST_CASE("illustration rows follow the table layout") {
  auto cfg = CohortConfig::defaults();
  cfg.n = 20000;
  const auto co = generate_cohort(cfg);
  std::vector<Method> methods{*parse_method("UNW"), *parse_method("ABS"), *parse_method("GEST")};
  const auto rows = run_illustration(co.data, cfg, illustration_grid(), methods);
  REQUIRE(rows.size() == 2 + 4 + 4);
  CHECK(rows[0].method == "UNW");
  CHECK_FALSE(rows[0].pi_correct);
  CHECK(rows[2].method == "ABS");
  for (const auto& r : rows) {
    CHECK(r.bias == doctest::Approx(r.estimate - cfg.true_effect));
    CHECK(r.ci_lower < r.estimate);
    CHECK(r.ci_upper > r.estimate);
  }
  // ABS and GEST coincide when the outcome design contains the treatment design.
  for (int k : {0, 3}) CHECK(std::abs(rows[2 + k].estimate - rows[6 + k].estimate) < 1e-8);
}

}  // TEST_SUITE
