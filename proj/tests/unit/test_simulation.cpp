#include <doctest.h>

#include <cmath>

#include "miwols/error.hpp"
#include "miwols/model_fit.hpp"
#include "miwols/simulation.hpp"

using namespace miwols;

TEST_SUITE("sim-engine") {

TEST_CASE("scenario flags follow the zero parameters") {
  ScenarioConfig c;
  CHECK(c.msita());
  CHECK(c.specification() == "CC");
  c.delta_z = -4.2;
  c.gamma = -1.55;
  CHECK(c.specification() == "IC");
  CHECK_FALSE(c.cio());
  CHECK(c.label().find("!CIO") != std::string::npos);
  CHECK(table1_grid(500, 10, 1).size() == 16);
  CHECK(full_grid(500, 10, 1).size() == 32);
}

TEST_CASE("treated and missing fractions lie in the documented bands") {
  for (auto cfg : full_grid(500, 3, 20240611)) {
    for (Index r = 0; r < 3; ++r) {
      const auto s = simulate_sample(cfg, r);
      const double treated = s.data.z.mean();
      const double missing = 1.0 - s.r.mean();
      CHECK(treated >= 0.37);
      CHECK(treated <= 0.90);
      CHECK(missing >= 0.29);
      CHECK(missing <= 0.56);
    }
  }
}

TEST_CASE("generation is deterministic and masks X where R = 0") {
  ScenarioConfig cfg;
  cfg.tau = 1.25;
  const auto a = simulate_sample(cfg, 5);
  const auto b = simulate_sample(cfg, 5);
  CHECK(a.data.y == b.data.y);
  CHECK(a.data.z == b.data.z);
  for (Index i = 0; i < cfg.n; ++i) CHECK(a.data.x[0].observed[i] == (a.r[i] == 1.0));
  CHECK(simulate_sample(cfg, 6).data.y != a.data.y);
  CHECK_THROWS_AS(simulate_sample(cfg, cfg.reps), Error);
}

TEST_CASE("correct treatment model recovers the mechanism at large n") {
  ScenarioConfig cfg;
  cfg.n = 200000;
  cfg.reps = 1;
  const auto d = generate_scenario(cfg, 0);
  const auto design = build_design(encode_missing_indicator(d), working_models(cfg));
  const auto f = fit_logistic(design.h_alpha, d.z);
  const Vector truth = (Vector(4) << -1.2, 1.38, 2.0, 1.69).finished();
  const Matrix cov = f.information.inverse();
  for (Index j = 0; j < 4; ++j) CHECK(std::abs(f.alpha[j] - truth[j]) < 3.0 * std::sqrt(cov(j, j)));
}

TEST_CASE("working models") {
  ScenarioConfig cfg;
  CHECK(working_models(cfg).blip_terms.size() == 1);
  cfg.psi1 = -1.0;
  CHECK(working_models(cfg).blip_terms.size() == 2);
  CHECK(working_models(cfg).treatment_free_terms ==
        std::vector<std::string>{"intercept", "X*R_X", "R_X", "C"});
}

TEST_CASE("potential outcomes reproduce the estimand") {
  ScenarioConfig cfg;
  cfg.n = 1000000;
  cfg.reps = 1;
  cfg.psi1 = -1.0;
  cfg.gamma = -1.55;
  cfg.tau = 1.25;
  const auto s = simulate_sample(cfg, 0);
  const Vector diff = s.y1 - s.y0;
  const Vector c = s.data.c.col(0);
  double t1 = 0, n1 = 0, t0 = 0, n0 = 0;
  for (Index i = 0; i < cfg.n; ++i) {
    (c[i] == 1.0 ? t1 : t0) += diff[i];
    (c[i] == 1.0 ? n1 : n0) += 1.0;
  }
  CHECK(t1 / n1 == doctest::Approx(-3.35).epsilon(1e-9));
  CHECK(t0 / n0 == doctest::Approx(-2.35).epsilon(1e-9));
  const double ate = diff.mean();
  const double se = std::sqrt(0.58 * 0.42 / static_cast<double>(cfg.n));
  CHECK(std::abs(ate - (-2.35 - 0.58)) < 3.0 * se);
}

TEST_CASE("true parameters per method") {
  ScenarioConfig cfg;
  CHECK(true_parameters(cfg, *parse_method("ABS")) == std::vector<double>{-2.35});
  cfg.psi1 = -1.0;
  CHECK(true_parameters(cfg, *parse_method("GEST")) == std::vector<double>{-2.35, -1.0});
  CHECK(true_parameters(cfg, *parse_method("AIPW")).size() == 1);
}

TEST_CASE("metrics are internally consistent") {
  ScenarioConfig cfg;
  cfg.reps = 40;
  const auto r = run_monte_carlo(cfg, all_methods(), 1);
  CHECK(r.valid);
  CHECK(r.failures == 0);
  for (const auto& m : r.rows) {
    REQUIRE(m.ese);
    CHECK(std::abs(m.mse - (m.bias * m.bias + *m.ese * *m.ese)) < 1e-10);
    CHECK(m.pct_bias_over_ase == doctest::Approx(100.0 * m.bias / m.ase));
  }
  const auto* g = r.find("GEST");
  REQUIRE(g);
  CHECK(*g->mse_relative_to_gest == 1.0);
  CHECK(*r.find("ABS")->mse_relative_to_gest == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("a single replication has no ESE") {
  ScenarioConfig cfg;
  cfg.reps = 1;
  const auto r = run_monte_carlo(cfg, {*parse_method("ABS")}, 1);
  const auto& m = r.rows.at(0);
  CHECK_FALSE(m.ese);
  CHECK_FALSE(m.ase_over_ese);
  CHECK(m.bias == doctest::Approx(r.estimates[0][0]->estimate[0] - (-2.35)));
}

TEST_CASE("results do not depend on the worker count") {
  ScenarioConfig cfg;
  cfg.reps = 24;
  cfg.delta_y = -4.2;
  const auto a = run_monte_carlo(cfg, all_methods(), 1);
  const auto b = run_monte_carlo(cfg, all_methods(), 4);
  for (std::size_t m = 0; m < a.estimates.size(); ++m) {
    for (std::size_t r = 0; r < a.estimates[m].size(); ++r) {
      CHECK(a.estimates[m][r]->estimate == b.estimates[m][r]->estimate);
      CHECK(a.estimates[m][r]->se == b.estimates[m][r]->se);
    }
  }
  CHECK(a.rows[0].mean == b.rows[0].mean);
}

}  // TEST_SUITE
