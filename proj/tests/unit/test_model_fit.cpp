#include <doctest.h>

#include <cmath>

#include "fixtures.hpp"
#include "miwols/error.hpp"
#include "miwols/model_fit.hpp"
#include "oracles.hpp"

using namespace miwols;

TEST_SUITE("model-fit") {

TEST_CASE("intercept-only logit of a balanced sample is zero") {
  const Vector z = (Vector(4) << 0, 1, 0, 1).finished();
  const auto f = fit_logistic(Matrix::Ones(4, 1), z);
  CHECK(f.converged);
  CHECK(std::abs(f.alpha[0]) < 1e-12);
  CHECK((f.fitted.array() - 0.5).abs().maxCoeff() < 1e-12);
}

TEST_CASE("intercept-only logit equals the closed-form log-odds") {
  Vector z = Vector::Zero(100);
  z.head(73).setOnes();
  const auto f = fit_logistic(Matrix::Ones(100, 1), z);
  CHECK(f.alpha[0] == doctest::Approx(std::log(0.73 / 0.27)).epsilon(1e-10));
  CHECK(f.alpha[0] == doctest::Approx(0.9946).epsilon(1e-4));
}

TEST_CASE("constant treatment and separation are reported") {
  CHECK_THROWS_AS(fit_logistic(Matrix::Ones(5, 1), Vector::Ones(5)), Error);
  try {
    fit_logistic(Matrix::Ones(5, 1), Vector::Zero(5));
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::degenerate_treatment);
  }
  Matrix h(4, 2);
  h << 1, 0, 1, 0, 1, 1, 1, 1;
  const Vector z = h.col(1);
  try {
    fit_logistic(h, z);
    FAIL("expected separation");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::separation);
    CHECK(std::string(e.what()).find("separation suspected") != std::string::npos);
  }
}

TEST_CASE("logistic score matches finite differences of the log-likelihood") {
  const Dataset d = fixture::random(300, 11);
  Matrix h(300, 3);
  h << Vector::Ones(300), d.c;
  const auto f = fit_logistic(h, d.z);
  CHECK(f.score.cwiseAbs().maxCoeff() < 1e-6);
  // Gradient check away from the optimum, where the score is not zero.
  Vector a = f.alpha + Vector::Constant(3, 0.2);
  const Vector g = logistic_score(h, d.z, a);
  for (Index j = 0; j < 3; ++j) {
    const double step = 1e-6 * std::max(1.0, std::abs(a[j]));
    Vector up = a, dn = a;
    up[j] += step;
    dn[j] -= step;
    const double fd = (logistic_log_likelihood(h, d.z, up) - logistic_log_likelihood(h, d.z, dn)) / (2 * step);
    CHECK(fd == doctest::Approx(g[j]).epsilon(1e-5));
  }
}

TEST_CASE("IRLS deviance is non-increasing") {
  const Dataset d = fixture::random(200, 12);
  Matrix h(200, 3);
  h << Vector::Ones(200), d.c;
  double prev = INFINITY;
  for (int it = 1; it <= 6; ++it) {
    IrlsOptions o;
    o.max_iterations = it;
    o.relative_tolerance = 0.0;
    double dev = 0.0;
    try {
      dev = fit_logistic(h, d.z, o).deviance;
    } catch (const Error&) {
      // Not yet converged after `it` steps; the deviance is still checked below.
      continue;
    }
    CHECK(dev <= prev + 1e-9);
    prev = dev;
  }
}

TEST_CASE("WLS interpolates a saturated design") {
  Matrix x(3, 3);
  x << 1, 0, 0, 1, 1, 0, 1, 1, 1;
  const Vector y = (Vector(3) << 2, -1, 4).finished();
  const auto f = fit_wls(x, y, Vector::Ones(3));
  CHECK(f.residuals.cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("WLS recovers exact linear data") {
  Matrix x(5, 2);
  x << 1, 0, 1, 1, 1, 2, 1, 3, 1, 4;
  const Vector y = 2.0 * x.col(1);
  const auto f = fit_wls(x, y, Vector::Ones(5));
  CHECK(std::abs(f.coef[0]) < 1e-12);
  CHECK(f.coef[1] == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("WLS matches the normal-equations oracle") {
  Matrix x(5, 3);
  x << 1, 0.3, 1, 1, -1.2, 0, 1, 2.0, 1, 1, 0.7, 0, 1, -0.4, 1;
  const Vector y = (Vector(5) << 1.1, -0.7, 3.2, 0.4, 1.9).finished();
  const Vector w = (Vector(5) << 1, 2, 1, 2, 1).finished();
  const auto f = fit_wls(x, y, w);
  const auto ref = oracle::weighted_normal_equations(oracle::to_rows(x), oracle::to_std(y), oracle::to_std(w));
  for (Index j = 0; j < 3; ++j) CHECK(std::abs(f.coef[j] - ref[static_cast<std::size_t>(j)]) < 1e-10);
  CHECK(f.score.cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("WLS is invariant to rescaling the weights") {
  const Dataset d = fixture::random(80, 13);
  Matrix x(80, 3);
  x << Vector::Ones(80), d.c;
  Vector w = (d.c.col(0).array().abs() + 0.5).matrix();
  const auto a = fit_wls(x, d.y, w);
  const auto b = fit_wls(x, d.y, 37.5 * w);
  CHECK((a.coef - b.coef).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("WLS errors: zero weights, negative weights, weighted rank deficiency") {
  Matrix x(4, 2);
  x << 1, 0, 1, 1, 1, 0, 1, 1;
  const Vector y = Vector::Ones(4);
  CHECK_THROWS_AS(fit_wls(x, y, Vector::Zero(4)), Error);
  CHECK_THROWS_AS(fit_wls(x, y, -Vector::Ones(4)), Error);
  // Only rows with x1 = 0 carry weight: the slope is unidentified.
  const Vector w = (Vector(4) << 1, 0, 1, 0).finished();
  try {
    fit_wls(x, y, w);
    FAIL("expected rank deficiency");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::rank_deficient);
  }
}

}  // TEST_SUITE
