#include <doctest.h>

#include <cmath>
#include <vector>

#include "fixtures.hpp"
#include "miwols/error.hpp"
#include "miwols/estimators.hpp"
#include "miwols/inference.hpp"
#include "miwols/model_fit.hpp"

using namespace miwols;

namespace {

StackedScores ols_scores(const Matrix& x, const Vector& y, const Vector& theta) {
  StackedScores s;
  s.theta = theta;
  s.n = x.rows();
  s.segments = {{"beta", 0, x.cols()}};
  s.block = [&x, &y](const Vector& t, Index b, Index e) {
    const Vector r = y.segment(b, e - b) - x.middleRows(b, e - b) * t;
    return Matrix(r.asDiagonal() * x.middleRows(b, e - b));
  };
  return s;
}

Matrix hc0(const Matrix& x, const Vector& resid) {
  const Matrix bread = (x.transpose() * x).inverse();
  const Matrix meat = x.transpose() * resid.array().square().matrix().asDiagonal() * x;
  return bread * meat * bread;
}

}  // namespace

TEST_SUITE("inference") {

TEST_CASE("OLS sandwich equals HC0") {
  const Dataset d = fixture::random(150, 31);
  Matrix x(150, 3);
  x << Vector::Ones(150), d.c;
  const auto f = fit_wls(x, d.y, Vector::Ones(150));
  const auto s = ols_scores(x, d.y, f.coef);
  const Matrix v = sandwich_cov(s, f.coef);
  const Matrix ref = hc0(x, f.residuals);
  CHECK((v - ref).cwiseAbs().maxCoeff() < 1e-8 * ref.cwiseAbs().maxCoeff());
}

TEST_CASE("mean estimation reduces to s^2 / n") {
  const Vector y = (Vector(5) << 1.0, 3.0, 4.0, 6.0, 11.0).finished();
  const Matrix x = Matrix::Ones(5, 1);
  const Vector mu = (Vector(1) << y.mean()).finished();
  const Matrix v = sandwich_cov(ols_scores(x, y, mu), mu);
  const double s2 = (y.array() - y.mean()).square().sum() / 5.0;
  CHECK(v(0, 0) == doctest::Approx(s2 / 5.0).epsilon(1e-10));
}

TEST_CASE("duplicating every row halves the covariance") {
  const Dataset d = fixture::random(120, 32);
  std::vector<Index> twice;
  for (Index i = 0; i < 120; ++i) twice.push_back(i);
  for (Index i = 0; i < 120; ++i) twice.push_back(i);
  const Dataset dd = d.select_rows(twice);
  const auto spec = fixture::full_spec();
  const auto a = build_design(encode_missing_indicator(d), spec);
  const auto b = build_design(encode_missing_indicator(dd), spec);
  for (auto kind : {WeightKind::unw, WeightKind::abs, WeightKind::ipw}) {
    const auto fa = fit_miwols(a, d, WeightScheme::for_data(kind, d.z));
    const auto fb = fit_miwols(b, dd, WeightScheme::for_data(kind, dd.z));
    CHECK(fb.se[0] * fb.se[0] == doctest::Approx(fa.se[0] * fa.se[0] / 2.0).epsilon(1e-5));
  }
}

TEST_CASE("UNW sandwich does not involve the propensity model") {
  const Dataset d = fixture::random(200, 33);
  const auto design = build_design(encode_missing_indicator(d), fixture::full_spec());
  const auto f = fit_miwols(design, d, WeightScheme::unw());
  CHECK_FALSE(f.alpha_hat);
  for (const auto& s : f.segments) CHECK(s.label != "alpha");
  CHECK(f.cov.rows() == design.h_beta.cols() + design.h_psi.cols());
}

TEST_CASE("stacked scores agree with the direct WLS score") {
  const Dataset d = fixture::random(100, 34);
  const auto design = build_design(encode_missing_indicator(d), fixture::full_spec());
  const auto ps = fit_propensity(design, d);
  const auto f = fit_miwols(design, d, WeightScheme::ipw(), ps);
  const Index pa = design.h_alpha.cols();
  Vector theta(f.cov.rows());
  theta << ps.logistic.alpha, f.beta_hat, f.psi_hat;
  const auto s = miwols_scores(design, d, WeightScheme::ipw(), theta, true);
  REQUIRE(s.segment("alpha").size == pa);
  const Matrix per = s.per_observation(theta);
  CHECK((per.colwise().sum().transpose() - s.total(theta)).cwiseAbs().maxCoeff() < 1e-9);
  CHECK(s.total(theta).cwiseAbs().maxCoeff() < 1e-6);
  // Perturbing beta moves only the outcome equations, and linearly.
  Vector moved = theta;
  moved[pa] += 0.5;
  const Vector diff = s.total(moved) - s.total(theta);
  CHECK(diff.head(pa).cwiseAbs().maxCoeff() < 1e-12);
  const Matrix x = outcome_regressors(design, d.z);
  const Vector w = compute_weights(WeightScheme::ipw(), d.z, ps.pi);
  const Vector expected = -0.5 * x.transpose() * (w.array() * x.col(0).array()).matrix();
  CHECK((diff.tail(diff.size() - pa) - expected).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("singular sensitivity is reported") {
  Matrix x(4, 2);
  x << 1, 2, 1, 2, 1, 2, 1, 2;
  const Vector y = Vector::LinSpaced(4, 0, 3);
  const Vector t = Vector::Zero(2);
  try {
    sandwich_cov(ols_scores(x, y, t), t);
    FAIL("expected error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::non_invertible_sensitivity);
  }
}

TEST_CASE("ASE/ESE report") {
  const std::vector<double> est{1.0, 1.0, 1.0};
  const std::vector<double> se{0.1, 0.1, 0.1};
  const auto flat = ase_ese_report(est, se, 1.0);
  REQUIRE(flat.ese);
  CHECK(*flat.ese == 0.0);
  CHECK_FALSE(flat.ratio);
  CHECK(flat.coverage == 1.0);

  const auto one = ase_ese_report(std::vector<double>{2.0}, std::vector<double>{0.5}, 0.0);
  CHECK_FALSE(one.ese);
  CHECK(one.coverage == 0.0);

  // Calibrated normal draws: ratio near one and nominal coverage.
  Philox4x32 rng(99, 1);
  std::vector<double> e, s;
  for (int i = 0; i < 20000; ++i) {
    e.push_back(2.0 * rng.normal());
    s.push_back(2.0);
  }
  const auto r = ase_ese_report(e, s, 0.0);
  REQUIRE(r.ratio);
  CHECK(*r.ratio == doctest::Approx(1.0).epsilon(0.02));
  CHECK(r.coverage == doctest::Approx(0.95).epsilon(0.01));
}

}  // TEST_SUITE
