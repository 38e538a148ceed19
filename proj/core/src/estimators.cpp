#include "miwols/estimators.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

#include "miwols/error.hpp"

namespace miwols {

std::string Method::tag() const {
  switch (estimator) {
    case EstimatorKind::aipw: return "AIPW";
    case EstimatorKind::gest: return "GEST";
    case EstimatorKind::miwols: break;
  }
  return std::string(to_string(scheme));
}

std::optional<Method> parse_method(std::string_view tag) {
  std::string up(tag);
  std::transform(up.begin(), up.end(), up.begin(), [](unsigned char c) { return std::toupper(c); });
  if (up == "AIPW") return Method{EstimatorKind::aipw, WeightKind::unw};
  if (up == "GEST" || up == "G-ESTIMATION") return Method{EstimatorKind::gest, WeightKind::unw};
  if (auto k = parse_weight_kind(up)) return Method{EstimatorKind::miwols, *k};
  return std::nullopt;
}

Matrix FitResult::psi_cov() const {
  for (const auto& s : segments) {
    if (s.label == "psi") return cov.block(s.offset, s.offset, s.size, s.size);
  }
  return cov;
}

namespace {

void finish_intervals(FitResult& r) {
  r.ci95.resize(r.psi_hat.size(), 2);
  r.ci95.col(0) = r.psi_hat - kCi95Multiplier * r.se;
  r.ci95.col(1) = r.psi_hat + kCi95Multiplier * r.se;
}

Vector psi_standard_errors(const Matrix& cov, const Segment& psi) {
  return cov.diagonal().segment(psi.offset, psi.size).cwiseMax(0.0).cwiseSqrt();
}

}  // namespace

PropensityFit fit_propensity(const AugmentedDesign& design, const Dataset& data) {
  PropensityFit ps;
  ps.logistic = fit_logistic(design.h_alpha, data.z);
  ps.pi = clip_propensity(ps.logistic.fitted);
  return ps;
}

Matrix outcome_regressors(const AugmentedDesign& design, const Vector& z) {
  Matrix x(design.h_beta.rows(), design.h_beta.cols() + design.h_psi.cols());
  x << design.h_beta, z.asDiagonal() * design.h_psi;
  return x;
}

StackedScores miwols_scores(const AugmentedDesign& design, const Dataset& data,
                            const WeightScheme& scheme, const Vector& theta, bool include_alpha) {
  if (!include_alpha && scheme.kind() != WeightKind::unw) {
    throw Error(ErrorCode::invalid_input, "weighted MI-WOLS scores require the propensity segment");
  }
  const Index pa = include_alpha ? design.h_alpha.cols() : 0;
  const Index pb = design.h_beta.cols();
  const Index pp = design.h_psi.cols();
  StackedScores s;
  s.theta = theta;
  s.n = data.rows();
  if (include_alpha) s.segments.push_back({"alpha", 0, pa});
  s.segments.push_back({"beta", pa, pb});
  s.segments.push_back({"psi", pa + pb, pp});

  const Matrix* ha = &design.h_alpha;
  const Matrix* hb = &design.h_beta;
  const Matrix* hp = &design.h_psi;
  const Vector* y = &data.y;
  const Vector* z = &data.z;

  // Residuals, weights and treatment residuals for rows [b, b + m).
  auto parts = [=](const Vector& t, Index b, Index m, Vector& resid, Vector& w, Vector& zc) {
    const auto zb = z->segment(b, m);
    resid = y->segment(b, m) - hb->middleRows(b, m) * t.segment(pa, pb) -
            zb.cwiseProduct(hp->middleRows(b, m) * t.segment(pa + pb, pp));
    w.resize(m);
    if (include_alpha) {
      const Vector mu = expit(Vector(ha->middleRows(b, m) * t.head(pa)));
      const Vector pi = clip_propensity(mu);
      for (Index i = 0; i < m; ++i) w[i] = scheme(zb[i], pi[i]);
      zc = zb - mu;
    } else {
      w.setOnes();
    }
  };

  s.block = [=](const Vector& t, Index b, Index e) {
    const Index m = e - b;
    Vector resid, w, zc;
    parts(t, b, m, resid, w, zc);
    Matrix out(m, pa + pb + pp);
    if (include_alpha) out.leftCols(pa) = zc.asDiagonal() * ha->middleRows(b, m);
    const Vector wr = w.cwiseProduct(resid);
    out.middleCols(pa, pb) = wr.asDiagonal() * hb->middleRows(b, m);
    out.rightCols(pp) = (wr.cwiseProduct(z->segment(b, m))).asDiagonal() * hp->middleRows(b, m);
    return out;
  };
  s.sum = [=](const Vector& t) {
    const Index n = y->size();
    Vector resid, w, zc;
    parts(t, 0, n, resid, w, zc);
    Vector out(pa + pb + pp);
    if (include_alpha) out.head(pa) = ha->transpose() * zc;
    const Vector wr = w.cwiseProduct(resid);
    out.segment(pa, pb) = hb->transpose() * wr;
    out.tail(pp) = hp->transpose() * wr.cwiseProduct(*z);
    return out;
  };
  return s;
}

StackedScores gest_scores(const AugmentedDesign& design, const Dataset& data, const Vector& theta) {
  const Index pa = design.h_alpha.cols();
  const Index pb = design.h_beta.cols();
  const Index pp = design.h_psi.cols();
  StackedScores s;
  s.theta = theta;
  s.n = data.rows();
  s.segments = {{"alpha", 0, pa}, {"beta", pa, pb}, {"psi", pa + pb, pp}};

  const Matrix* ha = &design.h_alpha;
  const Matrix* hb = &design.h_beta;
  const Matrix* hp = &design.h_psi;
  const Vector* y = &data.y;
  const Vector* z = &data.z;

  auto parts = [=](const Vector& t, Index b, Index m, Vector& resid, Vector& zc) {
    const auto zb = z->segment(b, m);
    resid = y->segment(b, m) - hb->middleRows(b, m) * t.segment(pa, pb) -
            zb.cwiseProduct(hp->middleRows(b, m) * t.segment(pa + pb, pp));
    zc = zb - expit(Vector(ha->middleRows(b, m) * t.head(pa)));
  };

  s.block = [=](const Vector& t, Index b, Index e) {
    const Index m = e - b;
    Vector resid, zc;
    parts(t, b, m, resid, zc);
    Matrix out(m, pa + pb + pp);
    out.leftCols(pa) = zc.asDiagonal() * ha->middleRows(b, m);
    out.middleCols(pa, pb) = resid.asDiagonal() * hb->middleRows(b, m);
    out.rightCols(pp) = (resid.cwiseProduct(zc)).asDiagonal() * hp->middleRows(b, m);
    return out;
  };
  s.sum = [=](const Vector& t) {
    const Index n = y->size();
    Vector resid, zc;
    parts(t, 0, n, resid, zc);
    Vector out(pa + pb + pp);
    out.head(pa) = ha->transpose() * zc;
    out.segment(pa, pb) = hb->transpose() * resid;
    out.tail(pp) = hp->transpose() * resid.cwiseProduct(zc);
    return out;
  };
  return s;
}

Vector solve_gest_equations(const Matrix& h_beta, const Matrix& h_psi, const Vector& z,
                            const Vector& y, const Vector& pi) {
  const Index n = h_beta.rows();
  Matrix regressors(n, h_beta.cols() + h_psi.cols());
  regressors << h_beta, z.asDiagonal() * h_psi;
  Matrix instruments(n, regressors.cols());
  instruments << h_beta, (z - pi).asDiagonal() * h_psi;
  const Matrix lhs = instruments.transpose() * regressors;
  const Vector rhs = instruments.transpose() * y;
  return solve_square(lhs, rhs, "G-estimation");
}

Vector aipw_contributions(const Vector& z, const Vector& y, const Vector& pi, const Vector& m1,
                          const Vector& m0) {
  const Index n = z.size();
  Vector out(n);
  for (Index i = 0; i < n; ++i) {
    const double treated = z[i] * y[i] / pi[i] - (z[i] - pi[i]) / pi[i] * m1[i];
    const double control = (1.0 - z[i]) * y[i] / (1.0 - pi[i]) + (z[i] - pi[i]) / (1.0 - pi[i]) * m0[i];
    out[i] = treated - control;
  }
  return out;
}

FitResult fit_miwols(const AugmentedDesign& design, const Dataset& data, const WeightScheme& scheme) {
  if (scheme.kind() == WeightKind::unw) {
    return fit_miwols(design, data, scheme, PropensityFit{});
  }
  return fit_miwols(design, data, scheme, fit_propensity(design, data));
}

FitResult fit_miwols(const AugmentedDesign& design, const Dataset& data, const WeightScheme& scheme,
                 const PropensityFit& ps) {
  const bool weighted = scheme.kind() != WeightKind::unw;
  if (weighted && ps.pi.size() != data.rows()) {
    throw Error(ErrorCode::invalid_input, "weighted MI-WOLS requires a fitted propensity model");
  }
  const Vector w = weighted ? compute_weights(scheme, data.z, ps.pi) : Vector::Ones(data.rows());
  const Matrix x = outcome_regressors(design, data.z);
  const WlsFit wls = fit_wls(x, data.y, w);

  const Index pb = design.h_beta.cols();
  const Index pp = design.h_psi.cols();
  FitResult r;
  r.estimator_tag = "MI-WOLS";
  r.scheme_tag = std::string(to_string(scheme.kind()));
  r.psi_names = design.psi_names;
  r.beta_hat = wls.coef.head(pb);
  r.psi_hat = wls.coef.tail(pp);

  Vector theta;
  if (weighted) {
    r.alpha_hat = ps.logistic.alpha;
    theta.resize(ps.logistic.alpha.size() + wls.coef.size());
    theta << ps.logistic.alpha, wls.coef;
    if (scheme.kind() == WeightKind::abs) {
      const auto kinks = ((data.z - ps.logistic.fitted).array().abs() < 1e-8).count();
      if (kinks > 0) {
        r.diagnostics.push_back(std::to_string(kinks) +
                                " subject(s) with |z - pi| < 1e-8; ABS weight is not differentiable there");
      }
    }
  } else {
    theta = wls.coef;
  }
  const StackedScores scores = miwols_scores(design, data, scheme, theta, weighted);
  r.cov = sandwich_cov(scores, theta);
  r.segments = scores.segments;
  r.se = psi_standard_errors(r.cov, scores.segment("psi"));
  finish_intervals(r);
  return r;
}

FitResult aipw_ate(const AugmentedDesign& design, const Dataset& data) {
  return aipw_ate(design, data, fit_propensity(design, data));
}

FitResult aipw_ate(const AugmentedDesign& design, const Dataset& data, const PropensityFit& ps) {
  const Index n = data.rows();
  const Matrix x = outcome_regressors(design, data.z);
  const WlsFit outcome = fit_wls(x, data.y, Vector::Ones(n));
  const Index pb = design.h_beta.cols();
  const Vector beta = outcome.coef.head(pb);
  const Vector psi = outcome.coef.tail(design.h_psi.cols());
  const Vector m0 = design.h_beta * beta;
  const Vector m1 = m0 + design.h_psi * psi;

  const Vector contrib = aipw_contributions(data.z, data.y, ps.pi, m1, m0);
  const double est = contrib.mean();
  const Vector influence = contrib.array() - est;
  const double se = std::sqrt(influence.squaredNorm() / static_cast<double>(n)) /
                    std::sqrt(static_cast<double>(n));

  FitResult r;
  r.estimator_tag = "AIPW";
  r.scheme_tag = "AIPW";
  r.psi_names = {"ate"};
  r.psi_hat = Vector::Constant(1, est);
  r.beta_hat = beta;
  r.alpha_hat = ps.logistic.alpha;
  r.cov = Matrix::Constant(1, 1, se * se);
  r.segments = {{"psi", 0, 1}};
  r.se = Vector::Constant(1, se);
  finish_intervals(r);
  return r;
}

FitResult g_estimation(const AugmentedDesign& design, const Dataset& data) {
  return g_estimation(design, data, fit_propensity(design, data));
}

FitResult g_estimation(const AugmentedDesign& design, const Dataset& data, const PropensityFit& ps) {
  const Vector coef =
      solve_gest_equations(design.h_beta, design.h_psi, data.z, data.y, ps.logistic.fitted);
  const Index pa = design.h_alpha.cols();
  const Index pb = design.h_beta.cols();
  const Index pp = design.h_psi.cols();
  Vector theta(pa + pb + pp);
  theta << ps.logistic.alpha, coef;

  FitResult r;
  r.estimator_tag = "G-estimation";
  r.scheme_tag = "GEST";
  r.psi_names = design.psi_names;
  r.beta_hat = coef.head(pb);
  r.psi_hat = coef.tail(pp);
  r.alpha_hat = ps.logistic.alpha;
  const StackedScores scores = gest_scores(design, data, theta);
  r.cov = sandwich_cov(scores, theta);
  r.segments = scores.segments;
  r.se = psi_standard_errors(r.cov, scores.segment("psi"));
  finish_intervals(r);
  return r;
}

FitResult estimate(const Method& method, const AugmentedDesign& design, const Dataset& data,
                   const PropensityFit* ps) {
  if (method.needs_propensity() && ps == nullptr) {
    const PropensityFit own = fit_propensity(design, data);
    return estimate(method, design, data, &own);
  }
  switch (method.estimator) {
    case EstimatorKind::aipw: return aipw_ate(design, data, *ps);
    case EstimatorKind::gest: return g_estimation(design, data, *ps);
    case EstimatorKind::miwols: break;
  }
  const WeightScheme scheme = WeightScheme::for_data(method.scheme, data.z);
  if (method.scheme == WeightKind::unw) return fit_miwols(design, data, scheme, PropensityFit{});
  return fit_miwols(design, data, scheme, *ps);
}

}  // namespace miwols
