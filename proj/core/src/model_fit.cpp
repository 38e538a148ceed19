#include "miwols/model_fit.hpp"

#include <cmath>
#include <string>

#include "miwols/dataset.hpp"
#include "miwols/error.hpp"

namespace miwols {

double expit(double a) {
  if (a >= 0) return 1.0 / (1.0 + std::exp(-a));
  const double e = std::exp(a);
  return e / (1.0 + e);
}

Vector expit(const Vector& a) { return a.unaryExpr([](double v) { return expit(v); }); }

double logit(double p) { return std::log(p / (1.0 - p)); }

namespace {

// log(1 + exp(eta)) without overflow.
double softplus(double eta) { return std::max(eta, 0.0) + std::log1p(std::exp(-std::abs(eta))); }

double log_likelihood_from_eta(const Vector& eta, const Vector& z) {
  double ll = 0.0;
  for (Index i = 0; i < eta.size(); ++i) ll += z[i] * eta[i] - softplus(eta[i]);
  return ll;
}

}  // namespace

double logistic_log_likelihood(const Matrix& h, const Vector& z, const Vector& alpha) {
  return log_likelihood_from_eta(h * alpha, z);
}

Vector logistic_score(const Matrix& h, const Vector& z, const Vector& alpha) {
  return h.transpose() * (z - expit(h * alpha));
}

LogisticFit fit_logistic(const Matrix& h, const Vector& z, const IrlsOptions& options) {
  const Index n = h.rows();
  const Index p = h.cols();
  if (z.size() != n) throw Error(ErrorCode::invalid_input, "treatment length differs from design rows");
  const double zbar = z.mean();
  if (zbar <= 0.0 || zbar >= 1.0) {
    throw Error(ErrorCode::degenerate_treatment, "degenerate treatment: all subjects share one arm");
  }

  Vector alpha = Vector::Zero(p);
  double deviance = -2.0 * logistic_log_likelihood(h, z, alpha);
  LogisticFit fit;
  for (int iter = 1; iter <= options.max_iterations; ++iter) {
    const Vector mu = expit(h * alpha);
    const Vector w = mu.cwiseProduct(Vector::Ones(n) - mu);
    const Vector sw = w.cwiseSqrt();
    // Newton step: (H^T W H) delta = H^T (z - mu), via QR of sqrt(W) H.
    Eigen::ColPivHouseholderQR<Matrix> qr(sw.asDiagonal() * h);
    qr.setThreshold(kRankTolerance);
    if (qr.rank() < p) {
      throw Error(ErrorCode::separation, "separation suspected: IRLS information matrix became singular");
    }
    Vector working(n);
    for (Index i = 0; i < n; ++i) working[i] = sw[i] > 0 ? (z[i] - mu[i]) / sw[i] : 0.0;
    Vector step = qr.solve(working);

    Vector candidate = alpha + step;
    double cand_dev = -2.0 * logistic_log_likelihood(h, z, candidate);
    for (int k = 0; k < options.max_step_halvings && !(cand_dev <= deviance); ++k) {
      step *= 0.5;
      candidate = alpha + step;
      cand_dev = -2.0 * logistic_log_likelihood(h, z, candidate);
    }
    const double change = std::abs(cand_dev - deviance);
    // Accept only non-increasing deviance; a rejected step means we are at the optimum.
    if (cand_dev <= deviance) {
      alpha = candidate;
      deviance = cand_dev;
    }
    fit.iterations = iter;
    if (alpha.cwiseAbs().maxCoeff() > options.coefficient_bound) {
      throw Error(ErrorCode::separation, "separation suspected: coefficient magnitude exceeds " +
                                             std::to_string(options.coefficient_bound));
    }
    if (change < options.relative_tolerance * (std::abs(deviance) + 1.0)) {
      fit.converged = true;
      break;
    }
  }
  if (!fit.converged) throw Error(ErrorCode::separation, "separation suspected: IRLS did not converge");

  fit.alpha = alpha;
  fit.fitted = expit(h * alpha);
  fit.deviance = deviance;
  fit.score = h.transpose() * (z - fit.fitted);
  const Vector w = fit.fitted.cwiseProduct(Vector::Ones(n) - fit.fitted);
  fit.information = h.transpose() * w.asDiagonal() * h;
  return fit;
}

WlsFit fit_wls(const Matrix& x, const Vector& y, const Vector& w) {
  const Index n = x.rows();
  const Index p = x.cols();
  if (y.size() != n || w.size() != n) throw Error(ErrorCode::invalid_input, "fit_wls: length mismatch");
  if (!w.allFinite() || w.minCoeff() < 0.0) {
    throw Error(ErrorCode::invalid_input, "fit_wls: weights must be finite and non-negative");
  }
  if (w.maxCoeff() <= 0.0) throw Error(ErrorCode::invalid_input, "fit_wls: all weights are zero");

  const Vector sw = w.cwiseSqrt();
  const Matrix xs = sw.asDiagonal() * x;
  Eigen::ColPivHouseholderQR<Matrix> qr(xs);
  qr.setThreshold(kRankTolerance);
  if (qr.rank() < p) {
    throw Error(ErrorCode::rank_deficient, "weighted design is rank deficient (rank " +
                                               std::to_string(qr.rank()) + " of " + std::to_string(p) + ")");
  }
  WlsFit fit;
  fit.coef = qr.solve(sw.cwiseProduct(y));
  fit.residuals = y - x * fit.coef;
  fit.weights = w;
  fit.bread = xs.transpose() * xs;
  fit.score = x.transpose() * w.cwiseProduct(fit.residuals);
  return fit;
}

Vector solve_square(const Matrix& a, const Vector& b, const char* what) {
  Eigen::ColPivHouseholderQR<Matrix> qr(a);
  qr.setThreshold(kRankTolerance);
  if (qr.rank() < a.cols()) {
    throw Error(ErrorCode::singular_system, std::string(what) + ": linear system is singular");
  }
  return qr.solve(b);
}

}  // namespace miwols
