#pragma once

#include "miwols/types.hpp"

namespace miwols {

/// Logistic function 1 / (1 + exp(-a)).
double expit(double a);
Vector expit(const Vector& a);
double logit(double p);

struct IrlsOptions {
  int max_iterations = 100;
  int max_step_halvings = 10;
  double relative_tolerance = 1e-8;  // on the change in deviance
  double coefficient_bound = 15.0;   // larger |alpha_j| is treated as separation
};

struct LogisticFit {
  Vector alpha;
  Vector fitted;  // expit(H alpha), unclipped
  bool converged = false;
  int iterations = 0;
  double deviance = 0.0;
  Vector score;        // H^T (z - fitted) at alpha
  Matrix information;  // H^T diag(p(1-p)) H at alpha
};

/// Bernoulli log-likelihood of z under expit(h * alpha).
double logistic_log_likelihood(const Matrix& h, const Vector& z, const Vector& alpha);
Vector logistic_score(const Matrix& h, const Vector& z, const Vector& alpha);

/// Maximum-likelihood logistic regression by IRLS with step halving.
/// Throws Error(degenerate_treatment) for constant z and Error(separation)
/// when the fit does not converge or a coefficient exceeds the bound.
LogisticFit fit_logistic(const Matrix& h, const Vector& z, const IrlsOptions& options = {});

struct WlsFit {
  Vector coef;
  Vector residuals;
  Vector weights;
  Matrix bread;  // X^T W X
  Vector score;  // X^T W (y - X coef)
};

/// Weighted least squares through a column-pivoted QR of sqrt(W) X.
/// Rows with zero weight do not count towards the rank.
WlsFit fit_wls(const Matrix& x, const Vector& y, const Vector& w);

/// Solves the square system a * x = b with a rank-revealing decomposition.
/// Throws Error(singular_system) when a is numerically singular.
Vector solve_square(const Matrix& a, const Vector& b, const char* what);

}  // namespace miwols
