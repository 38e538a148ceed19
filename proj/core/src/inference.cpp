#include "miwols/inference.hpp"

#include <algorithm>
#include <cmath>

#include "miwols/error.hpp"

namespace miwols {

const Segment& StackedScores::segment(const std::string& label) const {
  for (const auto& s : segments) {
    if (s.label == label) return s;
  }
  throw Error(ErrorCode::invalid_input, "no parameter segment named '" + label + "'");
}

Vector StackedScores::total(const Vector& at) const {
  if (this->sum) return this->sum(at);
  Vector sum = Vector::Zero(at.size());
  const Index chunk = 16384;
  for (Index b = 0; b < n; b += chunk) {
    const Index e = std::min(n, b + chunk);
    sum += block(at, b, e).colwise().sum().transpose();
  }
  return sum;
}

Matrix sensitivity_matrix(const StackedScores& scores, const Vector& theta_hat,
                          const SandwichOptions& options) {
  const Index p = theta_hat.size();
  Matrix a(p, p);
  Vector t = theta_hat;
  for (Index j = 0; j < p; ++j) {
    const double h = options.relative_step * std::max(1.0, std::abs(theta_hat[j]));
    t[j] = theta_hat[j] + h;
    const Vector up = scores.total(t);
    t[j] = theta_hat[j] - h;
    const Vector down = scores.total(t);
    t[j] = theta_hat[j];
    a.col(j) = -(up - down) / (2.0 * h);
  }
  return a / static_cast<double>(scores.n);
}

Matrix variability_matrix(const StackedScores& scores, const Vector& theta_hat,
                          const SandwichOptions& options) {
  const Index p = theta_hat.size();
  Matrix b = Matrix::Zero(p, p);
  for (Index begin = 0; begin < scores.n; begin += options.chunk_rows) {
    const Index end = std::min(scores.n, begin + options.chunk_rows);
    const Matrix s = scores.block(theta_hat, begin, end);
    b.selfadjointView<Eigen::Lower>().rankUpdate(s.transpose());
  }
  b = b.selfadjointView<Eigen::Lower>();
  return b / static_cast<double>(scores.n);
}

Matrix sandwich_cov(const StackedScores& scores, const Vector& theta_hat,
                    const SandwichOptions& options) {
  const Matrix a = sensitivity_matrix(scores, theta_hat, options);
  const Matrix b = variability_matrix(scores, theta_hat, options);

  Eigen::ColPivHouseholderQR<Matrix> qr(a);
  qr.setThreshold(1e-10);
  if (qr.rank() < a.cols()) {
    throw Error(ErrorCode::non_invertible_sensitivity,
                "non-invertible sensitivity: sensitivity matrix has rank " + std::to_string(qr.rank()) +
                    " of " + std::to_string(a.cols()));
  }
  const Matrix a_inv_b = qr.solve(b);                                  // A^{-1} B
  const Matrix cov_t = qr.solve(Matrix(a_inv_b.transpose()));          // A^{-1} (A^{-1} B)^T
  Matrix cov = (cov_t + cov_t.transpose()) / (2.0 * static_cast<double>(scores.n));

  Eigen::SelfAdjointEigenSolver<Matrix> eig(cov, Eigen::EigenvaluesOnly);
  const double trace = cov.trace();
  if (eig.eigenvalues().size() > 0 && eig.eigenvalues().minCoeff() < -1e-10 * std::abs(trace)) {
    throw Error(ErrorCode::not_positive_semidefinite, "sandwich covariance is not positive semidefinite");
  }
  return cov;
}

AseEseReport ase_ese_report(std::span<const double> estimates, std::span<const double> ses,
                            double truth) {
  if (estimates.size() != ses.size()) throw Error(ErrorCode::invalid_input, "ase_ese_report: length mismatch");
  AseEseReport r;
  const auto m = estimates.size();
  r.replicates = static_cast<Index>(m);
  if (m == 0) return r;
  double sum = 0.0, sum_se = 0.0, covered = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    sum += estimates[i];
    sum_se += ses[i];
    if (std::abs(estimates[i] - truth) <= kCi95Multiplier * ses[i]) covered += 1.0;
  }
  r.mean_estimate = sum / static_cast<double>(m);
  r.ase = sum_se / static_cast<double>(m);
  r.coverage = covered / static_cast<double>(m);
  if (m >= 2) {
    double ss = 0.0;
    for (double e : estimates) ss += (e - r.mean_estimate) * (e - r.mean_estimate);
    r.ese = std::sqrt(ss / static_cast<double>(m));
    if (*r.ese > 0.0) r.ratio = r.ase / *r.ese;
  }
  return r;
}

}  // namespace miwols
