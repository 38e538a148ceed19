#pragma once

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "miwols/types.hpp"

namespace miwols {

/// A labelled slice of the stacked parameter vector, e.g. "alpha" or "psi".
struct Segment {
  std::string label;
  Index offset = 0;
  Index size = 0;
};

/// Per-observation estimating functions of a stacked M-estimator.
///
/// `block(theta, begin, end)` returns the (end - begin) x p matrix whose row
/// k is the estimating function of observation begin + k evaluated at theta.
/// `sum`, when set, returns the column sums of the full matrix directly.
/// Score objects built from a design refer to it; the design and data must
/// outlive them.
struct StackedScores {
  Vector theta;
  std::vector<Segment> segments;
  Index n = 0;
  std::function<Matrix(const Vector& theta, Index begin, Index end)> block;
  std::function<Vector(const Vector& theta)> sum;

  const Segment& segment(const std::string& label) const;
  Matrix per_observation(const Vector& at) const { return block(at, 0, n); }
  Vector total(const Vector& at) const;
};

struct SandwichOptions {
  Index chunk_rows = 16384;
  double relative_step = 1e-6;  // step_j = relative_step * max(1, |theta_j|)
};

/// Sensitivity A = -(1/n) d(sum_i score_i)/d theta by central differences.
Matrix sensitivity_matrix(const StackedScores& scores, const Vector& theta_hat,
                          const SandwichOptions& options = {});
/// Variability B = (1/n) sum_i score_i score_i^T.
Matrix variability_matrix(const StackedScores& scores, const Vector& theta_hat,
                          const SandwichOptions& options = {});

/// A^{-1} B A^{-T} / n, symmetrized. Throws Error(non_invertible_sensitivity)
/// for singular A and Error(not_positive_semidefinite) when an eigenvalue is
/// below -1e-10 * trace.
Matrix sandwich_cov(const StackedScores& scores, const Vector& theta_hat,
                    const SandwichOptions& options = {});

/// Replicate-level summary for one parameter.
struct AseEseReport {
  double mean_estimate = 0.0;
  double ase = 0.0;                  // mean of per-replicate standard errors
  std::optional<double> ese;         // SD of estimates (divisor M); needs >= 2 replicates
  std::optional<double> ratio;       // ASE / ESE; absent when ESE is 0 or undefined
  double coverage = 0.0;             // share of 95% intervals containing truth
  Index replicates = 0;
};

AseEseReport ase_ese_report(std::span<const double> estimates, std::span<const double> ses,
                            double truth);

/// Half-width multiplier of the reported 95% confidence intervals.
inline constexpr double kCi95Multiplier = 1.96;

}  // namespace miwols
