#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "miwols/dataset.hpp"
#include "miwols/inference.hpp"
#include "miwols/model_fit.hpp"
#include "miwols/weights.hpp"

namespace miwols {

enum class EstimatorKind { miwols, aipw, gest };

/// One column of a comparison: MI-WOLS under a weight scheme, AIPW or
/// G-estimation. Tags are "UNW", "ABS", "IPW", "SIPW", "AIPW" and "GEST".
struct Method {
  EstimatorKind estimator = EstimatorKind::miwols;
  WeightKind scheme = WeightKind::abs;

  std::string tag() const;
  bool needs_propensity() const {
    return estimator != EstimatorKind::miwols || scheme != WeightKind::unw;
  }
  friend bool operator==(const Method&, const Method&) = default;
};

std::optional<Method> parse_method(std::string_view tag);

struct FitResult {
  Vector psi_hat;
  Vector beta_hat;
  std::optional<Vector> alpha_hat;
  Matrix cov;                     // covariance of the stacked parameter vector
  std::vector<Segment> segments;  // layout of cov ("alpha", "beta", "psi")
  Vector se;                      // standard errors of psi_hat
  Matrix ci95;                    // psi_hat -/+ 1.96 se, one row per blip parameter
  std::vector<std::string> psi_names;
  std::string estimator_tag;
  std::string scheme_tag;
  std::vector<std::string> diagnostics;

  Matrix psi_cov() const;
};

/// Propensity model shared by every estimator fitted on one dataset.
struct PropensityFit {
  LogisticFit logistic;
  Vector pi;  // fitted probabilities clipped into [1e-6, 1 - 1e-6]
};

PropensityFit fit_propensity(const AugmentedDesign& design, const Dataset& data);

/// Outcome regressors (H^beta, Z * H^psi).
Matrix outcome_regressors(const AugmentedDesign& design, const Vector& z);

/// Stacked estimating functions of MI-WOLS. With include_alpha the
/// propensity score equations come first and the weights are re-evaluated
/// from alpha, so the sandwich accounts for estimated weights.
StackedScores miwols_scores(const AugmentedDesign& design, const Dataset& data,
                            const WeightScheme& scheme, const Vector& theta, bool include_alpha);

/// G-estimation estimating functions, always stacked with alpha.
StackedScores gest_scores(const AugmentedDesign& design, const Dataset& data, const Vector& theta);

/// Solves the G-estimation equations for fixed propensity scores `pi`;
/// returns the stacked (beta, psi).
Vector solve_gest_equations(const Matrix& h_beta, const Matrix& h_psi, const Vector& z,
                            const Vector& y, const Vector& pi);

/// Per-subject AIPW contributions whose mean is the effect estimate.
Vector aipw_contributions(const Vector& z, const Vector& y, const Vector& pi, const Vector& m1,
                          const Vector& m0);

/// Weighted regression of Y on (H^beta, Z H^psi) with propensity-based
/// weights. UNW skips the propensity model entirely.
FitResult fit_miwols(const AugmentedDesign& design, const Dataset& data, const WeightScheme& scheme);
FitResult fit_miwols(const AugmentedDesign& design, const Dataset& data, const WeightScheme& scheme,
                 const PropensityFit& ps);

/// Augmented IPW average treatment effect; outcome predictions come from the
/// joint outcome model evaluated at Z = 1 and Z = 0.
FitResult aipw_ate(const AugmentedDesign& design, const Dataset& data);
FitResult aipw_ate(const AugmentedDesign& design, const Dataset& data, const PropensityFit& ps);

FitResult g_estimation(const AugmentedDesign& design, const Dataset& data);
FitResult g_estimation(const AugmentedDesign& design, const Dataset& data, const PropensityFit& ps);

/// Dispatch on a Method. `ps` may be null when the method needs no propensity.
FitResult estimate(const Method& method, const AugmentedDesign& design, const Dataset& data,
                   const PropensityFit* ps);

}  // namespace miwols
