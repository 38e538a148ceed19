#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "miwols/dataset.hpp"
#include "miwols/estimators.hpp"

namespace miwols {

struct BinaryMarginal {
  std::string name;
  double p = 0.0;
};

struct CategoricalMarginal {
  std::string name;
  std::vector<std::string> levels;  // first level is the reference
  std::vector<double> probs;
};

/// Linear predictor term: an encoded covariate name or a '*' product of names.
using Coefficients = std::vector<std::pair<std::string, double>>;

/// Synthetic ACEI/ARB cohort.
///
/// Fully observed: six binary conditions, age group and calendar period
/// (dummy-coded). Partially observed: ethnicity and baseline eGFR category,
/// masked at random given sex/period and hypertension/period. The eGFR
/// category depends on age; all other covariates are independent.
/// Treatment is logistic and the outcome linear in the encoded covariates;
/// both include `interaction`, whose omission gives the misspecified models.
struct CohortConfig {
  Index n = 570586;
  std::uint64_t seed = 2026;
  double true_effect = -0.6831;

  std::vector<BinaryMarginal> binaries;
  CategoricalMarginal age;
  CategoricalMarginal period;
  CategoricalMarginal ethnicity;  // distribution of the latent category
  CategoricalMarginal egfr;       // latent category, averaged over age
  double ethnicity_missing = 0.0;
  double egfr_missing = 0.0;

  /// Added to the eGFR category probabilities for age levels >= egfr_older_from;
  /// the younger levels get the compensating shift so the marginal is kept.
  std::vector<double> egfr_older_shift;
  Index egfr_older_from = 2;

  Coefficients ethnicity_missing_model;  // log-odds of missingness
  Coefficients egfr_missing_model;

  std::string interaction = "diabetes*egfr=missing";
  double treated_fraction = 0.0;
  Coefficients treatment_model;  // intercept solved for treated_fraction
  Coefficients outcome_model;    // excludes treatment and intercept
  double outcome_mean = 82.15;
  double outcome_sd = 17.82;

  /// Marginals transcribed from the baseline table of the cohort study.
  static CohortConfig defaults();

  /// Throws Error(invalid_input) when probabilities do not sum to one or
  /// rates fall outside (0, 1).
  void validate() const;
};

struct Cohort {
  Dataset data;
  double treatment_intercept = 0.0;
  double outcome_intercept = 0.0;
  double residual_sd = 0.0;
  Vector pi;  // true propensity
};

Cohort generate_cohort(const CohortConfig& cfg);

/// Working models of the illustration: "@H", plus the generator's
/// interaction term when the model is correct.
ModelSpec cohort_models(const CohortConfig& cfg, bool treatment_correct, bool outcome_correct);

struct IllustrationRow {
  std::string method;                // UNW, ABS, IPW, SIPW, AIPW, GEST
  std::optional<bool> pi_correct;    // absent for UNW
  bool y_correct = true;
  double estimate = 0.0;
  double bias = 0.0;
  double se = 0.0;
  double ci_lower = 0.0;
  double ci_upper = 0.0;
};

struct IllustrationSpec {
  bool pi_correct = true;
  bool y_correct = true;
};

/// The four (pi, y) combinations in table order.
std::vector<IllustrationSpec> illustration_grid();

/// Fits every method under every specification. UNW uses only the
/// outcome model and is reported once per outcome specification.
std::vector<IllustrationRow> run_illustration(const Dataset& data, const CohortConfig& cfg,
                                              const std::vector<IllustrationSpec>& grid,
                                              const std::vector<Method>& methods);

struct MarginalRow {
  std::string variable;
  std::string level;
  Index count = 0;
  double percent = 0.0;
};

struct CohortSummary {
  Index n = 0;
  Index treated = 0;
  double outcome_mean = 0.0;
  double outcome_sd = 0.0;
  std::vector<MarginalRow> rows;
};

/// Counts per level of every covariate, with "missing" rows for the
/// partially observed ones.
CohortSummary summarize_cohort(const Dataset& data, const CohortConfig& cfg);

}  // namespace miwols
