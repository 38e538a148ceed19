#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "miwols/cohort.hpp"
#include "miwols/estimators.hpp"
#include "miwols/simulation.hpp"
#include "miwols/weights.hpp"

namespace miwols {

/// 64-bit FNV-1a.
std::uint64_t fnv1a64(std::string_view bytes);

/// Provenance written as the first line(s) of every table.
struct ReportHeader {
  std::string command;
  std::string config;  // canonical text of the effective configuration
  std::uint64_t seed = 0;

  std::uint64_t config_hash() const { return fnv1a64(config); }
};

/// "# miwols <command> config_hash=<16 hex digits> seed=<seed>"
void write_header(std::ostream& out, const ReportHeader& h, bool markdown);

/// Shortest round-trip decimal form; "NA" for non-finite values.
std::string format_number(double v);
/// Fixed decimals, for human-facing tables.
std::string format_fixed(double v, int decimals);

// Estimate command.
void write_fits_csv(std::ostream& out, const ReportHeader& h, const std::vector<FitResult>& fits);
void write_fits_markdown(std::ostream& out, const ReportHeader& h, const std::vector<FitResult>& fits);

// Monte Carlo results.
void write_metrics_csv(std::ostream& out, const ReportHeader& h, const MetricsTable& t);
void write_metrics_markdown(std::ostream& out, const ReportHeader& h, const MetricsTable& t);
/// One row per scenario: %Bias/ASE and MSE relative to GEST per method,
/// each followed by its Monte Carlo SE.
void write_table1_csv(std::ostream& out, const ReportHeader& h, const MetricsTable& t);
void write_table1_markdown(std::ostream& out, const ReportHeader& h, const MetricsTable& t);
/// Long format: scenario, flags, scheme, parameter, replicate, estimate.
void write_boxplot_csv(std::ostream& out, const ReportHeader& h, const MetricsTable& t);

// Cohort illustration.
void write_illustration_csv(std::ostream& out, const ReportHeader& h, const std::vector<IllustrationRow>& rows);
void write_illustration_markdown(std::ostream& out, const ReportHeader& h,
                                 const std::vector<IllustrationRow>& rows, double truth);
void write_cohort_summary_csv(std::ostream& out, const ReportHeader& h, const CohortSummary& s);
void write_cohort_summary_markdown(std::ostream& out, const ReportHeader& h, const CohortSummary& s);

// Balance check.
struct BalanceRow {
  std::string scheme;
  double p_bar = 0.0;  // only meaningful for SIPW
  double max_abs_defect = 0.0;
  bool balanced = false;
};

struct CovariateBalanceRow {
  std::string scheme;
  std::string covariate;
  double unweighted_difference = 0.0;
  double weighted_difference = 0.0;
};

/// Analytic defect of each scheme over `grid`.
std::vector<BalanceRow> balance_rows(const std::vector<WeightScheme>& schemes, const Vector& grid);

void write_balance_csv(std::ostream& out, const ReportHeader& h, const std::vector<BalanceRow>& rows,
                       const std::vector<CovariateBalanceRow>& covariates);
void write_balance_markdown(std::ostream& out, const ReportHeader& h, const std::vector<BalanceRow>& rows,
                            const std::vector<CovariateBalanceRow>& covariates);

}  // namespace miwols
