#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "miwols/types.hpp"

namespace miwols {

/// A confounder that is missing for some rows. `values` is meaningful only
/// where `observed` is set. Categorical columns hold integer level codes that
/// index into `levels`.
struct PartialConfounder {
  std::string name;
  Vector values;
  Mask observed;
  bool categorical = false;
  std::vector<std::string> levels;

  Index missing_count() const { return observed.size() - observed.count(); }
};

/// Outcome, binary treatment, fully observed confounders and partially
/// observed confounders for n subjects. Only confounders may be missing.
struct Dataset {
  Vector y;
  Vector z;
  Matrix c;
  std::vector<std::string> c_names;
  std::vector<PartialConfounder> x;

  Index rows() const { return y.size(); }

  /// Throws Error(invalid_input) when shapes disagree, z is not binary, or
  /// y/z/c contain non-finite values.
  void validate() const;

  /// Row subset in the given order (indices may repeat, as in a bootstrap).
  Dataset select_rows(const std::vector<Index>& rows) const;
};

/// Covariates under the missing-indicator representation H = (V, R).
///
/// Column layout: every fully observed confounder by name; for each
/// partially observed non-categorical confounder `x`, the filled column `x`
/// followed by its indicator `R_x` (1 where observed). A categorical
/// confounder expands to one dummy `x=level` per non-reference observed
/// level plus `x=missing`, which is 1 - R; R itself is not emitted.
struct EncodedCovariates {
  std::vector<std::string> names;
  Matrix h;
  double fill = 0.0;

  std::optional<Index> find(const std::string& name) const;
  Index rows() const { return h.rows(); }
};

EncodedCovariates encode_missing_indicator(const Dataset& data, double fill = 0.0);

/// Model terms for the three design matrices. A term is "intercept" (or "1"),
/// a column name of the encoded covariates, or a product of names joined by
/// '*' such as "X*R_X". The special term "@H" expands to every encoded column.
/// Every design gets a leading intercept column whether or not it is listed.
struct ModelSpec {
  std::vector<std::string> treatment_terms;
  std::vector<std::string> treatment_free_terms;
  std::vector<std::string> blip_terms{"intercept"};
};

struct AugmentedDesign {
  EncodedCovariates encoded;
  Matrix h_alpha;
  Matrix h_beta;
  Matrix h_psi;
  std::vector<std::string> alpha_names;
  std::vector<std::string> beta_names;
  std::vector<std::string> psi_names;
};

/// Relative tolerance used by every column-rank check.
inline constexpr double kRankTolerance = 1e-10;

/// Assemble one design matrix (intercept first) from a term list.
Matrix build_term_matrix(const EncodedCovariates& encoded,
                         const std::vector<std::string>& terms,
                         std::vector<std::string>* names_out = nullptr);

/// Throws Error(rank_deficient) naming the columns that are linear
/// combinations of earlier ones. `what` labels the matrix in the message.
void check_full_column_rank(const Matrix& m, const std::vector<std::string>& names,
                            const std::string& what);

AugmentedDesign build_design(const EncodedCovariates& encoded, const ModelSpec& spec);

/// Column roles used when reading a CSV file into a Dataset.
struct ColumnRoles {
  std::string outcome;
  std::string treatment;
  std::vector<std::string> observed;
  std::vector<std::string> partial;
  std::vector<std::string> categorical;  // subset of `partial` with string levels
};

/// Reads a header-first CSV. Empty cells and "NA" are missing; any other
/// cell that does not parse as a number (outside categorical columns) is an
/// error. Accepts LF and CRLF line endings and double-quoted fields.
Dataset read_csv(std::istream& in, const ColumnRoles& roles);
Dataset read_csv_file(const std::string& path, const ColumnRoles& roles);

/// Header row of a CSV stream, used for validating column mappings.
std::vector<std::string> read_csv_header(std::istream& in);

/// Writes the dataset with columns y, z, c..., x... ; missing cells as "NA".
void write_csv(std::ostream& out, const Dataset& data, const std::string& outcome = "y",
               const std::string& treatment = "z");

}  // namespace miwols
