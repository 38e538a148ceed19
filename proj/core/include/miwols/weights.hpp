#pragma once

#include <optional>
#include <string>
#include <string_view>

#include "miwols/types.hpp"

namespace miwols {

enum class WeightKind { abs, ipw, sipw, unw };

std::string_view to_string(WeightKind kind);
/// Parses "ABS", "IPW", "SIPW" or "UNW" (case-insensitive).
std::optional<WeightKind> parse_weight_kind(std::string_view name);

/// Regression weight family. `marginal_p` is the treated fraction used by
/// stabilized weights and is present exactly when kind == sipw.
class WeightScheme {
 public:
  static WeightScheme abs() { return WeightScheme(WeightKind::abs, std::nullopt); }
  static WeightScheme ipw() { return WeightScheme(WeightKind::ipw, std::nullopt); }
  static WeightScheme unw() { return WeightScheme(WeightKind::unw, std::nullopt); }
  static WeightScheme sipw(double marginal_p);
  /// sipw uses the treated fraction of z; other kinds ignore z.
  static WeightScheme for_data(WeightKind kind, const Vector& z);

  WeightKind kind() const { return kind_; }
  std::optional<double> marginal_p() const { return marginal_p_; }

  /// w(z, pi) for a single subject.
  double operator()(double z, double pi) const;

 private:
  WeightScheme(WeightKind kind, std::optional<double> p) : kind_(kind), marginal_p_(p) {}
  WeightKind kind_;
  std::optional<double> marginal_p_;
};

inline constexpr double kPropensityClip = 1e-6;

/// Clamps fitted probabilities into [1e-6, 1 - 1e-6] before weighting.
Vector clip_propensity(const Vector& pi);

/// Weights for every subject. Throws Error(invalid_input) if any pi lies
/// outside the open unit interval (clipping is the caller's job).
Vector compute_weights(const WeightScheme& scheme, const Vector& z, const Vector& pi);

struct BalanceReport {
  Vector pi;
  Vector defect;  // pi * w(1, pi) - (1 - pi) * w(0, pi)
  double max_abs_defect = 0.0;
  bool balanced = false;  // max_abs_defect < 1e-12
};

BalanceReport check_balance(const WeightScheme& scheme, const Vector& pi_grid);

/// Weighted mean of each column of h among treated minus among controls.
Vector weighted_mean_difference(const Matrix& h, const Vector& z, const Vector& w);

}  // namespace miwols
