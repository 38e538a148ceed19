#include "miwols/weights.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <string>

#include "miwols/error.hpp"

namespace miwols {

std::string_view to_string(WeightKind kind) {
  switch (kind) {
    case WeightKind::abs: return "ABS";
    case WeightKind::ipw: return "IPW";
    case WeightKind::sipw: return "SIPW";
    case WeightKind::unw: return "UNW";
  }
  return "?";
}

std::optional<WeightKind> parse_weight_kind(std::string_view name) {
  std::string up(name);
  std::transform(up.begin(), up.end(), up.begin(), [](unsigned char c) { return std::toupper(c); });
  if (up == "ABS") return WeightKind::abs;
  if (up == "IPW") return WeightKind::ipw;
  if (up == "SIPW") return WeightKind::sipw;
  if (up == "UNW") return WeightKind::unw;
  return std::nullopt;
}

WeightScheme WeightScheme::sipw(double marginal_p) {
  if (!(marginal_p > 0.0 && marginal_p < 1.0)) {
    throw Error(ErrorCode::invalid_input, "SIPW marginal probability must lie in (0, 1)");
  }
  return WeightScheme(WeightKind::sipw, marginal_p);
}

WeightScheme WeightScheme::for_data(WeightKind kind, const Vector& z) {
  if (kind == WeightKind::sipw) return sipw(z.mean());
  return WeightScheme(kind, std::nullopt);
}

double WeightScheme::operator()(double z, double pi) const {
  switch (kind_) {
    case WeightKind::abs: return std::abs(z - pi);
    case WeightKind::ipw: return z / pi + (1.0 - z) / (1.0 - pi);
    case WeightKind::sipw: {
      const double p = *marginal_p_;
      return z * p / pi + (1.0 - z) * (1.0 - p) / (1.0 - pi);
    }
    case WeightKind::unw: return 1.0;
  }
  return 1.0;
}

Vector clip_propensity(const Vector& pi) {
  return pi.cwiseMax(kPropensityClip).cwiseMin(1.0 - kPropensityClip);
}

Vector compute_weights(const WeightScheme& scheme, const Vector& z, const Vector& pi) {
  if (z.size() != pi.size()) throw Error(ErrorCode::invalid_input, "compute_weights: length mismatch");
  Vector w(z.size());
  for (Index i = 0; i < z.size(); ++i) {
    if (!(pi[i] > 0.0 && pi[i] < 1.0)) {
      throw Error(ErrorCode::invalid_input,
                  "propensity score outside (0, 1) at row " + std::to_string(i));
    }
    w[i] = scheme(z[i], pi[i]);
  }
  return w;
}

BalanceReport check_balance(const WeightScheme& scheme, const Vector& pi_grid) {
  BalanceReport r;
  r.pi = pi_grid;
  r.defect.resize(pi_grid.size());
  for (Index i = 0; i < pi_grid.size(); ++i) {
    const double p = pi_grid[i];
    r.defect[i] = p * scheme(1.0, p) - (1.0 - p) * scheme(0.0, p);
  }
  r.max_abs_defect = pi_grid.size() > 0 ? r.defect.cwiseAbs().maxCoeff() : 0.0;
  r.balanced = r.max_abs_defect < 1e-12;
  return r;
}

Vector weighted_mean_difference(const Matrix& h, const Vector& z, const Vector& w) {
  const Vector w1 = w.cwiseProduct(z);
  const Vector w0 = w.cwiseProduct(Vector::Ones(z.size()) - z);
  const double s1 = w1.sum();
  const double s0 = w0.sum();
  if (s1 <= 0.0 || s0 <= 0.0) {
    throw Error(ErrorCode::invalid_input, "weighted_mean_difference: an arm has zero total weight");
  }
  return h.transpose() * w1 / s1 - h.transpose() * w0 / s0;
}

}  // namespace miwols
