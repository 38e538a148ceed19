#include "miwols/cohort.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "miwols/error.hpp"
#include "miwols/model_fit.hpp"
#include "miwols/rng.hpp"

namespace miwols {

namespace {

constexpr double kCohortN = 570586.0;
constexpr std::uint64_t kCohortStream = 0x636f686f7274ULL;  // "cohort"

std::vector<double> shares(std::initializer_list<double> counts, double total) {
  std::vector<double> out;
  for (double c : counts) out.push_back(c / total);
  return out;
}

void check_probs(const CategoricalMarginal& m) {
  if (m.levels.size() != m.probs.size() || m.levels.empty()) {
    throw Error(ErrorCode::invalid_input, "marginal '" + m.name + "': levels and probabilities differ in length");
  }
  double s = 0.0;
  for (double p : m.probs) {
    if (!(p >= 0.0)) throw Error(ErrorCode::invalid_input, "marginal '" + m.name + "': negative probability");
    s += p;
  }
  if (std::abs(s - 1.0) > 1e-9) {
    throw Error(ErrorCode::invalid_input, "marginal '" + m.name + "': probabilities sum to " + std::to_string(s));
  }
}

void check_rate(const std::string& what, double p) {
  if (!(p > 0.0 && p < 1.0)) throw Error(ErrorCode::invalid_input, what + " must lie in (0, 1)");
}

Index draw_category(Philox4x32& rng, const std::vector<double>& cdf) {
  const double u = rng.uniform();
  const auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
  return std::min<Index>(static_cast<Index>(it - cdf.begin()), static_cast<Index>(cdf.size()) - 1);
}

std::vector<double> cumulative(const std::vector<double>& p) {
  std::vector<double> c(p.size());
  std::partial_sum(p.begin(), p.end(), c.begin());
  return c;
}

Vector linear_predictor(const EncodedCovariates& enc, const Coefficients& coef) {
  Vector eta = Vector::Zero(enc.rows());
  for (const auto& [term, b] : coef) {
    std::vector<std::string> names;
    const Matrix col = build_term_matrix(enc, {term}, &names);
    eta += b * col.col(1);
  }
  return eta;
}

// Intercept a with mean(expit(a + eta)) == target.
double solve_intercept(const Vector& eta, double target) {
  double lo = -30.0, hi = 30.0;
  for (int it = 0; it < 200 && hi - lo > 1e-13; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (expit(Vector(eta.array() + mid)).mean() < target) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

Mask draw_missing(const Vector& eta, double rate, const Vector& u) {
  const double a = solve_intercept(eta, rate);
  const Vector p = expit(Vector(eta.array() + a));
  Mask observed(eta.size());
  for (Index i = 0; i < eta.size(); ++i) observed[i] = !(u[i] < p[i]);
  return observed;
}

}  // namespace

CohortConfig CohortConfig::defaults() {
  CohortConfig c;
  const double n = kCohortN;
  c.binaries = {{"diabetes", 83496 / n},      {"hypertension", 364614 / n}, {"cardiac_failure", 31853 / n},
                {"arrhythmia", 56200 / n},    {"heart_disease", 118486 / n}, {"female", 298839 / n}};
  c.age = {"age",
           {"<45", "45-54", "55-59", "60-64", "65-69", "70-74", "75-84", ">=85"},
           shares({342080, 116258, 47433, 34242, 19906, 7908, 2221, 538}, n)};
  c.period = {"period",
              {"<=2000", "2001-2004", "2005-2008", "2009-2011", "2012-2014"},
              shares({32890, 85662, 141807, 149111, 161116}, n)};
  const double eth_obs = n - 336497;
  c.ethnicity = {"ethnicity",
                 {"White", "South Asian", "Black", "Other", "Mixed"},
                 shares({217496, 7999, 5128, 2335, 1131}, eth_obs)};
  const double egfr_obs = n - 301946;
  c.egfr = {"egfr", {"<30", "30-44", "45-59", ">=60"}, shares({235571, 26343, 5625, 1101}, egfr_obs)};
  c.ethnicity_missing = 336497 / n;
  c.egfr_missing = 301946 / n;
  c.egfr_older_shift = {-0.10, 0.06, 0.03, 0.01};
  c.egfr_older_from = 2;

  c.ethnicity_missing_model = {{"female", -0.15},
                               {"period=2001-2004", -0.2},
                               {"period=2005-2008", -0.4},
                               {"period=2009-2011", -0.6},
                               {"period=2012-2014", -0.8}};
  c.egfr_missing_model = {{"hypertension", -0.25},
                          {"period=2001-2004", -0.3},
                          {"period=2005-2008", -0.6},
                          {"period=2009-2011", -0.9},
                          {"period=2012-2014", -1.2}};

  c.treated_fraction = 155982 / n;
  c.treatment_model = {{"diabetes", -0.2},       {"hypertension", 0.10},   {"cardiac_failure", 0.25},
                       {"female", -0.09},        {"age=45-54", 0.06},      {"age=55-59", -0.03},
                       {"age=60-64", -0.03},     {"age=65-69", -0.05},     {"age=70-74", -0.10},
                       {"age=75-84", -0.05},     {"age=>=85", -0.20},      {"egfr=30-44", 0.08},
                       {"egfr=45-59", 0.12},     {"egfr=>=60", 0.20},      {"egfr=missing", -0.12},
                       {"diabetes*egfr=missing", 0.70}};
  c.outcome_model = {{"diabetes", -3.0},          {"hypertension", -2.0},       {"cardiac_failure", -4.0},
                     {"arrhythmia", -1.5},        {"heart_disease", -2.0},      {"female", -1.0},
                     {"age=45-54", -8.0},         {"age=55-59", -17.0},         {"age=60-64", -22.0},
                     {"age=65-69", -28.0},        {"age=70-74", -33.0},         {"age=75-84", -39.0},
                     {"age=>=85", -46.0},         {"period=2001-2004", 0.5},    {"period=2005-2008", 1.0},
                     {"period=2009-2011", 1.5},   {"period=2012-2014", 2.0},    {"ethnicity=South Asian", 1.0},
                     {"ethnicity=Black", 4.0},    {"ethnicity=Other", 0.5},     {"ethnicity=Mixed", 1.5},
                     {"ethnicity=missing", 0.5},  {"egfr=30-44", 3.0},          {"egfr=45-59", 6.0},
                     {"egfr=>=60", 9.0},          {"egfr=missing", 2.0},        {"diabetes*egfr=missing", -5.9}};
  return c;
}

void CohortConfig::validate() const {
  if (n < 50) throw Error(ErrorCode::invalid_input, "cohort size must be at least 50");
  for (const auto& b : binaries) check_rate("prevalence of " + b.name, b.p);
  for (const auto* m : {&age, &period, &ethnicity, &egfr}) check_probs(*m);
  check_rate("ethnicity missing rate", ethnicity_missing);
  check_rate("egfr missing rate", egfr_missing);
  check_rate("treated fraction", treated_fraction);
  if (!(outcome_sd > 0.0)) throw Error(ErrorCode::invalid_input, "outcome SD must be positive");
  if (egfr_older_shift.size() != egfr.probs.size()) {
    throw Error(ErrorCode::invalid_input, "egfr age shift must have one entry per egfr level");
  }
  if (egfr_older_from <= 0 || egfr_older_from >= static_cast<Index>(age.levels.size())) {
    throw Error(ErrorCode::invalid_input, "egfr age split must fall inside the age levels");
  }
}

Cohort generate_cohort(const CohortConfig& cfg) {
  cfg.validate();
  const Index n = cfg.n;
  Philox4x32 rng(cfg.seed, kCohortStream);

  // Age-specific eGFR category distributions with the tabulated marginal.
  double q_older = 0.0;
  for (std::size_t k = static_cast<std::size_t>(cfg.egfr_older_from); k < cfg.age.probs.size(); ++k) {
    q_older += cfg.age.probs[k];
  }
  std::vector<double> egfr_old(cfg.egfr.probs.size()), egfr_young(cfg.egfr.probs.size());
  for (std::size_t k = 0; k < egfr_old.size(); ++k) {
    egfr_old[k] = cfg.egfr.probs[k] + cfg.egfr_older_shift[k];
    egfr_young[k] = cfg.egfr.probs[k] - cfg.egfr_older_shift[k] * q_older / (1.0 - q_older);
    if (egfr_old[k] < 0.0 || egfr_young[k] < 0.0) {
      throw Error(ErrorCode::invalid_input, "egfr age shift produces a negative probability");
    }
  }
  const auto cdf_age = cumulative(cfg.age.probs);
  const auto cdf_period = cumulative(cfg.period.probs);
  const auto cdf_eth = cumulative(cfg.ethnicity.probs);
  const auto cdf_old = cumulative(egfr_old);
  const auto cdf_young = cumulative(egfr_young);

  const Index nb = static_cast<Index>(cfg.binaries.size());
  const Index na = static_cast<Index>(cfg.age.levels.size()) - 1;
  const Index np = static_cast<Index>(cfg.period.levels.size()) - 1;

  Cohort out;
  Dataset& d = out.data;
  d.c = Matrix::Zero(n, nb + na + np);
  for (const auto& b : cfg.binaries) d.c_names.push_back(b.name);
  for (Index k = 1; k <= na; ++k) d.c_names.push_back("age=" + cfg.age.levels[static_cast<std::size_t>(k)]);
  for (Index k = 1; k <= np; ++k) d.c_names.push_back("period=" + cfg.period.levels[static_cast<std::size_t>(k)]);

  PartialConfounder eth{"ethnicity", Vector(n), Mask::Ones(n), true, cfg.ethnicity.levels};
  PartialConfounder egfr{"egfr", Vector(n), Mask::Ones(n), true, cfg.egfr.levels};

  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < nb; ++j) d.c(i, j) = rng.bernoulli(cfg.binaries[static_cast<std::size_t>(j)].p) ? 1.0 : 0.0;
    const Index a = draw_category(rng, cdf_age);
    if (a > 0) d.c(i, nb + a - 1) = 1.0;
    const Index p = draw_category(rng, cdf_period);
    if (p > 0) d.c(i, nb + na + p - 1) = 1.0;
    eth.values[i] = static_cast<double>(draw_category(rng, cdf_eth));
    egfr.values[i] = static_cast<double>(draw_category(rng, a >= cfg.egfr_older_from ? cdf_old : cdf_young));
  }
  d.x = {eth, egfr};
  d.y = Vector::Zero(n);
  d.z = Vector::Zero(n);

  // Missingness given fully observed covariates only.
  {
    const EncodedCovariates full = encode_missing_indicator(d);
    Vector u_eth(n), u_egfr(n);
    for (Index i = 0; i < n; ++i) {
      u_eth[i] = rng.uniform();
      u_egfr[i] = rng.uniform();
    }
    d.x[0].observed = draw_missing(linear_predictor(full, cfg.ethnicity_missing_model), cfg.ethnicity_missing, u_eth);
    d.x[1].observed = draw_missing(linear_predictor(full, cfg.egfr_missing_model), cfg.egfr_missing, u_egfr);
  }
  for (auto& x : d.x) {
    for (Index i = 0; i < n; ++i) {
      if (!x.observed[i]) x.values[i] = 0.0;
    }
  }

  const EncodedCovariates enc = encode_missing_indicator(d);
  const Vector eta_z = linear_predictor(enc, cfg.treatment_model);
  out.treatment_intercept = solve_intercept(eta_z, cfg.treated_fraction);
  out.pi = expit(Vector(eta_z.array() + out.treatment_intercept));
  for (Index i = 0; i < n; ++i) d.z[i] = rng.bernoulli(out.pi[i]) ? 1.0 : 0.0;

  // Mean and SD are matched on the sample: intercept from the mean of the
  // systematic part, residual SD from its variance.
  const Vector sys = linear_predictor(enc, cfg.outcome_model) + cfg.true_effect * d.z;
  const double mean_sys = sys.mean();
  const double var_sys = (sys.array() - mean_sys).square().mean();
  const double resid_var = cfg.outcome_sd * cfg.outcome_sd - var_sys;
  if (!(resid_var > 0.0)) {
    throw Error(ErrorCode::invalid_input, "outcome coefficients explain more than the target outcome variance");
  }
  out.outcome_intercept = cfg.outcome_mean - mean_sys;
  out.residual_sd = std::sqrt(resid_var);
  for (Index i = 0; i < n; ++i) {
    d.y[i] = out.outcome_intercept + sys[i] + out.residual_sd * rng.normal();
  }
  return out;
}

ModelSpec cohort_models(const CohortConfig& cfg, bool treatment_correct, bool outcome_correct) {
  ModelSpec s;
  s.treatment_terms = {"@H"};
  s.treatment_free_terms = {"@H"};
  if (treatment_correct) s.treatment_terms.push_back(cfg.interaction);
  if (outcome_correct) s.treatment_free_terms.push_back(cfg.interaction);
  s.blip_terms = {"intercept"};
  return s;
}

std::vector<IllustrationSpec> illustration_grid() {
  return {{true, true}, {true, false}, {false, true}, {false, false}};
}

std::vector<IllustrationRow> run_illustration(const Dataset& data, const CohortConfig& cfg,
                                              const std::vector<IllustrationSpec>& grid,
                                              const std::vector<Method>& methods) {
  const EncodedCovariates enc = encode_missing_indicator(data);
  auto row_from = [&](const std::string& tag, std::optional<bool> pi_ok, bool y_ok, const FitResult& f) {
    IllustrationRow r;
    r.method = tag;
    r.pi_correct = pi_ok;
    r.y_correct = y_ok;
    r.estimate = f.psi_hat[0];
    r.bias = r.estimate - cfg.true_effect;
    r.se = f.se[0];
    r.ci_lower = f.ci95(0, 0);
    r.ci_upper = f.ci95(0, 1);
    return r;
  };

  std::vector<IllustrationRow> rows;
  for (const Method& m : methods) {
    if (m.needs_propensity()) continue;
    for (bool y_ok : {true, false}) {
      const bool listed = std::any_of(grid.begin(), grid.end(), [&](const auto& g) { return g.y_correct == y_ok; });
      if (!listed) continue;
      const AugmentedDesign design = build_design(enc, cohort_models(cfg, true, y_ok));
      rows.push_back(row_from(m.tag(), std::nullopt, y_ok, estimate(m, design, data, nullptr)));
    }
  }

  struct Fitted {
    IllustrationSpec spec;
    std::vector<IllustrationRow> rows;
  };
  std::vector<Fitted> fitted;
  for (const auto& g : grid) {
    const AugmentedDesign design = build_design(enc, cohort_models(cfg, g.pi_correct, g.y_correct));
    std::optional<PropensityFit> ps;
    Fitted f{g, {}};
    for (const Method& m : methods) {
      if (!m.needs_propensity()) continue;
      if (!ps) ps = fit_propensity(design, data);
      f.rows.push_back(row_from(m.tag(), g.pi_correct, g.y_correct, estimate(m, design, data, &*ps)));
    }
    fitted.push_back(std::move(f));
  }
  // Method-major order, as in the published layout.
  for (const Method& m : methods) {
    if (!m.needs_propensity()) continue;
    for (const auto& f : fitted) {
      for (const auto& r : f.rows) {
        if (r.method == m.tag()) rows.push_back(r);
      }
    }
  }
  return rows;
}

CohortSummary summarize_cohort(const Dataset& data, const CohortConfig& cfg) {
  CohortSummary s;
  s.n = data.rows();
  s.treated = static_cast<Index>(data.z.sum());
  s.outcome_mean = data.y.mean();
  s.outcome_sd = std::sqrt((data.y.array() - s.outcome_mean).square().sum() / static_cast<double>(s.n - 1));
  const double n = static_cast<double>(s.n);
  auto add = [&](const std::string& var, const std::string& level, Index count) {
    s.rows.push_back({var, level, count, 100.0 * static_cast<double>(count) / n});
  };
  auto col_sum = [&](const std::string& name) {
    for (std::size_t j = 0; j < data.c_names.size(); ++j) {
      if (data.c_names[j] == name) return static_cast<Index>(data.c.col(static_cast<Index>(j)).sum());
    }
    throw Error(ErrorCode::invalid_input, "cohort has no column '" + name + "'");
  };
  for (const auto& b : cfg.binaries) add(b.name, "1", col_sum(b.name));
  for (const auto* m : {&cfg.age, &cfg.period}) {
    Index rest = s.n;
    for (std::size_t k = 1; k < m->levels.size(); ++k) {
      const Index c = col_sum(m->name + "=" + m->levels[k]);
      rest -= c;
      add(m->name, m->levels[k], c);
    }
    s.rows.insert(s.rows.end() - static_cast<std::ptrdiff_t>(m->levels.size() - 1),
                  {m->name, m->levels[0], rest, 100.0 * static_cast<double>(rest) / n});
  }
  for (const auto& x : data.x) {
    std::vector<Index> counts(x.levels.size(), 0);
    for (Index i = 0; i < s.n; ++i) {
      if (x.observed[i]) ++counts[static_cast<std::size_t>(x.values[i])];
    }
    for (std::size_t k = 0; k < x.levels.size(); ++k) add(x.name, x.levels[k], counts[k]);
    add(x.name, "missing", x.missing_count());
  }
  return s;
}

}  // namespace miwols
