#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "miwols/dataset.hpp"
#include "miwols/estimators.hpp"

namespace miwols {

/// Parameters of the simulation data-generating mechanism.
///
///   X ~ Bern(0.67), C ~ Bern(0.58), U_Z, U_Y ~ N(0, 1)
///   R ~ Bern(1 - expit(-0.5 + 1.48 U_Z + 1.36 U_Y))
///   Z ~ Bern(expit(-1.2 + tau U_Z + 1.38 XR + lambda X(1-R) + 2R + 1.69C + delta_z CR))
///   Y ~ N(1 + psi0 Z + psi1 ZC - 2.2 tau U_Y - 1.55 XR + gamma X(1-R) + 1.8R - 1.7C
///         + delta_y CR, sd = 3)
///
/// Zero tau, lambda, gamma, delta_z and delta_y give mSITA, CIT, CIO, a
/// correct treatment model and a correct outcome model respectively.
struct ScenarioConfig {
  double tau = 0.0;
  double lambda = 0.0;
  double gamma = 0.0;
  double delta_z = 0.0;
  double delta_y = 0.0;
  double psi0 = -2.35;
  double psi1 = 0.0;
  Index n = 500;
  Index reps = 1000;
  std::uint64_t base_seed = 20240611;

  bool msita() const { return tau == 0.0; }
  bool cit() const { return lambda == 0.0; }
  bool cio() const { return gamma == 0.0; }
  bool treatment_model_correct() const { return delta_z == 0.0; }
  bool outcome_model_correct() const { return delta_y == 0.0; }
  bool heterogeneous() const { return psi1 != 0.0; }

  /// "CC", "CI", "IC" or "II" (treatment model first).
  std::string specification() const;
  /// E.g. "mSITA+CIT+CIO/CC"; violated assumptions carry a leading '!'.
  std::string label() const;
  /// Hash of the mechanism parameters and n; names the scenario's RNG streams.
  std::uint32_t scenario_id() const;
};

/// One simulated sample with the latent quantities tests need.
struct SimulatedSample {
  Dataset data;    // y, z, c = {C}, x = {X masked where R = 0}
  Vector x_full;   // X before masking
  Vector r;        // observation indicator of X
  Vector u_z, u_y;
  Vector y0, y1;   // potential outcomes sharing the outcome noise
};

SimulatedSample simulate_sample(const ScenarioConfig& cfg, Index rep);
Dataset generate_scenario(const ScenarioConfig& cfg, Index rep);

/// Working models: treatment and treatment-free parts {1, X*R_X, R_X, C};
/// blip {1} or {1, C} when the mechanism is heterogeneous.
ModelSpec working_models(const ScenarioConfig& cfg);

/// True value of each reported parameter of `method` under `cfg`.
std::vector<double> true_parameters(const ScenarioConfig& cfg, const Method& method);

struct ReplicateEstimate {
  Vector estimate;
  Vector se;
};

struct MethodMetrics {
  Method method;
  Index parameter = 0;
  std::string parameter_name;
  double truth = 0.0;
  Index reps_used = 0;
  double mean = 0.0;
  double bias = 0.0;
  std::optional<double> ese;  // population SD (divisor M); absent for M < 2
  double ase = 0.0;
  std::optional<double> ase_over_ese;
  double pct_bias_over_ase = 0.0;
  double pct_bias_over_ase_mcse = 0.0;  // Monte Carlo SE of the percentage
  double coverage = 0.0;
  double mse = 0.0;
  std::optional<double> mse_relative_to_gest;
  std::optional<double> mse_relative_mcse;
};

struct ScenarioResult {
  ScenarioConfig config;
  std::vector<Method> methods;
  Index failures = 0;
  std::vector<std::string> failure_messages;  // first few, for reporting
  bool valid = true;                          // false when > 5% replications failed
  std::vector<MethodMetrics> rows;
  /// estimates[m][r] for method m and replication r; empty for failed replications.
  std::vector<std::vector<std::optional<ReplicateEstimate>>> estimates;

  const MethodMetrics* find(const std::string& tag, Index parameter = 0) const;
};

struct MetricsTable {
  std::vector<ScenarioResult> scenarios;
};

/// Default worker count: MIWOLS_WORKERS if set, else hardware concurrency.
unsigned default_workers();

/// Runs every replication of one scenario and aggregates in replication order.
ScenarioResult run_monte_carlo(const ScenarioConfig& cfg, const std::vector<Method>& methods,
                               unsigned workers = 0);

MetricsTable run_grid(const std::vector<ScenarioConfig>& grid, const std::vector<Method>& methods,
                      unsigned workers = 0);

/// The sixteen mSITA scenarios (CIT x CIO x CC/CI/IC/II) in table order.
std::vector<ScenarioConfig> table1_grid(Index n, Index reps, std::uint64_t seed, double psi1 = 0.0);

/// All 2^5 combinations of (tau, lambda, gamma, delta_z, delta_y).
std::vector<ScenarioConfig> full_grid(Index n, Index reps, std::uint64_t seed, double psi1 = 0.0);

/// UNW, ABS, IPW, SIPW, AIPW, GEST.
std::vector<Method> all_methods();

}  // namespace miwols
