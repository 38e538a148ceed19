#include "miwols/simulation.hpp"

#include <atomic>
#include <bit>
#include <cmath>
#include <cstdlib>
#include <mutex>
#include <sstream>
#include <thread>

#include "miwols/error.hpp"
#include "miwols/rng.hpp"

namespace miwols {

std::string ScenarioConfig::specification() const {
  std::string s;
  s += treatment_model_correct() ? 'C' : 'I';
  s += outcome_model_correct() ? 'C' : 'I';
  return s;
}

std::string ScenarioConfig::label() const {
  std::string s = msita() ? "mSITA" : "!mSITA";
  s += cit() ? "+CIT" : "+!CIT";
  s += cio() ? "+CIO" : "+!CIO";
  s += "/" + specification();
  if (heterogeneous()) s += "/het";
  return s;
}

std::uint32_t ScenarioConfig::scenario_id() const {
  std::uint32_t h = 2166136261u;
  auto mix = [&h](std::uint64_t bits) {
    for (int k = 0; k < 8; ++k) {
      h ^= static_cast<std::uint32_t>((bits >> (8 * k)) & 0xFFu);
      h *= 16777619u;
    }
  };
  for (double v : {tau, lambda, gamma, delta_z, delta_y, psi0, psi1}) {
    mix(std::bit_cast<std::uint64_t>(v + 0.0));  // +0.0 folds -0.0 into 0.0
  }
  mix(static_cast<std::uint64_t>(n));
  return h;
}

SimulatedSample simulate_sample(const ScenarioConfig& cfg, Index rep) {
  if (cfg.n <= 0) throw Error(ErrorCode::invalid_input, "scenario n must be positive");
  if (rep < 0 || (cfg.reps > 0 && rep >= cfg.reps)) {
    throw Error(ErrorCode::invalid_input, "replication index out of range");
  }
  const Index n = cfg.n;
  Philox4x32 rng(cfg.base_seed, replication_stream(cfg.scenario_id(), static_cast<std::uint32_t>(rep)));

  SimulatedSample s;
  s.x_full.resize(n);
  s.r.resize(n);
  s.u_z.resize(n);
  s.u_y.resize(n);
  s.y0.resize(n);
  s.y1.resize(n);
  Dataset& d = s.data;
  d.y.resize(n);
  d.z.resize(n);
  d.c.resize(n, 1);
  d.c_names = {"C"};
  PartialConfounder x{"X", Vector::Zero(n), Mask::Constant(n, false), false, {}};

  for (Index i = 0; i < n; ++i) {
    const double uz = rng.normal();
    const double uy = rng.normal();
    const double xi = rng.bernoulli(0.67) ? 1.0 : 0.0;
    const double ci = rng.bernoulli(0.58) ? 1.0 : 0.0;
    const double ri = rng.bernoulli(1.0 - expit(-0.5 + 1.48 * uz + 1.36 * uy)) ? 1.0 : 0.0;
    const double lin_z = -1.2 + cfg.tau * uz + 1.38 * xi * ri + cfg.lambda * xi * (1.0 - ri) + 2.0 * ri +
                         1.69 * ci + cfg.delta_z * ci * ri;
    const double zi = rng.bernoulli(expit(lin_z)) ? 1.0 : 0.0;
    const double base = 1.0 - 2.2 * cfg.tau * uy - 1.55 * xi * ri + cfg.gamma * xi * (1.0 - ri) + 1.8 * ri -
                        1.7 * ci + cfg.delta_y * ci * ri;
    const double noise = 3.0 * rng.normal();
    const double y0 = base + noise;
    const double y1 = base + cfg.psi0 + cfg.psi1 * ci + noise;

    s.u_z[i] = uz;
    s.u_y[i] = uy;
    s.x_full[i] = xi;
    s.r[i] = ri;
    s.y0[i] = y0;
    s.y1[i] = y1;
    d.z[i] = zi;
    d.y[i] = zi == 1.0 ? y1 : y0;
    d.c(i, 0) = ci;
    if (ri == 1.0) {
      x.values[i] = xi;
      x.observed[i] = true;
    }
  }
  d.x.push_back(std::move(x));
  return s;
}

Dataset generate_scenario(const ScenarioConfig& cfg, Index rep) { return simulate_sample(cfg, rep).data; }

ModelSpec working_models(const ScenarioConfig& cfg) {
  ModelSpec spec;
  spec.treatment_terms = {"intercept", "X*R_X", "R_X", "C"};
  spec.treatment_free_terms = {"intercept", "X*R_X", "R_X", "C"};
  spec.blip_terms = {"intercept"};
  if (cfg.heterogeneous()) spec.blip_terms.push_back("C");
  return spec;
}

std::vector<double> true_parameters(const ScenarioConfig& cfg, const Method& method) {
  if (method.estimator == EstimatorKind::aipw) return {cfg.psi0 + cfg.psi1 * 0.58};
  if (cfg.heterogeneous()) return {cfg.psi0, cfg.psi1};
  return {cfg.psi0};
}

const MethodMetrics* ScenarioResult::find(const std::string& tag, Index parameter) const {
  for (const auto& r : rows) {
    if (r.method.tag() == tag && r.parameter == parameter) return &r;
  }
  return nullptr;
}

unsigned default_workers() {
  if (const char* env = std::getenv("MIWOLS_WORKERS")) {
    const long v = std::strtol(env, nullptr, 10);
    if (v > 0) return static_cast<unsigned>(v);
  }
  const unsigned hc = std::thread::hardware_concurrency();
  return hc == 0 ? 1u : hc;
}

namespace {

struct ReplicateOutcome {
  bool failed = false;
  std::string message;
  std::vector<ReplicateEstimate> per_method;
};

ReplicateOutcome run_replicate(const ScenarioConfig& cfg, const ModelSpec& spec,
                               const std::vector<Method>& methods, Index rep) {
  ReplicateOutcome out;
  try {
    const Dataset data = generate_scenario(cfg, rep);
    const AugmentedDesign design = build_design(encode_missing_indicator(data, 0.0), spec);
    bool need_ps = false;
    for (const auto& m : methods) need_ps = need_ps || m.needs_propensity();
    PropensityFit ps;
    if (need_ps) ps = fit_propensity(design, data);
    out.per_method.reserve(methods.size());
    for (const auto& m : methods) {
      const FitResult fr = estimate(m, design, data, need_ps ? &ps : nullptr);
      out.per_method.push_back({fr.psi_hat, fr.se});
    }
  } catch (const Error& e) {
    out.failed = true;
    out.message = e.what();
    out.per_method.clear();
  }
  return out;
}

template <class Fn>
void parallel_for(Index count, unsigned workers, Fn&& fn) {
  if (workers <= 1 || count <= 1) {
    for (Index i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<Index> next{0};
  std::vector<std::thread> pool;
  const unsigned used = static_cast<unsigned>(std::min<Index>(workers, count));
  pool.reserve(used);
  for (unsigned t = 0; t < used; ++t) {
    pool.emplace_back([&] {
      for (Index i = next.fetch_add(1); i < count; i = next.fetch_add(1)) fn(i);
    });
  }
  for (auto& th : pool) th.join();
}

}  // namespace

ScenarioResult run_monte_carlo(const ScenarioConfig& cfg, const std::vector<Method>& methods,
                               unsigned workers) {
  if (cfg.reps < 1) throw Error(ErrorCode::invalid_input, "reps must be at least 1");
  if (methods.empty()) throw Error(ErrorCode::invalid_input, "no estimators selected");
  if (workers == 0) workers = default_workers();
  const ModelSpec spec = working_models(cfg);

  std::vector<ReplicateOutcome> outcomes(static_cast<std::size_t>(cfg.reps));
  parallel_for(cfg.reps, workers, [&](Index r) {
    outcomes[static_cast<std::size_t>(r)] = run_replicate(cfg, spec, methods, r);
  });

  // Deterministic fold in replication order.
  ScenarioResult res;
  res.config = cfg;
  res.methods = methods;
  res.estimates.assign(methods.size(), std::vector<std::optional<ReplicateEstimate>>(outcomes.size()));
  std::vector<std::size_t> ok;
  for (std::size_t r = 0; r < outcomes.size(); ++r) {
    if (outcomes[r].failed) {
      ++res.failures;
      if (res.failure_messages.size() < 5) {
        res.failure_messages.push_back("rep " + std::to_string(r) + ": " + outcomes[r].message);
      }
      continue;
    }
    ok.push_back(r);
    for (std::size_t m = 0; m < methods.size(); ++m) res.estimates[m][r] = outcomes[r].per_method[m];
  }
  res.valid = static_cast<double>(res.failures) <= 0.05 * static_cast<double>(cfg.reps);

  const auto m_used = static_cast<double>(ok.size());
  std::optional<std::size_t> gest_index;
  for (std::size_t m = 0; m < methods.size(); ++m) {
    if (methods[m].estimator == EstimatorKind::gest) gest_index = m;
  }

  for (std::size_t m = 0; m < methods.size(); ++m) {
    const auto truths = true_parameters(cfg, methods[m]);
    for (std::size_t k = 0; k < truths.size(); ++k) {
      MethodMetrics row;
      row.method = methods[m];
      row.parameter = static_cast<Index>(k);
      row.parameter_name = k == 0 ? (methods[m].estimator == EstimatorKind::aipw ? "ate" : "psi0") : "psi1";
      row.truth = truths[k];
      row.reps_used = static_cast<Index>(ok.size());
      if (!ok.empty()) {
        double sum = 0.0, sum_se = 0.0, covered = 0.0, sq = 0.0;
        for (auto r : ok) {
          const auto& e = *res.estimates[m][r];
          sum += e.estimate[static_cast<Index>(k)];
          sum_se += e.se[static_cast<Index>(k)];
          const double err = e.estimate[static_cast<Index>(k)] - row.truth;
          sq += err * err;
          if (std::abs(err) <= kCi95Multiplier * e.se[static_cast<Index>(k)]) covered += 1.0;
        }
        row.mean = sum / m_used;
        row.bias = row.mean - row.truth;
        row.ase = sum_se / m_used;
        row.coverage = covered / m_used;
        row.mse = sq / m_used;
        if (ok.size() >= 2) {
          double ss = 0.0;
          for (auto r : ok) {
            const double d = res.estimates[m][r]->estimate[static_cast<Index>(k)] - row.mean;
            ss += d * d;
          }
          row.ese = std::sqrt(ss / m_used);
          if (*row.ese > 0.0) row.ase_over_ese = row.ase / *row.ese;
          row.pct_bias_over_ase_mcse = 100.0 * (*row.ese / std::sqrt(m_used)) / row.ase;
        }
        row.pct_bias_over_ase = 100.0 * row.bias / row.ase;

        if (gest_index) {
          const auto gest_truths = true_parameters(cfg, methods[*gest_index]);
          if (k < gest_truths.size() && gest_truths[k] == row.truth) {
            double gsq = 0.0;
            std::vector<double> a, b;
            for (auto r : ok) {
              const double ea = res.estimates[m][r]->estimate[static_cast<Index>(k)] - row.truth;
              const double eb = res.estimates[*gest_index][r]->estimate[static_cast<Index>(k)] - row.truth;
              a.push_back(ea * ea);
              b.push_back(eb * eb);
              gsq += eb * eb;
            }
            const double gmse = gsq / m_used;
            if (gmse > 0.0) {
              const double ratio = row.mse / gmse;
              row.mse_relative_to_gest = ratio;
              if (ok.size() >= 2) {
                double v = 0.0;
                for (std::size_t i = 0; i < a.size(); ++i) {
                  const double d = a[i] - ratio * b[i];
                  v += d * d;
                }
                v /= (m_used - 1.0);
                row.mse_relative_mcse = std::sqrt(v / m_used) / gmse;
              }
            }
          }
        }
      }
      res.rows.push_back(std::move(row));
    }
  }
  return res;
}

MetricsTable run_grid(const std::vector<ScenarioConfig>& grid, const std::vector<Method>& methods,
                      unsigned workers) {
  MetricsTable t;
  t.scenarios.reserve(grid.size());
  for (const auto& cfg : grid) t.scenarios.push_back(run_monte_carlo(cfg, methods, workers));
  return t;
}

std::vector<ScenarioConfig> table1_grid(Index n, Index reps, std::uint64_t seed, double psi1) {
  std::vector<ScenarioConfig> grid;
  // Row blocks: (CIT, CIO) = (yes, yes), (no, yes), (yes, no), (no, no).
  const std::pair<double, double> assumptions[] = {{0.0, 0.0}, {1.38, 0.0}, {0.0, -1.55}, {1.38, -1.55}};
  // Specifications CC, CI, IC, II as (delta_z, delta_y).
  const std::pair<double, double> specs[] = {{0.0, 0.0}, {0.0, -4.2}, {-4.2, 0.0}, {-4.2, -4.2}};
  for (const auto& [lambda, gamma] : assumptions) {
    for (const auto& [dz, dy] : specs) {
      ScenarioConfig c;
      c.lambda = lambda;
      c.gamma = gamma;
      c.delta_z = dz;
      c.delta_y = dy;
      c.psi1 = psi1;
      c.n = n;
      c.reps = reps;
      c.base_seed = seed;
      grid.push_back(c);
    }
  }
  return grid;
}

std::vector<ScenarioConfig> full_grid(Index n, Index reps, std::uint64_t seed, double psi1) {
  std::vector<ScenarioConfig> grid;
  for (double tau : {0.0, 1.25}) {
    for (const auto& c : table1_grid(n, reps, seed, psi1)) {
      ScenarioConfig copy = c;
      copy.tau = tau;
      grid.push_back(copy);
    }
  }
  return grid;
}

std::vector<Method> all_methods() {
  return {Method{EstimatorKind::miwols, WeightKind::unw}, Method{EstimatorKind::miwols, WeightKind::abs},
          Method{EstimatorKind::miwols, WeightKind::ipw}, Method{EstimatorKind::miwols, WeightKind::sipw},
          Method{EstimatorKind::aipw, WeightKind::unw},   Method{EstimatorKind::gest, WeightKind::unw}};
}

}  // namespace miwols
