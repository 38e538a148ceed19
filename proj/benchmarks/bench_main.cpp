#include <benchmark/benchmark.h>

#include "miwols/cohort.hpp"
#include "miwols/estimators.hpp"
#include "miwols/inference.hpp"
#include "miwols/model_fit.hpp"
#include "miwols/simulation.hpp"

using namespace miwols;

namespace {

struct Prepared {
  Dataset data;
  AugmentedDesign design;
  PropensityFit ps;
};

Prepared prepare(Index n) {
  ScenarioConfig cfg;
  cfg.n = n;
  cfg.reps = 1;
  Prepared p{generate_scenario(cfg, 0), {}, {}};
  p.design = build_design(encode_missing_indicator(p.data), working_models(cfg));
  p.ps = fit_propensity(p.design, p.data);
  return p;
}

void BM_GenerateScenario(benchmark::State& state) {
  ScenarioConfig cfg;
  cfg.n = state.range(0);
  cfg.reps = 1;
  for (auto _ : state) benchmark::DoNotOptimize(generate_scenario(cfg, 0));
}
BENCHMARK(BM_GenerateScenario)->Arg(500)->Arg(50000);

void BM_FitLogistic(benchmark::State& state) {
  const auto p = prepare(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(fit_logistic(p.design.h_alpha, p.data.z));
}
BENCHMARK(BM_FitLogistic)->Arg(500)->Arg(50000);

void BM_FitMiwolsPoint(benchmark::State& state) {
  const auto p = prepare(500);
  const Matrix x = outcome_regressors(p.design, p.data.z);
  const Vector w = compute_weights(WeightScheme::abs(), p.data.z, p.ps.pi);
  for (auto _ : state) benchmark::DoNotOptimize(fit_wls(x, p.data.y, w));
}
BENCHMARK(BM_FitMiwolsPoint);

void BM_FitMiwolsWithSandwich(benchmark::State& state) {
  const auto p = prepare(500);
  const auto kind = static_cast<WeightKind>(state.range(0));
  const auto scheme = WeightScheme::for_data(kind, p.data.z);
  for (auto _ : state) benchmark::DoNotOptimize(fit_miwols(p.design, p.data, scheme, p.ps));
}
BENCHMARK(BM_FitMiwolsWithSandwich)
    ->Arg(static_cast<int>(WeightKind::unw))
    ->Arg(static_cast<int>(WeightKind::abs))
    ->Arg(static_cast<int>(WeightKind::ipw));

void BM_Sandwich(benchmark::State& state) {
  const auto p = prepare(state.range(0));
  const auto f = fit_miwols(p.design, p.data, WeightScheme::abs(), p.ps);
  Vector theta(f.cov.rows());
  theta << p.ps.logistic.alpha, f.beta_hat, f.psi_hat;
  const auto scores = miwols_scores(p.design, p.data, WeightScheme::abs(), theta, true);
  for (auto _ : state) benchmark::DoNotOptimize(sandwich_cov(scores, theta));
}
BENCHMARK(BM_Sandwich)->Arg(500)->Arg(50000);

void BM_Estimators(benchmark::State& state) {
  const auto p = prepare(500);
  for (auto _ : state) {
    benchmark::DoNotOptimize(aipw_ate(p.design, p.data, p.ps));
    benchmark::DoNotOptimize(g_estimation(p.design, p.data, p.ps));
  }
}
BENCHMARK(BM_Estimators);

void BM_GenerateCohort(benchmark::State& state) {
  auto cfg = CohortConfig::defaults();
  cfg.n = state.range(0);
  for (auto _ : state) benchmark::DoNotOptimize(generate_cohort(cfg));
}
BENCHMARK(BM_GenerateCohort)->Arg(20000)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
