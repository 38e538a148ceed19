#include "cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <functional>
#include <ostream>
#include <set>
#include <sstream>
#include <stdexcept>

#include "miwols/cohort.hpp"
#include "miwols/error.hpp"
#include "miwols/report.hpp"
#include "miwols/simulation.hpp"

namespace miwols::cli {

namespace {

using json = nlohmann::json;
namespace fs = std::filesystem;

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct FitFailure : std::runtime_error {
  FitFailure(const std::string& estimator, const std::string& what)
      : std::runtime_error("fitting failed for estimator " + estimator + ": " + what) {}
};

// Raw flag values; unset ones fall back to the config file.
struct Flags {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> workers;
  std::optional<long long> reps;
  std::optional<long long> n;
  std::string input;
  std::string preset;
  std::string export_cohort;
  std::vector<std::string> schemes;
  std::vector<double> p_bar;
  int grid_size = 99;
};

json load_json(const std::string& path) {
  if (path.empty()) return json::object();
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  try {
    json j = json::parse(in, nullptr, true, true);
    if (!j.is_object()) throw ConfigError("config file '" + path + "' must hold a JSON object");
    return j;
  } catch (const json::parse_error& e) {
    throw ConfigError("config file '" + path + "': " + e.what());
  }
}

template <class T>
T get_or(const json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(std::string("config key '") + key + "' has the wrong type");
  }
}

std::vector<std::string> string_list(const json& j, const char* key, std::vector<std::string> fallback) {
  if (!j.contains(key)) return fallback;
  const json& v = j.at(key);
  if (v.is_string()) return {v.get<std::string>()};
  return get_or<std::vector<std::string>>(j, key, fallback);
}

RunConfig base_config(const std::string& command, const json& j, const Flags& f) {
  RunConfig c;
  c.command = command;
  c.out_dir = f.out.empty() ? get_or<std::string>(j, "out", c.out_dir) : f.out;
  c.seed = f.seed ? *f.seed : get_or<std::uint64_t>(j, "seed", get_or<std::uint64_t>(j, "base_seed", c.seed));
  c.workers = f.workers ? *f.workers : get_or<unsigned>(j, "workers", 0u);
  if (f.reps) {
    c.reps = f.reps;
  } else if (j.contains("reps")) {
    c.reps = get_or<long long>(j, "reps", 0);
  }
  if (f.n) {
    c.n = f.n;
  } else if (j.contains("n")) {
    c.n = get_or<long long>(j, "n", 0);
  }
  if (c.reps && *c.reps <= 0) throw ConfigError("reps must be positive");
  if (c.n && *c.n <= 0) throw ConfigError("n must be positive");
  if (c.workers == 0) c.workers = default_workers();
  return c;
}

void read_data_section(RunConfig& c, const json& j, const Flags& f) {
  if (!f.input.empty()) {
    c.input = f.input;
  } else if (j.contains("input")) {
    c.input = get_or<std::string>(j, "input", "");
  }
  const json cols = j.value("columns", json::object());
  c.roles.outcome = get_or<std::string>(cols, "outcome", "");
  c.roles.treatment = get_or<std::string>(cols, "treatment", "");
  c.roles.observed = string_list(cols, "observed", {});
  c.roles.partial = string_list(cols, "partial", {});
  c.roles.categorical = string_list(cols, "categorical", {});
  const json model = j.value("model", json::object());
  c.model.treatment_terms = string_list(model, "treatment", {"@H"});
  c.model.treatment_free_terms = string_list(model, "treatment_free", {"@H"});
  c.model.blip_terms = string_list(model, "blip", {"intercept"});
  c.fill = get_or<double>(j, "fill", 0.0);
  c.estimators = string_list(j, "estimators", c.estimators);
  c.schemes = string_list(j, "schemes", c.schemes);
}

void check_mapping(const RunConfig& c) {
  if (!c.input) throw ConfigError("no input CSV given (use --input or the 'input' config key)");
  if (c.roles.outcome.empty()) throw ConfigError("exactly one outcome column is required (columns.outcome)");
  if (c.roles.treatment.empty()) throw ConfigError("exactly one treatment column is required (columns.treatment)");
  if (c.roles.outcome == c.roles.treatment) throw ConfigError("outcome and treatment must be different columns");
  std::ifstream in(*c.input);
  if (!in) throw ConfigError("cannot open input CSV '" + *c.input + "'");
  const auto header = read_csv_header(in);
  const std::set<std::string> have(header.begin(), header.end());
  std::vector<std::string> declared{c.roles.outcome, c.roles.treatment};
  for (const auto* v : {&c.roles.observed, &c.roles.partial, &c.roles.categorical}) {
    declared.insert(declared.end(), v->begin(), v->end());
  }
  for (const auto& name : declared) {
    if (!have.count(name)) throw ConfigError("column '" + name + "' not found in CSV header of '" + *c.input + "'");
  }
  const std::set<std::string> partial(c.roles.partial.begin(), c.roles.partial.end());
  for (const auto& name : c.roles.categorical) {
    if (!partial.count(name)) throw ConfigError("categorical column '" + name + "' must also be listed as partial");
  }
  for (const auto& name : c.roles.observed) {
    if (partial.count(name)) throw ConfigError("column '" + name + "' is listed as both observed and partial");
  }
}

std::vector<Method> parse_methods(const std::vector<std::string>& tags) {
  std::vector<Method> out;
  for (const auto& t : tags) {
    const auto m = parse_method(t);
    if (!m) throw ConfigError("unknown method '" + t + "'");
    out.push_back(*m);
  }
  if (out.empty()) throw ConfigError("no methods selected");
  return out;
}

std::string upper(std::string s) {
  for (auto& ch : s) ch = static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
  return s;
}

json effective_json(const RunConfig& c) {
  json j;
  j["command"] = c.command;
  j["seed"] = c.seed;
  if (c.reps) j["reps"] = *c.reps;
  if (c.n) j["n"] = *c.n;
  if (c.input) j["input"] = *c.input;
  if (!c.roles.outcome.empty()) {
    j["columns"] = {{"outcome", c.roles.outcome},   {"treatment", c.roles.treatment},
                    {"observed", c.roles.observed}, {"partial", c.roles.partial},
                    {"categorical", c.roles.categorical}};
    j["model"] = {{"treatment", c.model.treatment_terms},
                  {"treatment_free", c.model.treatment_free_terms},
                  {"blip", c.model.blip_terms}};
    j["fill"] = c.fill;
    j["estimators"] = c.estimators;
    j["schemes"] = c.schemes;
  }
  return j;
}

ReportHeader header_for(const RunConfig& c, const json& extra) {
  json j = effective_json(c);
  for (auto it = extra.begin(); it != extra.end(); ++it) j[it.key()] = it.value();
  return {c.command, j.dump(), c.seed};
}

void write_file(const fs::path& path, const std::function<void(std::ostream&)>& body) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw ConfigError("cannot write '" + path.string() + "'");
  body(f);
  if (!f) throw ConfigError("error while writing '" + path.string() + "'");
}

fs::path prepare_out(const RunConfig& c) {
  std::error_code ec;
  fs::create_directories(c.out_dir, ec);
  if (ec) throw ConfigError("cannot create output directory '" + c.out_dir + "': " + ec.message());
  return fs::path(c.out_dir);
}

// ---------------------------------------------------------------------------

int cmd_estimate(const json& j, const Flags& f, std::ostream& out) {
  RunConfig c = base_config("estimate", j, f);
  read_data_section(c, j, f);
  check_mapping(c);
  const auto methods = selected_methods(c);

  Dataset data;
  AugmentedDesign design;
  try {
    data = read_csv_file(*c.input, c.roles);
    design = build_design(encode_missing_indicator(data, c.fill), c.model);
  } catch (const Error& e) {
    if (!e.is_fitting_error()) throw ConfigError(e.what());
    throw FitFailure("(design)", e.what());
  }

  std::optional<PropensityFit> ps;
  std::vector<FitResult> fits;
  for (const auto& m : methods) {
    try {
      if (m.needs_propensity() && !ps) ps = fit_propensity(design, data);
      fits.push_back(estimate(m, design, data, ps ? &*ps : nullptr));
    } catch (const Error& e) {
      throw FitFailure(m.tag(), e.what());
    }
  }

  const fs::path dir = prepare_out(c);
  const ReportHeader h = header_for(c, json::object());
  write_file(dir / "estimates.csv", [&](std::ostream& o) { write_fits_csv(o, h, fits); });
  write_file(dir / "estimates.md", [&](std::ostream& o) { write_fits_markdown(o, h, fits); });
  write_fits_markdown(out, h, fits);
  return kExitOk;
}

std::vector<ScenarioConfig> grid_from_json(const json& j, Index n, Index reps, std::uint64_t seed) {
  const std::string preset = get_or<std::string>(j, "preset", "");
  const double psi1 = get_or<double>(j, "psi1", 0.0);
  if (preset == "table1") return table1_grid(n, reps, seed, psi1);
  if (preset == "full") return full_grid(n, reps, seed, psi1);
  if (!preset.empty()) throw ConfigError("unknown preset '" + preset + "' (expected table1 or full)");
  if (!j.contains("scenarios")) throw ConfigError("simulate needs a 'preset' or a 'scenarios' object");
  const json& s = j.at("scenarios");
  if (!s.is_object()) throw ConfigError("'scenarios' must be an object");

  static const std::vector<std::string> keys{"tau", "lambda", "gamma", "delta_z", "delta_y", "psi0", "psi1"};
  for (auto it = s.begin(); it != s.end(); ++it) {
    if (std::find(keys.begin(), keys.end(), it.key()) == keys.end()) {
      throw ConfigError("unknown scenario key '" + it.key() + "'");
    }
  }
  std::vector<std::vector<double>> values;
  ScenarioConfig proto;
  const std::vector<double> defaults{proto.tau, proto.lambda, proto.gamma, proto.delta_z,
                                     proto.delta_y, proto.psi0, psi1};
  for (std::size_t k = 0; k < keys.size(); ++k) {
    if (!s.contains(keys[k])) {
      values.push_back({defaults[k]});
      continue;
    }
    const json& v = s.at(keys[k]);
    try {
      values.push_back(v.is_array() ? v.get<std::vector<double>>() : std::vector<double>{v.get<double>()});
    } catch (const json::exception&) {
      throw ConfigError("scenario key '" + keys[k] + "' must be a number or an array of numbers");
    }
    if (values.back().empty()) throw ConfigError("scenario key '" + keys[k] + "' has no values");
  }

  std::vector<ScenarioConfig> grid;
  std::vector<std::size_t> idx(keys.size(), 0);
  while (true) {
    ScenarioConfig cfg;
    cfg.tau = values[0][idx[0]];
    cfg.lambda = values[1][idx[1]];
    cfg.gamma = values[2][idx[2]];
    cfg.delta_z = values[3][idx[3]];
    cfg.delta_y = values[4][idx[4]];
    cfg.psi0 = values[5][idx[5]];
    cfg.psi1 = values[6][idx[6]];
    cfg.n = n;
    cfg.reps = reps;
    cfg.base_seed = seed;
    grid.push_back(cfg);
    // Odometer with the last key varying fastest.
    std::size_t k = keys.size();
    while (k > 0) {
      --k;
      if (++idx[k] < values[k].size()) break;
      idx[k] = 0;
      if (k == 0) return grid;
    }
  }
}

void write_mc_outputs(const fs::path& dir, const ReportHeader& h, const MetricsTable& t) {
  write_file(dir / "metrics.csv", [&](std::ostream& o) { write_metrics_csv(o, h, t); });
  write_file(dir / "metrics.md", [&](std::ostream& o) { write_metrics_markdown(o, h, t); });
  write_file(dir / "boxplot.csv", [&](std::ostream& o) { write_boxplot_csv(o, h, t); });
}

void report_failures(const MetricsTable& t, std::ostream& out) {
  for (const auto& s : t.scenarios) {
    if (s.failures == 0) continue;
    out << s.config.label() << ": " << s.failures << " failed replication(s)" << (s.valid ? "" : " (scenario invalid)");
    if (!s.failure_messages.empty()) out << ", first: " << s.failure_messages.front();
    out << '\n';
  }
}

int cmd_simulate(const json& j, const Flags& f, std::ostream& out) {
  RunConfig c = base_config("simulate", j, f);
  const Index n = c.n.value_or(500);
  const Index reps = c.reps.value_or(1000);
  json grid_spec = j;
  if (!f.preset.empty()) grid_spec["preset"] = f.preset;
  const auto grid = grid_from_json(grid_spec, n, reps, c.seed);
  std::vector<Method> methods;
  if (j.contains("estimators") || j.contains("schemes")) {
    RunConfig sel;
    sel.estimators = string_list(j, "estimators", {"MIWOLS", "AIPW", "GEST"});
    sel.schemes = string_list(j, "schemes", sel.schemes);
    methods = selected_methods(sel);
  } else {
    methods = parse_methods(string_list(j, "methods", {"UNW", "ABS", "IPW", "SIPW", "AIPW", "GEST"}));
  }

  const MetricsTable t = run_grid(grid, methods, c.workers);
  json extra;
  extra["grid"] = grid_spec.contains("scenarios") ? grid_spec["scenarios"] : json(grid_spec.value("preset", ""));
  extra["psi1"] = get_or<double>(j, "psi1", 0.0);
  std::vector<std::string> tags;
  for (const auto& m : methods) tags.push_back(m.tag());
  extra["methods"] = tags;
  const ReportHeader h = header_for(c, extra);
  const fs::path dir = prepare_out(c);
  write_mc_outputs(dir, h, t);
  report_failures(t, out);
  out << "wrote " << t.scenarios.size() << " scenario(s) to " << dir.string() << '\n';
  return kExitOk;
}

int cmd_table1(const json& j, const Flags& f, std::ostream& out) {
  RunConfig c = base_config("replicate-table1", j, f);
  const Index n = c.n.value_or(500);
  const Index reps = c.reps.value_or(1000);
  if (reps < 100) throw ConfigError("replicate-table1 needs reps >= 100 (got " + std::to_string(reps) + ")");
  const double psi1 = get_or<double>(j, "psi1", 0.0);
  const auto grid = table1_grid(n, reps, c.seed, psi1);
  const MetricsTable t = run_grid(grid, all_methods(), c.workers);

  json extra;
  extra["psi1"] = psi1;
  c.n = n;
  c.reps = reps;
  const ReportHeader h = header_for(c, extra);
  const fs::path dir = prepare_out(c);
  write_file(dir / "table1.csv", [&](std::ostream& o) { write_table1_csv(o, h, t); });
  write_file(dir / "table1.md", [&](std::ostream& o) { write_table1_markdown(o, h, t); });
  write_mc_outputs(dir, h, t);
  report_failures(t, out);
  write_table1_markdown(out, h, t);
  return kExitOk;
}

void apply_coefficients(Coefficients& target, const json& j, const char* key) {
  if (!j.contains(key)) return;
  const json& v = j.at(key);
  if (!v.is_object()) throw ConfigError(std::string("cohort key '") + key + "' must map terms to numbers");
  for (auto it = v.begin(); it != v.end(); ++it) {
    if (!it.value().is_number()) throw ConfigError("coefficient of '" + it.key() + "' must be a number");
    const double b = it.value().get<double>();
    auto hit = std::find_if(target.begin(), target.end(), [&](const auto& p) { return p.first == it.key(); });
    if (hit != target.end()) {
      hit->second = b;
    } else {
      target.emplace_back(it.key(), b);
    }
  }
}

json coefficients_json(const Coefficients& coef) {
  json j = json::array();
  for (const auto& [t, b] : coef) j.push_back({t, b});
  return j;
}

int cmd_table3(const json& j, const Flags& f, std::ostream& out) {
  RunConfig c = base_config("replicate-table3", j, f);
  CohortConfig cohort = CohortConfig::defaults();
  const json cj = j.value("cohort", json::object());
  cohort.n = c.n.value_or(get_or<long long>(cj, "n", cohort.n));
  cohort.seed = (f.seed || j.contains("seed")) ? c.seed : get_or<std::uint64_t>(cj, "seed", cohort.seed);
  cohort.true_effect = get_or<double>(cj, "true_effect", cohort.true_effect);
  cohort.treated_fraction = get_or<double>(cj, "treated_fraction", cohort.treated_fraction);
  cohort.outcome_mean = get_or<double>(cj, "outcome_mean", cohort.outcome_mean);
  cohort.outcome_sd = get_or<double>(cj, "outcome_sd", cohort.outcome_sd);
  cohort.ethnicity_missing = get_or<double>(cj, "ethnicity_missing", cohort.ethnicity_missing);
  cohort.egfr_missing = get_or<double>(cj, "egfr_missing", cohort.egfr_missing);
  apply_coefficients(cohort.treatment_model, cj, "treatment_model");
  apply_coefficients(cohort.outcome_model, cj, "outcome_model");
  c.seed = cohort.seed;
  const auto methods = parse_methods(string_list(j, "methods", {"UNW", "ABS", "IPW", "SIPW", "AIPW", "GEST"}));

  Cohort generated;
  try {
    generated = generate_cohort(cohort);
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }
  if (!f.export_cohort.empty()) {
    write_file(f.export_cohort, [&](std::ostream& o) { write_csv(o, generated.data); });
    out << "exported cohort to " << f.export_cohort << '\n';
  }

  std::vector<IllustrationRow> rows;
  try {
    rows = run_illustration(generated.data, cohort, illustration_grid(), methods);
  } catch (const Error& e) {
    throw FitFailure("(illustration)", e.what());
  }

  json extra;
  extra["cohort"] = {{"n", cohort.n},
                     {"seed", cohort.seed},
                     {"true_effect", cohort.true_effect},
                     {"treated_fraction", cohort.treated_fraction},
                     {"outcome_mean", cohort.outcome_mean},
                     {"outcome_sd", cohort.outcome_sd},
                     {"ethnicity_missing", cohort.ethnicity_missing},
                     {"egfr_missing", cohort.egfr_missing},
                     {"treatment_model", coefficients_json(cohort.treatment_model)},
                     {"outcome_model", coefficients_json(cohort.outcome_model)}};
  std::vector<std::string> tags;
  for (const auto& m : methods) tags.push_back(m.tag());
  extra["methods"] = tags;
  c.n = cohort.n;
  const ReportHeader h = header_for(c, extra);
  const CohortSummary summary = summarize_cohort(generated.data, cohort);
  const fs::path dir = prepare_out(c);
  write_file(dir / "table3.csv", [&](std::ostream& o) { write_illustration_csv(o, h, rows); });
  write_file(dir / "table3.md",
             [&](std::ostream& o) { write_illustration_markdown(o, h, rows, cohort.true_effect); });
  write_file(dir / "cohort_summary.csv", [&](std::ostream& o) { write_cohort_summary_csv(o, h, summary); });
  write_file(dir / "cohort_summary.md", [&](std::ostream& o) { write_cohort_summary_markdown(o, h, summary); });
  write_illustration_markdown(out, h, rows, cohort.true_effect);
  return kExitOk;
}

int cmd_balance(const json& j, const Flags& f, std::ostream& out) {
  RunConfig c = base_config("balance-check", j, f);
  read_data_section(c, j, f);
  std::vector<std::string> names = f.schemes.empty() ? string_list(j, "schemes", c.schemes) : f.schemes;
  c.schemes = names;
  std::vector<double> p_bars = f.p_bar.empty() ? get_or<std::vector<double>>(j, "p_bar", {0.5}) : f.p_bar;
  for (double p : p_bars) {
    if (!(p > 0.0 && p < 1.0)) throw ConfigError("p_bar must lie in (0, 1)");
  }
  if (f.grid_size < 1) throw ConfigError("grid size must be positive");

  std::optional<Dataset> data;
  std::optional<AugmentedDesign> design;
  if (c.input) {
    check_mapping(c);
    try {
      data = read_csv_file(*c.input, c.roles);
      design = build_design(encode_missing_indicator(*data, c.fill), c.model);
    } catch (const Error& e) {
      if (!e.is_fitting_error()) throw ConfigError(e.what());
      throw FitFailure("(design)", e.what());
    }
    p_bars = {data->z.mean()};
  }

  std::vector<WeightScheme> schemes;
  for (const auto& name : names) {
    const auto kind = parse_weight_kind(name);
    if (!kind) throw ConfigError("unknown weight scheme '" + name + "'");
    if (*kind == WeightKind::sipw) {
      for (double p : p_bars) schemes.push_back(WeightScheme::sipw(p));
    } else {
      schemes.push_back(kind == WeightKind::abs   ? WeightScheme::abs()
                        : kind == WeightKind::ipw ? WeightScheme::ipw()
                                                  : WeightScheme::unw());
    }
  }

  Vector grid(f.grid_size);
  for (int k = 0; k < f.grid_size; ++k) grid[k] = (k + 1.0) / (f.grid_size + 1.0);
  const auto rows = balance_rows(schemes, grid);

  std::vector<CovariateBalanceRow> cov_rows;
  if (data) {
    PropensityFit ps;
    try {
      ps = fit_propensity(*design, *data);
    } catch (const Error& e) {
      throw FitFailure("propensity model", e.what());
    }
    const Matrix& h = design->encoded.h;
    const Vector raw = weighted_mean_difference(h, data->z, Vector::Ones(data->rows()));
    for (const auto& s : schemes) {
      const Vector w = compute_weights(s, data->z, ps.pi);
      const Vector d = weighted_mean_difference(h, data->z, w);
      for (Index k = 0; k < h.cols(); ++k) {
        cov_rows.push_back({std::string(to_string(s.kind())), design->encoded.names[static_cast<std::size_t>(k)],
                            raw[k], d[k]});
      }
    }
  }

  for (const auto& r : rows) {
    out << r.scheme;
    if (std::isfinite(r.p_bar)) out << " (p_bar = " << format_fixed(r.p_bar, 4) << ")";
    out << ": max |defect| = " << format_fixed(r.max_abs_defect, 6) << ", balanced: " << (r.balanced ? "yes" : "no")
        << '\n';
  }

  json extra;
  extra["p_bar"] = p_bars;
  extra["grid_size"] = f.grid_size;
  const ReportHeader h = header_for(c, extra);
  const fs::path dir = prepare_out(c);
  write_file(dir / "balance.csv", [&](std::ostream& o) { write_balance_csv(o, h, rows, cov_rows); });
  write_file(dir / "balance.md", [&](std::ostream& o) { write_balance_markdown(o, h, rows, cov_rows); });
  return kExitOk;
}

void add_common(CLI::App* sub, Flags& f) {
  sub->add_option("--config", f.config, "JSON config file");
  sub->add_option("--out", f.out, "Output directory (default: out)");
  sub->add_option("--seed", f.seed, "Base seed");
  sub->add_option("--workers", f.workers, "Worker threads (default: MIWOLS_WORKERS or all cores)")
      ->check(CLI::PositiveNumber);
  sub->add_option("--reps", f.reps, "Monte Carlo replications per scenario");
  sub->add_option("--n", f.n, "Sample size");
}

}  // namespace

std::vector<Method> selected_methods(const RunConfig& cfg) {
  std::vector<Method> out;
  for (const auto& e : cfg.estimators) {
    const std::string est = upper(e);
    if (est == "MIWOLS" || est == "MI-WOLS") {
      for (const auto& s : cfg.schemes) {
        const auto kind = parse_weight_kind(s);
        if (!kind) throw ConfigError("unknown weight scheme '" + s + "'");
        out.push_back({EstimatorKind::miwols, *kind});
      }
    } else if (est == "AIPW") {
      out.push_back({EstimatorKind::aipw, WeightKind::unw});
    } else if (est == "GEST" || est == "G-ESTIMATION") {
      out.push_back({EstimatorKind::gest, WeightKind::unw});
    } else {
      throw ConfigError("unknown estimator '" + e + "' (expected MIWOLS, AIPW or GEST)");
    }
  }
  if (out.empty()) throw ConfigError("no estimators selected");
  return out;
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Doubly robust missing-indicator weighted least squares"};
  app.name("miwols");
  app.require_subcommand(1);
  Flags f;

  auto* est = app.add_subcommand("estimate", "Fit estimators to a CSV dataset");
  add_common(est, f);
  est->add_option("--input", f.input, "Input CSV (overrides the config)");

  auto* sim = app.add_subcommand("simulate", "Run a Monte Carlo scenario grid");
  add_common(sim, f);
  sim->add_option("--preset", f.preset, "table1 or full (overrides the config)");

  auto* t1 = app.add_subcommand("replicate-table1", "Sixteen-scenario comparison grid at n = 500");
  add_common(t1, f);

  auto* t3 = app.add_subcommand("replicate-table3", "Synthetic cohort illustration");
  add_common(t3, f);
  t3->add_option("--export-cohort", f.export_cohort, "Also write the generated cohort to this CSV");

  auto* bal = app.add_subcommand("balance-check", "Balance defect of weight schemes");
  add_common(bal, f);
  bal->add_option("--input", f.input, "Optional CSV for empirical covariate balance");
  bal->add_option("--schemes", f.schemes, "Schemes to check (default: all)");
  bal->add_option("--p-bar", f.p_bar, "Treated fraction(s) for SIPW");
  bal->add_option("--grid-size", f.grid_size, "Number of propensity values in (0, 1)");

  std::vector<std::string> args;
  for (int i = argc - 1; i > 0; --i) args.emplace_back(argv[i]);
  try {
    app.parse(args);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\nrun 'miwols --help' for usage\n";
    return kExitConfig;
  }

  try {
    const json j = load_json(f.config);
    if (est->parsed()) return cmd_estimate(j, f, out);
    if (sim->parsed()) return cmd_simulate(j, f, out);
    if (t1->parsed()) return cmd_table1(j, f, out);
    if (t3->parsed()) return cmd_table3(j, f, out);
    if (bal->parsed()) return cmd_balance(j, f, out);
    return kExitConfig;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const FitFailure& e) {
    err << "error: " << e.what() << '\n';
    return kExitFit;
  } catch (const Error& e) {
    err << (e.is_fitting_error() ? "fitting error: " : "config error: ") << e.what() << '\n';
    return e.is_fitting_error() ? kExitFit : kExitConfig;
  } catch (const json::exception& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitConfig;
  }
}

}  // namespace miwols::cli
