#include "miwols/report.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <ostream>

namespace miwols {

namespace {

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char c : s) {
    if (c == '"') q += '"';
    q += c;
  }
  return q + '"';
}

std::string opt_number(const std::optional<double>& v) { return v ? format_number(*v) : "NA"; }

std::string opt_fixed(const std::optional<double>& v, int d) { return v ? format_fixed(*v, d) : "NA"; }

std::string flags(const ScenarioConfig& c) {
  std::string s;
  s += c.msita() ? "mSITA" : "!mSITA";
  s += c.cit() ? ";CIT" : ";!CIT";
  s += c.cio() ? ";CIO" : ";!CIO";
  return s;
}

std::string check(bool ok) { return ok ? "yes" : "no"; }

// Methods shown in the Table 1 layout, in column order.
const std::vector<std::string> kBiasTags{"ABS", "IPW", "SIPW", "AIPW", "GEST"};
const std::vector<std::string> kMseTags{"ABS", "IPW", "SIPW", "AIPW"};

Index min_reps(const MetricsTable& t) {
  Index m = -1;
  for (const auto& s : t.scenarios) {
    for (const auto& r : s.rows) m = (m < 0) ? r.reps_used : std::min(m, r.reps_used);
  }
  return m;
}

Index parameter_count(const ScenarioResult& s) {
  Index np = 1;
  for (const auto& r : s.rows) np = std::max(np, r.parameter + 1);
  return np;
}

// AIPW reports a single effect, so it has no entry beyond the first parameter.
const MethodMetrics* cell(const ScenarioResult& s, const std::string& tag, Index p) {
  if (tag == "AIPW" && p > 0) return nullptr;
  return s.find(tag, p);
}

// Below this many usable replications Monte Carlo SEs are flagged as wide.
constexpr Index kWideMcReps = 500;

}  // namespace

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

void write_header(std::ostream& out, const ReportHeader& h, bool markdown) {
  char hash[17];
  std::snprintf(hash, sizeof hash, "%016llx", static_cast<unsigned long long>(h.config_hash()));
  if (markdown) {
    out << "<!-- miwols " << h.command << " config_hash=" << hash << " seed=" << h.seed << " -->\n\n";
  } else {
    out << "# miwols " << h.command << " config_hash=" << hash << " seed=" << h.seed << "\n";
  }
}

std::string format_number(double v) {
  if (!std::isfinite(v)) return "NA";
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

std::string format_fixed(double v, int decimals) {
  if (!std::isfinite(v)) return "NA";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
  std::string s = buf;
  if (s.find_first_not_of("-0.") == std::string::npos && s[0] == '-') s.erase(0, 1);
  return s;
}

void write_fits_csv(std::ostream& out, const ReportHeader& h, const std::vector<FitResult>& fits) {
  write_header(out, h, false);
  out << "estimator,scheme,parameter,estimate,se,ci_lower,ci_upper\n";
  for (const auto& f : fits) {
    for (Index k = 0; k < f.psi_hat.size(); ++k) {
      out << csv_field(f.estimator_tag) << ',' << f.scheme_tag << ','
          << csv_field(f.psi_names[static_cast<std::size_t>(k)]) << ',' << format_number(f.psi_hat[k]) << ','
          << format_number(f.se[k]) << ',' << format_number(f.ci95(k, 0)) << ',' << format_number(f.ci95(k, 1))
          << '\n';
    }
  }
}

void write_fits_markdown(std::ostream& out, const ReportHeader& h, const std::vector<FitResult>& fits) {
  write_header(out, h, true);
  out << "| Estimator | Scheme | Parameter | Estimate | SE | 95% CI |\n";
  out << "|---|---|---|---:|---:|---|\n";
  for (const auto& f : fits) {
    for (Index k = 0; k < f.psi_hat.size(); ++k) {
      out << "| " << f.estimator_tag << " | " << f.scheme_tag << " | " << f.psi_names[static_cast<std::size_t>(k)]
          << " | " << format_fixed(f.psi_hat[k], 4) << " | " << format_fixed(f.se[k], 4) << " | ["
          << format_fixed(f.ci95(k, 0), 4) << ", " << format_fixed(f.ci95(k, 1), 4) << "] |\n";
    }
  }
  for (const auto& f : fits) {
    for (const auto& d : f.diagnostics) out << "\n- " << f.scheme_tag << ": " << d;
  }
  out << '\n';
}

void write_metrics_csv(std::ostream& out, const ReportHeader& h, const MetricsTable& t) {
  write_header(out, h, false);
  out << "scenario,flags,specification,tau,lambda,gamma,delta_z,delta_y,psi0,psi1,n,valid,failures,"
         "method,parameter,truth,reps,mean,bias,ese,ase,ase_over_ese,pct_bias_over_ase,"
         "pct_bias_over_ase_mcse,coverage,mse,mse_rel_gest,mse_rel_gest_mcse\n";
  for (const auto& s : t.scenarios) {
    const auto& c = s.config;
    for (const auto& r : s.rows) {
      out << csv_field(c.label()) << ',' << flags(c) << ',' << c.specification() << ',' << format_number(c.tau)
          << ',' << format_number(c.lambda) << ',' << format_number(c.gamma) << ',' << format_number(c.delta_z)
          << ',' << format_number(c.delta_y) << ',' << format_number(c.psi0) << ',' << format_number(c.psi1) << ','
          << c.n << ',' << (s.valid ? 1 : 0) << ',' << s.failures << ',' << r.method.tag() << ','
          << csv_field(r.parameter_name) << ',' << format_number(r.truth) << ',' << r.reps_used << ','
          << format_number(r.mean) << ',' << format_number(r.bias) << ',' << opt_number(r.ese) << ','
          << format_number(r.ase) << ',' << opt_number(r.ase_over_ese) << ',' << format_number(r.pct_bias_over_ase)
          << ',' << format_number(r.pct_bias_over_ase_mcse) << ',' << format_number(r.coverage) << ','
          << format_number(r.mse) << ',' << opt_number(r.mse_relative_to_gest) << ','
          << opt_number(r.mse_relative_mcse) << '\n';
    }
  }
}

void write_metrics_markdown(std::ostream& out, const ReportHeader& h, const MetricsTable& t) {
  write_header(out, h, true);
  out << "| Scenario | Method | Parameter | Bias | %Bias/ASE | ESE | ASE | ASE/ESE | Coverage | MSE/GEST |\n";
  out << "|---|---|---|---:|---:|---:|---:|---:|---:|---:|\n";
  for (const auto& s : t.scenarios) {
    for (const auto& r : s.rows) {
      out << "| " << s.config.label() << (s.valid ? "" : " (invalid)") << " | " << r.method.tag() << " | "
          << r.parameter_name << " | " << format_fixed(r.bias, 4) << " | " << format_fixed(r.pct_bias_over_ase, 2)
          << " | " << opt_fixed(r.ese, 4) << " | " << format_fixed(r.ase, 4) << " | " << opt_fixed(r.ase_over_ese, 3)
          << " | " << format_fixed(r.coverage, 3) << " | " << opt_fixed(r.mse_relative_to_gest, 2) << " |\n";
    }
  }
}

void write_table1_csv(std::ostream& out, const ReportHeader& h, const MetricsTable& t) {
  write_header(out, h, false);
  out << "cit,cio,specification,parameter,reps";
  for (const auto& tag : kBiasTags) out << ",pct_bias_ase_" << tag << ",mcse_" << tag;
  for (const auto& tag : kMseTags) out << ",mse_rel_" << tag << ",mse_rel_mcse_" << tag;
  out << ",mc_error_flag\n";
  for (const auto& s : t.scenarios) {
    const auto& c = s.config;
    const Index np = parameter_count(s);
    for (Index p = 0; p < np; ++p) {
      const MethodMetrics* ref = s.find("GEST", p);
      out << check(c.cit()) << ',' << check(c.cio()) << ',' << c.specification() << ','
          << csv_field(ref ? ref->parameter_name : "psi") << ',' << (ref ? ref->reps_used : 0);
      for (const auto& tag : kBiasTags) {
        const auto* m = cell(s, tag, p);
        out << ',' << (m ? format_number(m->pct_bias_over_ase) : "NA") << ','
            << (m ? format_number(m->pct_bias_over_ase_mcse) : "NA");
      }
      for (const auto& tag : kMseTags) {
        const auto* m = cell(s, tag, p);
        out << ',' << (m ? opt_number(m->mse_relative_to_gest) : "NA") << ','
            << (m ? opt_number(m->mse_relative_mcse) : "NA");
      }
      out << ',' << ((ref && ref->reps_used < kWideMcReps) ? "wide" : "ok") << '\n';
    }
  }
}

void write_table1_markdown(std::ostream& out, const ReportHeader& h, const MetricsTable& t) {
  write_header(out, h, true);
  out << "| CIT | CIO | Model | Param |";
  for (const auto& tag : kBiasTags) out << " %Bias/ASE " << tag << " |";
  for (const auto& tag : kMseTags) out << " MSE/GEST " << tag << " |";
  out << "\n|---|---|---|---|";
  for (std::size_t k = 0; k < kBiasTags.size() + kMseTags.size(); ++k) out << "---:|";
  out << '\n';
  for (const auto& s : t.scenarios) {
    const auto& c = s.config;
    const Index np = parameter_count(s);
    for (Index p = 0; p < np; ++p) {
      const MethodMetrics* ref = s.find("GEST", p);
      out << "| " << (c.cit() ? "✓" : "✗") << " | " << (c.cio() ? "✓" : "✗") << " | " << c.specification()
          << " | " << (ref ? ref->parameter_name : "psi") << " |";
      for (const auto& tag : kBiasTags) {
        const auto* m = cell(s, tag, p);
        if (m) {
          out << ' ' << format_fixed(m->pct_bias_over_ase, 2) << " (" << format_fixed(m->pct_bias_over_ase_mcse, 2)
              << ") |";
        } else {
          out << " NA |";
        }
      }
      for (const auto& tag : kMseTags) {
        const auto* m = cell(s, tag, p);
        if (m && m->mse_relative_to_gest) {
          out << ' ' << format_fixed(*m->mse_relative_to_gest, 2) << " (" << opt_fixed(m->mse_relative_mcse, 2)
              << ") |";
        } else {
          out << " NA |";
        }
      }
      out << '\n';
    }
  }
  const Index m = min_reps(t);
  out << "\nMonte Carlo standard errors in parentheses; M = " << m << " replications per scenario.\n";
  if (m >= 0 && m < kWideMcReps) {
    out << "\n**Warning:** fewer than " << kWideMcReps
        << " replications per scenario; Monte Carlo error is wide and cells are not comparable to a full run.\n";
  }
}

void write_boxplot_csv(std::ostream& out, const ReportHeader& h, const MetricsTable& t) {
  write_header(out, h, false);
  out << "scenario,flags,specification,scheme,parameter,replicate,estimate\n";
  for (const auto& s : t.scenarios) {
    const std::string label = csv_field(s.config.label());
    const std::string fl = flags(s.config);
    for (std::size_t m = 0; m < s.methods.size(); ++m) {
      const std::string tag = s.methods[m].tag();
      for (std::size_t r = 0; r < s.estimates[m].size(); ++r) {
        const auto& e = s.estimates[m][r];
        if (!e) continue;
        for (Index p = 0; p < e->estimate.size(); ++p) {
          out << label << ',' << fl << ',' << s.config.specification() << ',' << tag << ',' << p << ',' << r << ','
              << format_number(e->estimate[p]) << '\n';
        }
      }
    }
  }
}

void write_illustration_csv(std::ostream& out, const ReportHeader& h, const std::vector<IllustrationRow>& rows) {
  write_header(out, h, false);
  out << "method,pi_model,y_model,estimate,bias,se,ci_lower,ci_upper\n";
  for (const auto& r : rows) {
    out << r.method << ',' << (r.pi_correct ? check(*r.pi_correct) : "NA") << ',' << check(r.y_correct) << ','
        << format_number(r.estimate) << ',' << format_number(r.bias) << ',' << format_number(r.se) << ','
        << format_number(r.ci_lower) << ',' << format_number(r.ci_upper) << '\n';
  }
}

void write_illustration_markdown(std::ostream& out, const ReportHeader& h,
                                 const std::vector<IllustrationRow>& rows, double truth) {
  write_header(out, h, true);
  out << "True effect: " << format_fixed(truth, 4) << "\n\n";
  out << "| Method | π-model | y-model | Estimate | Bias | SE | 95% CL |\n";
  out << "|---|:-:|:-:|---:|---:|---:|---|\n";
  std::string last;
  for (const auto& r : rows) {
    out << "| " << (r.method == last ? "" : r.method) << " | "
        << (r.pi_correct ? (*r.pi_correct ? "✓" : "✗") : "-") << " | " << (r.y_correct ? "✓" : "✗") << " | "
        << format_fixed(r.estimate, 3) << " | " << format_fixed(r.bias, 3) << " | " << format_fixed(r.se, 3)
        << " | [" << format_fixed(r.ci_lower, 3) << ", " << format_fixed(r.ci_upper, 3) << "] |\n";
    last = r.method;
  }
}

void write_cohort_summary_csv(std::ostream& out, const ReportHeader& h, const CohortSummary& s) {
  write_header(out, h, false);
  out << "variable,level,count,percent\n";
  out << "n,all," << s.n << ",100\n";
  out << "treated,1," << s.treated << ',' << format_number(100.0 * static_cast<double>(s.treated) / static_cast<double>(s.n))
      << '\n';
  for (const auto& r : s.rows) {
    out << csv_field(r.variable) << ',' << csv_field(r.level) << ',' << r.count << ',' << format_number(r.percent)
        << '\n';
  }
  out << "outcome,mean,NA," << format_number(s.outcome_mean) << '\n';
  out << "outcome,sd,NA," << format_number(s.outcome_sd) << '\n';
}

void write_cohort_summary_markdown(std::ostream& out, const ReportHeader& h, const CohortSummary& s) {
  write_header(out, h, true);
  out << "| Characteristic | Level | n (%) |\n|---|---|---:|\n";
  out << "| n | | " << s.n << " |\n";
  out << "| Treated | | " << s.treated << " (" << format_fixed(100.0 * static_cast<double>(s.treated) / static_cast<double>(s.n), 1)
      << ") |\n";
  out << "| Outcome, mean (SD) | | " << format_fixed(s.outcome_mean, 2) << " (" << format_fixed(s.outcome_sd, 2)
      << ") |\n";
  std::string last;
  for (const auto& r : s.rows) {
    out << "| " << (r.variable == last ? "" : r.variable) << " | " << r.level << " | " << r.count << " ("
        << format_fixed(r.percent, 1) << ") |\n";
    last = r.variable;
  }
}

std::vector<BalanceRow> balance_rows(const std::vector<WeightScheme>& schemes, const Vector& grid) {
  std::vector<BalanceRow> rows;
  for (const auto& s : schemes) {
    const BalanceReport b = check_balance(s, grid);
    rows.push_back({std::string(to_string(s.kind())), s.marginal_p().value_or(std::nan("")), b.max_abs_defect,
                    b.balanced});
  }
  return rows;
}

void write_balance_csv(std::ostream& out, const ReportHeader& h, const std::vector<BalanceRow>& rows,
                       const std::vector<CovariateBalanceRow>& covariates) {
  write_header(out, h, false);
  out << "scheme,p_bar,max_abs_defect,balanced\n";
  for (const auto& r : rows) {
    out << r.scheme << ',' << format_number(r.p_bar) << ',' << format_number(r.max_abs_defect) << ','
        << check(r.balanced) << '\n';
  }
  if (!covariates.empty()) {
    out << "\nscheme,covariate,unweighted_difference,weighted_difference\n";
    for (const auto& c : covariates) {
      out << c.scheme << ',' << csv_field(c.covariate) << ',' << format_number(c.unweighted_difference) << ','
          << format_number(c.weighted_difference) << '\n';
    }
  }
}

void write_balance_markdown(std::ostream& out, const ReportHeader& h, const std::vector<BalanceRow>& rows,
                            const std::vector<CovariateBalanceRow>& covariates) {
  write_header(out, h, true);
  out << "| Scheme | p̄ | Max abs defect | Balanced |\n|---|---:|---:|---|\n";
  for (const auto& r : rows) {
    out << "| " << r.scheme << " | " << (std::isfinite(r.p_bar) ? format_fixed(r.p_bar, 4) : "-") << " | "
        << format_fixed(r.max_abs_defect, 6) << " | " << check(r.balanced) << " |\n";
  }
  if (!covariates.empty()) {
    out << "\n| Scheme | Covariate | Unweighted diff | Weighted diff |\n|---|---|---:|---:|\n";
    for (const auto& c : covariates) {
      out << "| " << c.scheme << " | " << c.covariate << " | " << format_fixed(c.unweighted_difference, 4) << " | "
          << format_fixed(c.weighted_difference, 4) << " |\n";
    }
  }
}

}  // namespace miwols
