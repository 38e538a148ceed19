#include "miwols/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

#include "miwols/error.hpp"

namespace miwols {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::invalid_input: return "invalid input";
    case ErrorCode::degenerate_column: return "degenerate column";
    case ErrorCode::rank_deficient: return "rank deficient";
    case ErrorCode::degenerate_treatment: return "degenerate treatment";
    case ErrorCode::separation: return "separation suspected";
    case ErrorCode::singular_system: return "singular system";
    case ErrorCode::non_invertible_sensitivity: return "non-invertible sensitivity";
    case ErrorCode::not_positive_semidefinite: return "not positive semidefinite";
  }
  return "unknown";
}

namespace {

[[noreturn]] void invalid(const std::string& msg) { throw Error(ErrorCode::invalid_input, msg); }

}  // namespace

void Dataset::validate() const {
  const Index n = rows();
  if (n <= 0) invalid("dataset has no rows");
  if (z.size() != n) invalid("treatment length differs from outcome length");
  if (c.rows() != n && c.cols() > 0) invalid("confounder matrix row count differs from outcome length");
  if (static_cast<Index>(c_names.size()) != c.cols()) invalid("confounder names do not match columns");
  for (Index i = 0; i < n; ++i) {
    if (!std::isfinite(y[i])) invalid("outcome has a missing or non-finite value at row " + std::to_string(i));
    if (z[i] != 0.0 && z[i] != 1.0) invalid("treatment must be 0/1, row " + std::to_string(i));
  }
  if (c.size() > 0 && !c.allFinite()) invalid("fully observed confounders contain missing values");
  for (const auto& col : x) {
    if (col.values.size() != n || col.observed.size() != n) {
      invalid("partially observed column '" + col.name + "' has the wrong length");
    }
    for (Index i = 0; i < n; ++i) {
      if (col.observed[i] && !std::isfinite(col.values[i])) {
        invalid("observed cell of '" + col.name + "' is not finite at row " + std::to_string(i));
      }
    }
  }
}

Dataset Dataset::select_rows(const std::vector<Index>& idx) const {
  Dataset out;
  const auto m = static_cast<Index>(idx.size());
  out.y.resize(m);
  out.z.resize(m);
  out.c.resize(m, c.cols());
  out.c_names = c_names;
  out.x.reserve(x.size());
  for (const auto& col : x) {
    PartialConfounder pc{col.name, Vector(m), Mask(m), col.categorical, col.levels};
    out.x.push_back(std::move(pc));
  }
  for (Index k = 0; k < m; ++k) {
    const Index i = idx[static_cast<std::size_t>(k)];
    out.y[k] = y[i];
    out.z[k] = z[i];
    if (c.cols() > 0) out.c.row(k) = c.row(i);
    for (std::size_t j = 0; j < x.size(); ++j) {
      out.x[j].values[k] = x[j].values[i];
      out.x[j].observed[k] = x[j].observed[i];
    }
  }
  return out;
}

std::optional<Index> EncodedCovariates::find(const std::string& name) const {
  auto it = std::find(names.begin(), names.end(), name);
  if (it == names.end()) return std::nullopt;
  return static_cast<Index>(it - names.begin());
}

EncodedCovariates encode_missing_indicator(const Dataset& data, double fill) {
  data.validate();
  const Index n = data.rows();

  std::vector<std::string> names = data.c_names;
  std::vector<Vector> cols;
  for (Index j = 0; j < data.c.cols(); ++j) cols.emplace_back(data.c.col(j));

  for (const auto& col : data.x) {
    if (col.observed.count() == 0) {
      throw Error(ErrorCode::degenerate_column,
                  "degenerate column: '" + col.name + "' has no observed entries");
    }
    if (!col.categorical) {
      Vector filled = col.values;
      Vector r(n);
      for (Index i = 0; i < n; ++i) {
        r[i] = col.observed[i] ? 1.0 : 0.0;
        if (!col.observed[i]) filled[i] = fill;
      }
      names.push_back(col.name);
      cols.push_back(std::move(filled));
      names.push_back("R_" + col.name);
      cols.push_back(std::move(r));
      continue;
    }

    // Categorical: reference level is the first level; "missing" is its own level.
    std::set<long> present;
    for (Index i = 0; i < n; ++i) {
      if (col.observed[i]) present.insert(std::lround(col.values[i]));
    }
    bool first = true;
    for (long code : present) {
      if (first) {
        first = false;
        continue;
      }
      Vector d(n);
      for (Index i = 0; i < n; ++i) {
        d[i] = (col.observed[i] && std::lround(col.values[i]) == code) ? 1.0 : 0.0;
      }
      const auto ucode = static_cast<std::size_t>(code);
      const std::string label =
          ucode < col.levels.size() ? col.levels[ucode] : std::to_string(code);
      names.push_back(col.name + "=" + label);
      cols.push_back(std::move(d));
    }
    Vector miss(n);
    for (Index i = 0; i < n; ++i) miss[i] = col.observed[i] ? 0.0 : 1.0;
    names.push_back(col.name + "=missing");
    cols.push_back(std::move(miss));
  }

  EncodedCovariates enc;
  enc.fill = fill;
  enc.names = std::move(names);
  enc.h.resize(n, static_cast<Index>(cols.size()));
  for (std::size_t j = 0; j < cols.size(); ++j) enc.h.col(static_cast<Index>(j)) = cols[j];
  return enc;
}

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t");
  return std::string(s.substr(b, e - b + 1));
}

bool is_intercept(const std::string& t) { return t == "intercept" || t == "1" || t == "(intercept)"; }

std::vector<std::string> split_factors(const std::string& term) {
  std::string normalized;
  // Accept U+00B7 (middle dot) as a product operator alongside '*'.
  for (std::size_t i = 0; i < term.size(); ++i) {
    if (static_cast<unsigned char>(term[i]) == 0xC2 && i + 1 < term.size() &&
        static_cast<unsigned char>(term[i + 1]) == 0xB7) {
      normalized.push_back('*');
      ++i;
    } else {
      normalized.push_back(term[i]);
    }
  }
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = normalized.find('*', start);
    out.push_back(trim(std::string_view(normalized).substr(start, pos - start)));
    if (pos == std::string::npos) break;
    start = pos + 1;
  }
  return out;
}

}  // namespace

Matrix build_term_matrix(const EncodedCovariates& encoded, const std::vector<std::string>& terms,
                         std::vector<std::string>* names_out) {
  const Index n = encoded.rows();
  std::vector<Vector> cols{Vector::Ones(n)};
  std::vector<std::string> names{"intercept"};

  auto add_term = [&](const std::string& raw) {
    const std::string term = trim(raw);
    if (term.empty()) invalid("empty model term");
    if (is_intercept(term)) return;
    if (term == "@H") {
      for (std::size_t j = 0; j < encoded.names.size(); ++j) {
        cols.emplace_back(encoded.h.col(static_cast<Index>(j)));
        names.push_back(encoded.names[j]);
      }
      return;
    }
    Vector v = Vector::Ones(n);
    std::string label;
    for (const auto& factor : split_factors(term)) {
      const auto j = encoded.find(factor);
      if (!j) invalid("unknown column '" + factor + "' in model term '" + term + "'");
      v = v.cwiseProduct(encoded.h.col(*j));
      label += (label.empty() ? "" : "*") + factor;
    }
    cols.push_back(std::move(v));
    names.push_back(label);
  };
  for (const auto& t : terms) add_term(t);

  Matrix m(n, static_cast<Index>(cols.size()));
  for (std::size_t j = 0; j < cols.size(); ++j) m.col(static_cast<Index>(j)) = cols[j];
  if (names_out) *names_out = std::move(names);
  return m;
}

void check_full_column_rank(const Matrix& m, const std::vector<std::string>& names,
                            const std::string& what) {
  if (m.cols() == 0) return;
  Eigen::ColPivHouseholderQR<Matrix> qr(m);
  qr.setThreshold(kRankTolerance);
  if (m.rows() >= m.cols() && qr.rank() == m.cols()) return;

  // Name the columns that add nothing to the span of the columns before them.
  std::vector<std::string> dependent;
  Matrix kept(m.rows(), 0);
  for (Index j = 0; j < m.cols(); ++j) {
    Matrix trial(m.rows(), kept.cols() + 1);
    trial << kept, m.col(j);
    Eigen::ColPivHouseholderQR<Matrix> q(trial);
    q.setThreshold(kRankTolerance);
    if (q.rank() == trial.cols()) {
      kept = std::move(trial);
    } else {
      dependent.push_back(j < static_cast<Index>(names.size()) ? names[static_cast<std::size_t>(j)]
                                                               : "#" + std::to_string(j));
    }
  }
  std::string list;
  for (const auto& d : dependent) list += (list.empty() ? "" : ", ") + d;
  throw Error(ErrorCode::rank_deficient,
              what + " is rank deficient; collinear columns: " + list);
}

AugmentedDesign build_design(const EncodedCovariates& encoded, const ModelSpec& spec) {
  AugmentedDesign d;
  d.encoded = encoded;
  d.h_alpha = build_term_matrix(encoded, spec.treatment_terms, &d.alpha_names);
  d.h_beta = build_term_matrix(encoded, spec.treatment_free_terms, &d.beta_names);
  d.h_psi = build_term_matrix(encoded, spec.blip_terms, &d.psi_names);
  check_full_column_rank(d.h_alpha, d.alpha_names, "treatment design");
  check_full_column_rank(d.h_beta, d.beta_names, "treatment-free design");
  check_full_column_rank(d.h_psi, d.psi_names, "blip design");
  return d;
}

// ---------------------------------------------------------------------------
// CSV

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char ch = line[i];
    if (quoted) {
      if (ch == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur.push_back(ch);
      }
    } else if (ch == '"') {
      quoted = true;
    } else if (ch == ',') {
      out.push_back(std::move(cur));
      cur.clear();
    } else {
      cur.push_back(ch);
    }
  }
  out.push_back(std::move(cur));
  return out;
}

bool next_line(std::istream& in, std::string& line) {
  if (!std::getline(in, line)) return false;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return true;
}

bool is_missing_cell(const std::string& s) { return s.empty() || s == "NA"; }

std::optional<double> parse_number(const std::string& s) {
  double v = 0.0;
  const char* b = s.data();
  const char* e = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(b, e, v);
  if (ec != std::errc() || ptr != e) return std::nullopt;
  return v;
}

}  // namespace

std::vector<std::string> read_csv_header(std::istream& in) {
  std::string line;
  if (!next_line(in, line)) invalid("CSV input is empty; a header row is required");
  // Strip a UTF-8 byte-order mark.
  if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
  auto header = split_csv_line(line);
  for (auto& h : header) h = trim(h);
  return header;
}

Dataset read_csv(std::istream& in, const ColumnRoles& roles) {
  const auto header = read_csv_header(in);
  std::map<std::string, std::size_t> index;
  for (std::size_t j = 0; j < header.size(); ++j) index[header[j]] = j;
  auto column = [&](const std::string& name) {
    auto it = index.find(name);
    if (it == index.end()) invalid("column '" + name + "' not found in CSV header");
    return it->second;
  };
  const std::size_t iy = column(roles.outcome);
  const std::size_t iz = column(roles.treatment);
  std::vector<std::size_t> ic, ix;
  for (const auto& c : roles.observed) ic.push_back(column(c));
  for (const auto& c : roles.partial) ix.push_back(column(c));
  for (const auto& c : roles.categorical) {
    if (std::find(roles.partial.begin(), roles.partial.end(), c) == roles.partial.end()) {
      invalid("categorical column '" + c + "' must also be listed as partially observed");
    }
  }

  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (next_line(in, line)) {
    if (trim(line).empty()) continue;
    auto cells = split_csv_line(line);
    if (cells.size() != header.size()) {
      invalid("CSV row " + std::to_string(rows.size() + 2) + " has " + std::to_string(cells.size()) +
              " cells, expected " + std::to_string(header.size()));
    }
    for (auto& cell : cells) cell = trim(cell);
    rows.push_back(std::move(cells));
  }
  const auto n = static_cast<Index>(rows.size());
  if (n == 0) invalid("CSV input has no data rows");

  auto numeric = [&](std::size_t r, std::size_t j, bool allow_missing) -> std::optional<double> {
    const auto& s = rows[r][j];
    if (is_missing_cell(s)) {
      if (!allow_missing) {
        invalid("column '" + header[j] + "' is missing a value at row " + std::to_string(r + 2));
      }
      return std::nullopt;
    }
    auto v = parse_number(s);
    if (!v) {
      invalid("cannot parse '" + s + "' in column '" + header[j] + "' at row " + std::to_string(r + 2));
    }
    return v;
  };

  Dataset d;
  d.y.resize(n);
  d.z.resize(n);
  d.c.resize(n, static_cast<Index>(ic.size()));
  d.c_names = roles.observed;
  for (Index i = 0; i < n; ++i) {
    const auto r = static_cast<std::size_t>(i);
    d.y[i] = *numeric(r, iy, false);
    d.z[i] = *numeric(r, iz, false);
    for (std::size_t k = 0; k < ic.size(); ++k) d.c(i, static_cast<Index>(k)) = *numeric(r, ic[k], false);
  }
  for (std::size_t k = 0; k < ix.size(); ++k) {
    const std::size_t j = ix[k];
    PartialConfounder pc;
    pc.name = roles.partial[k];
    pc.values = Vector::Zero(n);
    pc.observed = Mask::Constant(n, false);
    pc.categorical = std::find(roles.categorical.begin(), roles.categorical.end(), pc.name) !=
                     roles.categorical.end();
    if (!pc.categorical) {
      for (Index i = 0; i < n; ++i) {
        if (auto v = numeric(static_cast<std::size_t>(i), j, true)) {
          pc.values[i] = *v;
          pc.observed[i] = true;
        }
      }
    } else {
      std::vector<std::string> labels;
      bool all_numeric = true;
      for (const auto& row : rows) {
        if (is_missing_cell(row[j])) continue;
        labels.push_back(row[j]);
        if (!parse_number(row[j])) all_numeric = false;
      }
      std::sort(labels.begin(), labels.end(), [&](const std::string& a, const std::string& b) {
        if (all_numeric) return *parse_number(a) < *parse_number(b);
        return a < b;
      });
      labels.erase(std::unique(labels.begin(), labels.end()), labels.end());
      pc.levels = labels;
      for (Index i = 0; i < n; ++i) {
        const auto& s = rows[static_cast<std::size_t>(i)][j];
        if (is_missing_cell(s)) continue;
        const auto pos = std::find(labels.begin(), labels.end(), s) - labels.begin();
        pc.values[i] = static_cast<double>(pos);
        pc.observed[i] = true;
      }
    }
    d.x.push_back(std::move(pc));
  }
  d.validate();
  return d;
}

Dataset read_csv_file(const std::string& path, const ColumnRoles& roles) {
  std::ifstream in(path);
  if (!in) invalid("cannot open CSV file '" + path + "'");
  return read_csv(in, roles);
}

namespace {

std::string format_number(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

}  // namespace

void write_csv(std::ostream& out, const Dataset& data, const std::string& outcome,
               const std::string& treatment) {
  out << outcome << ',' << treatment;
  for (const auto& c : data.c_names) out << ',' << c;
  for (const auto& x : data.x) out << ',' << x.name;
  out << '\n';
  for (Index i = 0; i < data.rows(); ++i) {
    out << format_number(data.y[i]) << ',' << format_number(data.z[i]);
    for (Index j = 0; j < data.c.cols(); ++j) out << ',' << format_number(data.c(i, j));
    for (const auto& x : data.x) {
      out << ',';
      if (!x.observed[i]) {
        out << "NA";
      } else if (x.categorical && !x.levels.empty()) {
        out << x.levels[static_cast<std::size_t>(std::lround(x.values[i]))];
      } else {
        out << format_number(x.values[i]);
      }
    }
    out << '\n';
  }
}

}  // namespace miwols
