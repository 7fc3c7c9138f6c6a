#include "mtgee/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

#include "mtgee/error.hpp"

namespace mtgee {

namespace {

constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

// Comma-separated fields; double quotes group commas.
std::vector<std::string> split_csv(std::string_view line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (char ch : line) {
    if (ch == '"') {
      quoted = !quoted;
    } else if (ch == ',' && !quoted) {
      out.push_back(trim(cur));
      cur.clear();
    } else {
      cur.push_back(ch);
    }
  }
  out.push_back(trim(cur));
  return out;
}

bool is_missing_token(const std::string& s) {
  return s.empty() || s == "NA" || s == "na" || s == "NaN" || s == "nan" || s == "null";
}

double parse_number(const std::string& s, std::size_t line, const std::string& column) {
  if (is_missing_token(s)) return kMissing;
  double v = 0.0;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  if (*first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last || !std::isfinite(v)) {
    throw ParseError("column '" + column + "': cannot parse '" + s + "' as a number", line);
  }
  return v;
}

// Numeric order when both labels are numbers, lexicographic otherwise.
bool time_less(const std::string& a, const std::string& b) {
  double x = 0.0, y = 0.0;
  const auto ra = std::from_chars(a.data(), a.data() + a.size(), x);
  const auto rb = std::from_chars(b.data(), b.data() + b.size(), y);
  if (ra.ec == std::errc() && ra.ptr == a.data() + a.size() && rb.ec == std::errc() &&
      rb.ptr == b.data() + b.size()) {
    return x < y;
  }
  return a < b;
}

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<std::size_t> line_of_row;

  std::size_t column(const std::string& name) const {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw DataError("column '" + name + "' not found in header");
    return static_cast<std::size_t>(it - header.begin());
  }
  bool has(const std::string& name) const {
    return std::find(header.begin(), header.end(), name) != header.end();
  }
};

Table read_table(std::string_view text) {
  Table t;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t nl = text.find('\n', pos);
    const std::string_view line =
        text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    if (trim(line).empty() || trim(line).front() == '#') continue;
    auto fields = split_csv(line);
    if (t.header.empty()) {
      t.header = std::move(fields);
      continue;
    }
    if (fields.size() != t.header.size()) {
      std::ostringstream os;
      os << "expected " << t.header.size() << " fields, found " << fields.size();
      throw ParseError(os.str(), line_no);
    }
    t.rows.push_back(std::move(fields));
    t.line_of_row.push_back(line_no);
  }
  if (t.header.empty()) throw DataError("input has no header row");
  return t;
}

// Nearest non-missing row at the same unit; ties go to the earlier row.
std::size_t impute_column(std::vector<double>& col, const std::string& name) {
  std::vector<std::size_t> present;
  for (std::size_t t = 0; t < col.size(); ++t) {
    if (!std::isnan(col[t])) present.push_back(t);
  }
  if (present.empty()) throw DataError("exogenous column '" + name + "' has no observed values");
  std::size_t filled = 0;
  const std::vector<double> orig = col;
  for (std::size_t t = 0; t < col.size(); ++t) {
    if (!std::isnan(orig[t])) continue;
    const auto it = std::lower_bound(present.begin(), present.end(), t);
    std::size_t best;
    if (it == present.end()) {
      best = present.back();
    } else if (it == present.begin()) {
      best = *it;
    } else {
      const std::size_t after = *it;
      const std::size_t before = *(it - 1);
      best = (t - before <= after - t) ? before : after;
    }
    col[t] = orig[best];
    ++filled;
  }
  return filled;
}

struct Columns {
  std::vector<std::string> times;
  std::vector<std::string> units;
  std::vector<std::vector<double>> response;           // [unit][t]
  std::vector<std::vector<std::vector<double>>> exog;  // [block][unit][t]
  std::vector<std::vector<std::string>> exog_names;    // [block][unit]
  std::vector<std::size_t> lines;                      // source line per t (wide) or 0
};

Columns load_wide(const Table& t, const DatasetSpec& spec) {
  Columns c;
  std::vector<std::string> resp = spec.response_cols;
  if (resp.empty()) {
    for (const auto& h : t.header) {
      if (!h.empty() && h.front() == 'y') resp.push_back(h);
    }
    if (resp.empty()) throw DataError("no response columns given and none start with 'y'");
  }
  std::vector<std::vector<std::string>> blocks;
  if (spec.exog_cols) {
    blocks = *spec.exog_cols;
  } else {
    std::vector<std::string> z;
    for (const auto& h : t.header) {
      if (!h.empty() && h.front() == 'z') z.push_back(h);
    }
    if (!z.empty()) blocks.push_back(z);
  }
  const std::size_t m = resp.size();
  for (const auto& b : blocks) {
    if (b.size() != m) {
      throw DataError("each exogenous block needs one column per unit (" + std::to_string(m) + ")");
    }
  }
  const bool has_time = t.has(spec.time_col);
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    c.times.push_back(has_time ? t.rows[r][t.column(spec.time_col)] : std::to_string(r));
    c.lines.push_back(t.line_of_row[r]);
  }
  for (std::size_t r = 1; has_time && r < c.times.size(); ++r) {
    if (!time_less(c.times[r - 1], c.times[r])) {
      throw ParseError("time '" + c.times[r] + "' does not increase", c.lines[r]);
    }
  }
  c.units = resp;
  for (const auto& name : resp) {
    const std::size_t col = t.column(name);
    std::vector<double> v;
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
      v.push_back(parse_number(t.rows[r][col], t.line_of_row[r], name));
    }
    c.response.push_back(std::move(v));
  }
  for (const auto& b : blocks) {
    std::vector<std::vector<double>> block;
    for (const auto& name : b) {
      const std::size_t col = t.column(name);
      std::vector<double> v;
      for (std::size_t r = 0; r < t.rows.size(); ++r) {
        v.push_back(parse_number(t.rows[r][col], t.line_of_row[r], name));
      }
      block.push_back(std::move(v));
    }
    c.exog.push_back(std::move(block));
    c.exog_names.push_back(b);
  }
  return c;
}

Columns load_long(const Table& t, const DatasetSpec& spec) {
  Columns c;
  const std::size_t tcol = t.column(spec.time_col);
  const std::size_t ucol = t.column(spec.unit_col);
  if (spec.response_cols.size() > 1) {
    throw DataError("long layout takes a single response variable name");
  }
  const std::string resp = spec.response_cols.empty() ? "y" : spec.response_cols.front();
  std::vector<std::string> exog_vars;
  if (spec.exog_cols) {
    for (const auto& b : *spec.exog_cols) {
      if (b.size() != 1) throw DataError("long layout takes one variable name per exogenous block");
      exog_vars.push_back(b.front());
    }
  } else if (t.has("z")) {
    exog_vars.push_back("z");
  }
  const std::size_t rcol = t.column(resp);
  std::vector<std::size_t> ecols;
  for (const auto& v : exog_vars) ecols.push_back(t.column(v));

  std::vector<std::string> times;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const std::string& tm = t.rows[r][tcol];
    if (std::find(times.begin(), times.end(), tm) == times.end()) times.push_back(tm);
    const std::string& u = t.rows[r][ucol];
    if (std::find(c.units.begin(), c.units.end(), u) == c.units.end()) c.units.push_back(u);
  }
  std::stable_sort(times.begin(), times.end(), time_less);
  // Units in numeric-else-lexicographic order, independent of row order.
  std::stable_sort(c.units.begin(), c.units.end(), time_less);
  c.times = times;
  c.lines.assign(times.size(), 0);
  std::map<std::string, std::size_t> tindex, uindex;
  for (std::size_t i = 0; i < times.size(); ++i) tindex[times[i]] = i;
  for (std::size_t j = 0; j < c.units.size(); ++j) uindex[c.units[j]] = j;

  const std::size_t T = times.size(), m = c.units.size();
  c.response.assign(m, std::vector<double>(T, kMissing));
  c.exog.assign(exog_vars.size(), std::vector<std::vector<double>>(m, std::vector<double>(T, kMissing)));
  std::vector<std::vector<bool>> seen(m, std::vector<bool>(T, false));
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const std::size_t i = tindex.at(t.rows[r][tcol]);
    const std::size_t j = uindex.at(t.rows[r][ucol]);
    if (seen[j][i]) {
      throw ParseError("duplicate (time, unit) pair", t.line_of_row[r]);
    }
    seen[j][i] = true;
    c.lines[i] = t.line_of_row[r];
    c.response[j][i] = parse_number(t.rows[r][rcol], t.line_of_row[r], resp);
    for (std::size_t b = 0; b < ecols.size(); ++b) {
      c.exog[b][j][i] = parse_number(t.rows[r][ecols[b]], t.line_of_row[r], exog_vars[b]);
    }
  }
  for (std::size_t b = 0; b < exog_vars.size(); ++b) {
    std::vector<std::string> names;
    for (const auto& u : c.units) names.push_back(exog_vars[b] + "@" + u);
    c.exog_names.push_back(names);
  }
  return c;
}

}  // namespace

Matrix Dataset::next_design(const std::optional<std::vector<Vector>>& next_exog) const {
  const std::size_t T = responses.size();
  if (T < lags) throw DataError("not enough rows to build the next design");
  const auto m = static_cast<Eigen::Index>(series.m());
  if (next_exog && next_exog->size() != exog.size()) {
    throw ContractError("next_exog must supply one vector per exogenous block");
  }
  Matrix x(m, static_cast<Eigen::Index>(series.p()));
  Eigen::Index col = 0;
  if (intercept) x.col(col++).setOnes();
  for (std::size_t l = 1; l <= lags; ++l) x.col(col++) = responses[T - l];
  for (std::size_t b = 0; b < exog.size(); ++b) {
    const Vector& z = next_exog ? (*next_exog)[b] : exog[b].back();
    if (z.size() != m) throw ContractError("next exogenous vector must have length m");
    x.col(col++) = z;
  }
  return x;
}

Dataset parse_dataset_text(std::string_view text, const DatasetSpec& spec) {
  const Table table = read_table(text);
  Columns c = spec.layout == Layout::wide ? load_wide(table, spec) : load_long(table, spec);
  const std::size_t m = c.units.size();
  const std::size_t T = c.times.size();
  if (m == 0) throw DataError("no response units");

  for (std::size_t j = 0; j < m; ++j) {
    for (std::size_t t = 0; t < T; ++t) {
      if (std::isnan(c.response[j][t])) {
        std::ostringstream os;
        os << "missing response for unit '" << c.units[j] << "' at time '" << c.times[t]
           << "'; responses are never imputed";
        throw DataError(os.str());
      }
    }
  }
  Dataset ds;
  ds.lags = spec.lags;
  ds.intercept = spec.intercept;
  ds.units = c.units;
  for (std::size_t b = 0; b < c.exog.size(); ++b) {
    for (std::size_t j = 0; j < m; ++j) {
      auto& col = c.exog[b][j];
      const bool any_missing = std::any_of(col.begin(), col.end(), [](double v) { return std::isnan(v); });
      if (!any_missing) continue;
      if (spec.impute == Impute::none) {
        throw DataError("missing value in exogenous column '" + c.exog_names[b][j] +
                        "' and imputation is disabled");
      }
      ds.imputed += impute_column(col, c.exog_names[b][j]);
    }
  }

  const std::size_t p = (spec.intercept ? 1 : 0) + spec.lags + c.exog.size();
  if (p == 0) throw DataError("design has no columns (no intercept, lags or exogenous blocks)");
  if (T <= spec.lags) {
    throw DataError("need more than " + std::to_string(spec.lags) + " rows, found " +
                    std::to_string(T));
  }
  const auto mm = static_cast<Eigen::Index>(m);
  ds.times = c.times;
  for (std::size_t t = 0; t < T; ++t) {
    Vector y(mm);
    for (std::size_t j = 0; j < m; ++j) y[static_cast<Eigen::Index>(j)] = c.response[j][t];
    ds.responses.push_back(std::move(y));
  }
  ds.exog.assign(c.exog.size(), {});
  for (std::size_t b = 0; b < c.exog.size(); ++b) {
    for (std::size_t t = 0; t < T; ++t) {
      Vector z(mm);
      for (std::size_t j = 0; j < m; ++j) z[static_cast<Eigen::Index>(j)] = c.exog[b][j][t];
      ds.exog[b].push_back(std::move(z));
    }
  }

  std::vector<TimeStep> steps;
  steps.reserve(T - spec.lags);
  for (std::size_t t = spec.lags; t < T; ++t) {
    TimeStep step;
    step.y = ds.responses[t];
    step.X.resize(mm, static_cast<Eigen::Index>(p));
    Eigen::Index col = 0;
    if (spec.intercept) step.X.col(col++).setOnes();
    for (std::size_t l = 1; l <= spec.lags; ++l) step.X.col(col++) = ds.responses[t - l];
    if (!c.exog.empty()) {
      Vector zall(static_cast<Eigen::Index>(c.exog.size()) * mm);
      for (std::size_t b = 0; b < c.exog.size(); ++b) {
        step.X.col(col++) = ds.exog[b][t];
        zall.segment(static_cast<Eigen::Index>(b) * mm, mm) = ds.exog[b][t];
      }
      step.z = std::move(zall);
    }
    steps.push_back(std::move(step));
  }
  ds.series = ClusterSeries(m, p, std::move(steps));
  return ds;
}

Dataset parse_dataset(const DatasetSpec& spec) {
  std::ifstream in(spec.path, std::ios::binary);
  if (!in) throw DataError("cannot open data file '" + spec.path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_dataset_text(buf.str(), spec);
}

std::string to_csv(const Dataset& ds) {
  std::ostringstream os;
  os << "time";
  for (const auto& u : ds.units) os << ',' << u;
  for (std::size_t b = 0; b < ds.exog.size(); ++b)
    for (const auto& u : ds.units) os << ",z" << b + 1 << '_' << u;
  os << '\n';
  char buf[32];
  auto put = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    os << ',' << buf;
  };
  for (std::size_t t = 0; t < ds.responses.size(); ++t) {
    os << ds.times[t];
    for (double v : ds.responses[t]) put(v);
    for (const auto& block : ds.exog)
      for (double v : block[t]) put(v);
    os << '\n';
  }
  return os.str();
}

}  // namespace mtgee
