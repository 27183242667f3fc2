#include "zipem/panel_io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <map>
#include <set>
#include <sstream>

#include "zipem/csv.hpp"

namespace zipem {

namespace {

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t");
  return s.substr(a, b - a + 1);
}

template <typename T>
bool parse_number(const std::string& s, T& out) {
  const char* first = s.data();
  const char* last = s.data() + s.size();
  if (first != last && *first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc() && ptr == last && first != last;
}

// Blank -> nullopt; otherwise a nonnegative integer count.
std::optional<int> parse_count(const std::string& raw, std::size_t line, const std::string& column) {
  const std::string s = trim(raw);
  if (s.empty()) return std::nullopt;
  long v = 0;
  if (!parse_number(s, v)) throw ParseError("malformed count '" + s + "' in column " + column, line);
  if (v < 0) throw ParseError("negative count in column " + column, line);
  if (v > 1000000000L) throw ParseError("count too large in column " + column, line);
  return int(v);
}

long parse_label(const std::string& raw, std::size_t line, const std::string& column) {
  const std::string s = trim(raw);
  long v = 0;
  if (!parse_number(s, v)) throw ParseError("malformed integer '" + s + "' in column " + column, line);
  return v;
}

double parse_real(const std::string& raw, std::size_t line, const std::string& column) {
  const std::string s = trim(raw);
  double v = 0;
  if (!parse_number(s, v) || !std::isfinite(v))
    throw ParseError("malformed number '" + s + "' in column " + column, line);
  return v;
}

void check_width(const CsvRecord& r, std::size_t expected) {
  if (r.fields.size() != expected)
    throw ParseError("expected " + std::to_string(expected) + " fields, found " +
                         std::to_string(r.fields.size()),
                     r.line);
}

}  // namespace

PanelFormat panel_format_from_string(const std::string& s) {
  if (s == "auto") return PanelFormat::automatic;
  if (s == "wide") return PanelFormat::wide;
  if (s == "long") return PanelFormat::long_;
  throw ArgumentError("unknown panel format '" + s + "' (expected auto, wide or long)");
}

const char* to_string(PanelFormat f) {
  switch (f) {
    case PanelFormat::automatic: return "auto";
    case PanelFormat::wide: return "wide";
    case PanelFormat::long_: return "long";
  }
  return "auto";
}

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

PanelData read_wide(std::string_view text, const TreatmentDesign& design) {
  const auto records = parse_csv(text);
  if (records.empty()) throw ParseError("empty file", 0);
  const CsvRecord& header = records.front();
  std::optional<std::size_t> treat_col;
  std::vector<std::size_t> week_cols;
  for (std::size_t j = 0; j < header.fields.size(); ++j) {
    const std::string name = trim(header.fields[j]);
    if (name == "Treat") {
      if (treat_col) throw ParseError("duplicate Treat column", header.line);
      treat_col = j;
    } else if (name == "We" + std::to_string(week_cols.size() + 1)) {
      week_cols.push_back(j);
    } else {
      throw ParseError("unexpected column '" + name + "' (expected We" +
                           std::to_string(week_cols.size() + 1) + " or Treat)",
                       header.line);
    }
  }
  if (!treat_col) throw ParseError("missing Treat column", header.line);
  if (week_cols.empty()) throw ParseError("no We1..WeT response columns", header.line);
  if (records.size() < 2) throw ParseError("no data rows", header.line);

  const Index n = Index(records.size() - 1), T = Index(week_cols.size());
  Eigen::MatrixXi y = Eigen::MatrixXi::Zero(n, T);
  BoolGrid observed = BoolGrid::Constant(n, T, false);
  std::vector<long> group;
  for (Index i = 0; i < n; ++i) {
    const CsvRecord& r = records[std::size_t(i + 1)];
    check_width(r, header.fields.size());
    for (Index t = 0; t < T; ++t) {
      const auto v = parse_count(r.fields[week_cols[std::size_t(t)]], r.line, "We" + std::to_string(t + 1));
      if (v) {
        y(i, t) = *v;
        observed(i, t) = true;
      }
    }
    const std::string code = trim(r.fields[*treat_col]);
    if (code.empty()) throw ParseError("blank Treat code", r.line);
    group.push_back(parse_label(code, r.line, "Treat"));
  }
  return treatment_panel(std::move(y), std::move(observed), std::move(group), design);
}

PanelData read_long(std::string_view text, const TreatmentDesign& design) {
  const auto records = parse_csv(text);
  if (records.empty()) throw ParseError("empty file", 0);
  const CsvRecord& header = records.front();
  if (header.fields.size() < 3 || trim(header.fields[0]) != "unit" || trim(header.fields[1]) != "time" ||
      trim(header.fields[2]) != "y")
    throw ParseError("long format header must start with unit,time,y", header.line);
  std::vector<std::string> covs;
  for (std::size_t j = 3; j < header.fields.size(); ++j) {
    const std::string name = trim(header.fields[j]);
    if (name.empty() || name == "t" || name == "(Intercept)" ||
        std::find(covs.begin(), covs.end(), name) != covs.end())
      throw ParseError("invalid or duplicate covariate name '" + name + "'", header.line);
    covs.push_back(name);
  }
  if (records.size() < 2) throw ParseError("no data rows", header.line);

  struct Row {
    std::optional<int> y;
    std::vector<double> x;
  };
  std::map<std::pair<long, long>, Row> cells;
  std::set<long> unit_set, time_set;
  for (std::size_t k = 1; k < records.size(); ++k) {
    const CsvRecord& r = records[k];
    check_width(r, header.fields.size());
    const long u = parse_label(r.fields[0], r.line, "unit");
    const long t = parse_label(r.fields[1], r.line, "time");
    Row row;
    row.y = parse_count(r.fields[2], r.line, "y");
    for (std::size_t j = 0; j < covs.size(); ++j) row.x.push_back(parse_real(r.fields[3 + j], r.line, covs[j]));
    if (!cells.emplace(std::make_pair(u, t), std::move(row)).second)
      throw ParseError("duplicate row for unit " + std::to_string(u) + " at time " + std::to_string(t), r.line);
    unit_set.insert(u);
    time_set.insert(t);
  }

  PanelData p;
  p.unit_ids.assign(unit_set.begin(), unit_set.end());
  p.time_ids.assign(time_set.begin(), time_set.end());
  const Index n = Index(p.unit_ids.size()), T = Index(p.time_ids.size());
  p.x_names = {"(Intercept)"};
  p.x_names.insert(p.x_names.end(), covs.begin(), covs.end());
  if (design.time_trend) p.x_names.push_back("t");
  p.z_names = design.zero_part_covariates ? p.x_names : std::vector<std::string>{"(Intercept)"};
  p.y = Eigen::MatrixXi::Zero(n, T);
  p.observed = BoolGrid::Constant(n, T, false);
  for (Index t = 0; t < T; ++t) {
    Eigen::MatrixXd bx = Eigen::MatrixXd::Zero(n, Index(p.x_names.size()));
    bx.col(0).setOnes();
    for (Index i = 0; i < n; ++i) {
      const auto it = cells.find({p.unit_ids[std::size_t(i)], p.time_ids[std::size_t(t)]});
      if (it == cells.end()) {
        if (!covs.empty())
          throw ParseError("no row for unit " + std::to_string(p.unit_ids[std::size_t(i)]) + " at time " +
                               std::to_string(p.time_ids[std::size_t(t)]),
                           0);
      } else {
        if (it->second.y) {
          p.y(i, t) = *it->second.y;
          p.observed(i, t) = true;
        }
        for (std::size_t j = 0; j < covs.size(); ++j) bx(i, Index(j) + 1) = it->second.x[j];
      }
      if (design.time_trend) bx(i, bx.cols() - 1) = double(t + 1);
    }
    p.base_z.push_back(design.zero_part_covariates ? bx : Eigen::MatrixXd::Ones(n, 1));
    p.base_x.push_back(std::move(bx));
  }
  p.validate();
  return p;
}

PanelFormat detect_format(std::string_view text) {
  const auto nl = text.find('\n');
  std::string head(text.substr(0, nl));
  if (!head.empty() && head.back() == '\r') head.pop_back();
  return head.rfind("unit,time,y", 0) == 0 ? PanelFormat::long_ : PanelFormat::wide;
}

PanelData read_panel_text(std::string_view text, PanelFormat format, const TreatmentDesign& design) {
  if (format == PanelFormat::automatic) format = detect_format(text);
  return format == PanelFormat::long_ ? read_long(text, design) : read_wide(text, design);
}

PanelData read_panel(const std::string& path, PanelFormat format, const TreatmentDesign& design) {
  return read_panel_text(read_file(path), format, design);
}

long unit_label(const PanelData& panel, Index row) {
  return panel.unit_ids.empty() ? long(row + 1) : panel.unit_ids[std::size_t(row)];
}

long time_label(const PanelData& panel, Index t) {
  return panel.time_ids.empty() ? long(t + 1) : panel.time_ids[std::size_t(t)];
}

std::string write_wide(const PanelData& panel) {
  if (Index(panel.group.size()) != panel.units())
    throw ArgumentError("write_wide: panel has no treatment codes");
  std::ostringstream out;
  std::vector<std::string> row;
  for (Index t = 0; t < panel.times(); ++t) row.push_back("We" + std::to_string(t + 1));
  row.push_back("Treat");
  write_csv_row(out, row);
  for (Index i = 0; i < panel.units(); ++i) {
    row.clear();
    for (Index t = 0; t < panel.times(); ++t)
      row.push_back(panel.observed(i, t) ? std::to_string(panel.y(i, t)) : "");
    row.push_back(std::to_string(panel.group[std::size_t(i)]));
    write_csv_row(out, row);
  }
  return out.str();
}

std::string write_long(const PanelData& panel) {
  std::vector<Index> cov_cols;
  std::vector<std::string> row{"unit", "time", "y"};
  for (std::size_t j = 0; j < panel.x_names.size(); ++j) {
    if (panel.x_names[j] == "(Intercept)" || panel.x_names[j] == "t") continue;
    cov_cols.push_back(Index(j));
    row.push_back(panel.x_names[j]);
  }
  std::ostringstream out;
  write_csv_row(out, row);
  for (Index i = 0; i < panel.units(); ++i) {
    for (Index t = 0; t < panel.times(); ++t) {
      row = {std::to_string(unit_label(panel, i)), std::to_string(time_label(panel, t)),
             panel.observed(i, t) ? std::to_string(panel.y(i, t)) : ""};
      for (Index j : cov_cols) row.push_back(format_double(panel.base_x[std::size_t(t)](i, j)));
      write_csv_row(out, row);
    }
  }
  return out.str();
}

std::string write_trace(const PanelData& panel, const std::vector<ImputationDecision>& trace) {
  std::ostringstream out;
  write_csv_row(out, {"unit", "time", "pi_hat", "lambda_hat", "p0", "imputed"});
  for (const auto& d : trace) {
    Index row = d.unit;
    if (!panel.unit_ids.empty()) {
      const auto it = std::find(panel.unit_ids.begin(), panel.unit_ids.end(), long(d.unit));
      row = Index(it - panel.unit_ids.begin());
    }
    write_csv_row(out, {std::to_string(unit_label(panel, row)), std::to_string(time_label(panel, d.time)),
                        format_double(d.pi_hat), format_double(d.lambda_hat), format_double(d.p0),
                        std::to_string(d.imputed)});
  }
  return out.str();
}

}  // namespace zipem
