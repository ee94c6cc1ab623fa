#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "fiscal/error.hpp"
#include "fiscal/text.hpp"

namespace fiscal {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Balanced N x T panel. Rows of every variable matrix follow `unit_ids()`
/// (sorted), columns follow `years()` (consecutive). Immutable once built.
class PanelDataset {
 public:
  PanelDataset() = default;

  PanelDataset(std::vector<std::string> unit_ids, std::vector<int> years,
               std::map<std::string, Matrix> variables)
      : units_(std::move(unit_ids)), years_(std::move(years)), vars_(std::move(variables)) {
    validate();
  }

  std::size_t n_units() const { return units_.size(); }
  std::size_t n_years() const { return years_.size(); }
  const std::vector<std::string>& unit_ids() const { return units_; }
  const std::vector<int>& years() const { return years_; }

  std::vector<std::string> variable_names() const {
    std::vector<std::string> names;
    for (const auto& [name, _] : vars_) names.push_back(name);
    return names;
  }

  bool has_variable(const std::string& name) const { return vars_.count(name) != 0; }

  const Matrix& variable(const std::string& name) const {
    const auto it = vars_.find(name);
    if (it == vars_.end()) throw Error(ErrorCode::UnknownVariable, "no variable '" + name + "' in panel");
    return it->second;
  }

  Vector series(const std::string& name, std::size_t unit) const { return variable(name).row(static_cast<Eigen::Index>(unit)).transpose(); }

  std::size_t unit_index(const std::string& id) const {
    const auto it = std::lower_bound(units_.begin(), units_.end(), id);
    if (it == units_.end() || *it != id) throw Error(ErrorCode::UnknownVariable, "no unit '" + id + "' in panel");
    return static_cast<std::size_t>(it - units_.begin());
  }

  bool has_unit(const std::string& id) const { return std::binary_search(units_.begin(), units_.end(), id); }

  std::size_t year_index(int year) const {
    if (years_.empty() || year < years_.front() || year > years_.back())
      throw Error(ErrorCode::InvalidConfig, "year " + std::to_string(year) + " outside panel coverage");
    return static_cast<std::size_t>(year - years_.front());
  }

  /// Canonical (sorted, de-duplicated) row indices of `members`.
  std::vector<std::size_t> indices_of(const std::vector<std::string>& members) const {
    std::vector<std::size_t> idx;
    idx.reserve(members.size());
    for (const auto& m : members) idx.push_back(unit_index(m));
    std::sort(idx.begin(), idx.end());
    idx.erase(std::unique(idx.begin(), idx.end()), idx.end());
    return idx;
  }

  PanelDataset with_variable(const std::string& name, Matrix values) const {
    auto vars = vars_;
    vars[name] = std::move(values);
    return PanelDataset(units_, years_, std::move(vars));
  }

  PanelDataset subset(const std::vector<std::string>& members) const {
    const auto idx = indices_of(members);
    if (idx.empty()) throw Error(ErrorCode::EmptyGroup, "subset has no members");
    std::vector<std::string> ids;
    for (auto i : idx) ids.push_back(units_[i]);
    std::map<std::string, Matrix> vars;
    for (const auto& [name, m] : vars_) {
      Matrix sub(static_cast<Eigen::Index>(idx.size()), m.cols());
      for (std::size_t r = 0; r < idx.size(); ++r) sub.row(static_cast<Eigen::Index>(r)) = m.row(static_cast<Eigen::Index>(idx[r]));
      vars.emplace(name, std::move(sub));
    }
    return PanelDataset(std::move(ids), years_, std::move(vars));
  }

  /// Years in [first, last], inclusive.
  PanelDataset slice_years(int first, int last) const {
    if (first > last || first < years_.front() || last > years_.back())
      throw Error(ErrorCode::InvalidConfig, "year slice outside panel coverage");
    const auto c0 = static_cast<Eigen::Index>(first - years_.front());
    const auto n = static_cast<Eigen::Index>(last - first + 1);
    std::vector<int> ys;
    for (int y = first; y <= last; ++y) ys.push_back(y);
    std::map<std::string, Matrix> vars;
    for (const auto& [name, m] : vars_) vars.emplace(name, m.middleCols(c0, n));
    return PanelDataset(units_, std::move(ys), std::move(vars));
  }

  bool operator==(const PanelDataset& other) const {
    if (units_ != other.units_ || years_ != other.years_ || vars_.size() != other.vars_.size()) return false;
    for (const auto& [name, m] : vars_) {
      const auto it = other.vars_.find(name);
      if (it == other.vars_.end() || m.rows() != it->second.rows() || m.cols() != it->second.cols()) return false;
      for (Eigen::Index i = 0; i < m.size(); ++i)
        if (m.data()[i] != it->second.data()[i]) return false;
    }
    return true;
  }

 private:
  void validate() const {
    if (!std::is_sorted(units_.begin(), units_.end()) ||
        std::adjacent_find(units_.begin(), units_.end()) != units_.end())
      throw Error(ErrorCode::DuplicateRow, "unit ids must be unique and sorted");
    for (std::size_t t = 1; t < years_.size(); ++t)
      if (years_[t] != years_[t - 1] + 1) throw Error(ErrorCode::MissingCell, "years are not consecutive");
    for (const auto& [name, m] : vars_) {
      if (m.rows() != static_cast<Eigen::Index>(units_.size()) || m.cols() != static_cast<Eigen::Index>(years_.size()))
        throw Error(ErrorCode::MissingCell, "variable '" + name + "' is not N x T");
    }
  }

  std::vector<std::string> units_;
  std::vector<int> years_;
  std::map<std::string, Matrix> vars_;
};

struct GroupSplit {
  std::string label;
  std::vector<std::string> members;
};

struct VariableSummary {
  double mean = 0.0;
  double median = 0.0;
  double sd = 0.0;
  double min = 0.0;
  double max = 0.0;
};

/// Column mapping for delimited panel files.
struct TableSchema {
  char delimiter = ',';
  std::string unit_column = "country";
  std::string year_column = "year";
  /// Columns to load; empty loads every non-key column.
  std::vector<std::string> variables;
  std::optional<int> first_year;
  std::optional<int> last_year;
  /// Drop units with holes (with a warning) instead of failing.
  bool drop_incomplete = false;
};

namespace detail {

inline bool is_missing_token(std::string_view s) {
  s = text::trim(s);
  return s.empty() || s == "NA" || s == "NaN" || s == "nan" || s == ".";
}

}  // namespace detail

inline PanelDataset parse_table(std::istream& in, const TableSchema& schema, const std::string& source = "<stream>") {
  std::string line;
  std::vector<std::string> header;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!text::trim(line).empty()) {
      header = text::split_fields(line, schema.delimiter);
      break;
    }
  }
  if (header.empty()) throw Error(ErrorCode::EmptyFile, source + " has no header row");

  auto column_of = [&](const std::string& name) -> std::size_t {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw Error(ErrorCode::UnknownVariable, source + ": missing column '" + name + "'");
    return static_cast<std::size_t>(it - header.begin());
  };
  const std::size_t unit_col = column_of(schema.unit_column);
  const std::size_t year_col = column_of(schema.year_column);

  std::vector<std::string> var_names = schema.variables;
  if (var_names.empty()) {
    for (std::size_t c = 0; c < header.size(); ++c)
      if (c != unit_col && c != year_col) var_names.push_back(header[c]);
  }
  std::vector<std::size_t> var_cols;
  for (const auto& v : var_names) var_cols.push_back(column_of(v));

  // (unit, year) -> values; NaN marks an empty cell.
  std::map<std::pair<std::string, int>, std::vector<double>> cells;
  std::size_t data_rows = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    const auto fields = text::split_fields(line, schema.delimiter);
    const auto where = source + " line " + std::to_string(line_no);
    if (fields.size() != header.size())
      throw Error(ErrorCode::UnparsableNumber, where + ": expected " + std::to_string(header.size()) + " fields, got " +
                                                   std::to_string(fields.size()));
    const auto year = text::parse_int(fields[year_col]);
    if (!year) throw Error(ErrorCode::UnparsableNumber, where + ", column '" + schema.year_column + "': '" + fields[year_col] + "'");
    const int y = static_cast<int>(*year);
    if ((schema.first_year && y < *schema.first_year) || (schema.last_year && y > *schema.last_year)) continue;
    const std::string& unit = fields[unit_col];
    if (unit.empty()) throw Error(ErrorCode::UnparsableNumber, where + ": empty unit identifier");

    std::vector<double> values;
    for (std::size_t k = 0; k < var_cols.size(); ++k) {
      const auto& raw = fields[var_cols[k]];
      if (detail::is_missing_token(raw)) {
        values.push_back(std::nan(""));
        continue;
      }
      const auto v = text::parse_double(raw);
      if (!v || !std::isfinite(*v))
        throw Error(ErrorCode::UnparsableNumber, where + ", column '" + var_names[k] + "': '" + raw + "'");
      values.push_back(*v);
    }
    if (!cells.emplace(std::make_pair(unit, y), std::move(values)).second)
      throw Error(ErrorCode::DuplicateRow, where + ": duplicate row for " + unit + " " + std::to_string(y));
    ++data_rows;
  }
  if (data_rows == 0) throw Error(ErrorCode::EmptyFile, source + " has no data rows");

  std::set<std::string> unit_set;
  int y_min = cells.begin()->first.second, y_max = y_min;
  for (const auto& [key, _] : cells) {
    unit_set.insert(key.first);
    y_min = std::min(y_min, key.second);
    y_max = std::max(y_max, key.second);
  }
  if (schema.first_year) y_min = *schema.first_year;
  if (schema.last_year) y_max = *schema.last_year;

  std::vector<std::string> units;
  for (const auto& u : unit_set) {
    std::optional<std::string> hole;
    for (int y = y_min; y <= y_max && !hole; ++y) {
      const auto it = cells.find({u, y});
      if (it == cells.end()) {
        hole = u + " " + std::to_string(y);
      } else {
        for (std::size_t k = 0; k < var_names.size(); ++k)
          if (std::isnan(it->second[k])) {
            hole = u + " " + std::to_string(y) + " (" + var_names[k] + ")";
            break;
          }
      }
    }
    if (hole) {
      if (!schema.drop_incomplete) throw Error(ErrorCode::MissingCell, source + ": no observation for " + *hole);
      warn("dropping incomplete unit " + u + ": no observation for " + *hole);
      continue;
    }
    units.push_back(u);
  }
  if (units.empty()) throw Error(ErrorCode::EmptyFile, source + ": no complete units");

  std::vector<int> years;
  for (int y = y_min; y <= y_max; ++y) years.push_back(y);
  std::map<std::string, Matrix> vars;
  for (std::size_t k = 0; k < var_names.size(); ++k) {
    Matrix m(static_cast<Eigen::Index>(units.size()), static_cast<Eigen::Index>(years.size()));
    for (std::size_t i = 0; i < units.size(); ++i)
      for (std::size_t t = 0; t < years.size(); ++t)
        m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(t)) = cells.at({units[i], years[t]})[k];
    vars.emplace(var_names[k], std::move(m));
  }
  return PanelDataset(std::move(units), std::move(years), std::move(vars));
}

inline PanelDataset ingest_table(const std::string& path, const TableSchema& schema) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open '" + path + "'");
  return parse_table(in, schema, path);
}

/// Writes the panel in the same delimited layout `parse_table` reads, with
/// values at round-trip precision.
inline void write_table(const PanelDataset& panel, std::ostream& out, char delimiter = ',',
                        const std::string& unit_column = "country", const std::string& year_column = "year") {
  const auto names = panel.variable_names();
  out << unit_column << delimiter << year_column;
  for (const auto& n : names) out << delimiter << text::quote_if_needed(n, delimiter);
  out << '\n';
  for (std::size_t i = 0; i < panel.n_units(); ++i) {
    for (std::size_t t = 0; t < panel.n_years(); ++t) {
      out << text::quote_if_needed(panel.unit_ids()[i], delimiter) << delimiter << panel.years()[t];
      for (const auto& n : names)
        out << delimiter << text::format_roundtrip(panel.variable(n)(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(t)));
      out << '\n';
    }
  }
}

/// Median with the average-of-middle-pair convention for even counts.
inline double median(std::vector<double> values) {
  if (values.empty()) throw Error(ErrorCode::EmptyGroup, "median of empty set");
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  if (n % 2 == 1) return values[n / 2];
  return 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

/// Units whose time-median of `debt_var` lies strictly above the
/// cross-unit median go to `high`; the rest go to `low`.
inline std::pair<GroupSplit, GroupSplit> median_debt_split(const PanelDataset& panel, const std::string& debt_var) {
  const Matrix& debt = panel.variable(debt_var);
  std::vector<double> unit_medians;
  for (Eigen::Index i = 0; i < debt.rows(); ++i) {
    std::vector<double> row(static_cast<std::size_t>(debt.cols()));
    for (Eigen::Index t = 0; t < debt.cols(); ++t) row[static_cast<std::size_t>(t)] = debt(i, t);
    unit_medians.push_back(median(std::move(row)));
  }
  const double cut = median(unit_medians);
  GroupSplit high{"high_debt", {}}, low{"low_debt", {}};
  for (std::size_t i = 0; i < unit_medians.size(); ++i)
    (unit_medians[i] > cut ? high : low).members.push_back(panel.unit_ids()[i]);
  if (high.members.empty() || low.members.empty())
    throw Error(ErrorCode::DegenerateSplit, "no unit has median " + debt_var + " strictly above the cross-unit median");
  return {high, low};
}

/// Per-year arithmetic mean over `members`, summed in canonical unit order.
inline Vector cross_sectional_average(const PanelDataset& panel, const std::string& var,
                                      const std::vector<std::string>& members) {
  const Matrix& m = panel.variable(var);
  if (members.empty()) throw Error(ErrorCode::EmptyGroup, "cross-sectional average over an empty group");
  const auto idx = panel.indices_of(members);
  Vector avg = Vector::Zero(m.cols());
  for (auto i : idx) avg += m.row(static_cast<Eigen::Index>(i)).transpose();
  return avg / static_cast<double>(idx.size());
}

inline Vector cross_sectional_average(const PanelDataset& panel, const std::string& var) {
  return cross_sectional_average(panel, var, panel.unit_ids());
}

/// Pooled summary over all N*T cells.
inline VariableSummary summarize(const PanelDataset& panel, const std::string& var) {
  const Matrix& m = panel.variable(var);
  std::vector<double> all;
  all.reserve(static_cast<std::size_t>(m.size()));
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index t = 0; t < m.cols(); ++t) all.push_back(m(i, t));
  VariableSummary s;
  const double n = static_cast<double>(all.size());
  double sum = 0.0;
  for (double v : all) sum += v;
  s.mean = sum / n;
  double ss = 0.0;
  for (double v : all) ss += (v - s.mean) * (v - s.mean);
  s.sd = all.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
  s.min = *std::min_element(all.begin(), all.end());
  s.max = *std::max_element(all.begin(), all.end());
  s.median = median(std::move(all));
  return s;
}

}  // namespace fiscal
