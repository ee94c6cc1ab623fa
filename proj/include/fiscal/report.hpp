#pragma once

// Tab-separated report tables. Every number is printed from the in-memory
// double through printf, i.e. correctly rounded at the stated digit count
// (exact ties go to even).

#include <cmath>
#include <cstdio>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "fiscal/dcce.hpp"
#include "fiscal/diagnostics.hpp"
#include "fiscal/distributions.hpp"
#include "fiscal/panel.hpp"
#include "fiscal/sustainability.hpp"

namespace fiscal::report {

/// printf-style formatting of one double.
inline std::string format(const char* fmt, double value) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), fmt, value);
  return buf;
}

/// Four significant digits, trailing zeros dropped (0.0331, 0.00809, -1.905).
inline std::string sig4(double value) {
  if (!std::isfinite(value)) return "NA";
  return format("%.4g", value);
}

inline std::string fixed4(double value) {
  if (!std::isfinite(value)) return "NA";
  return format("%.4f", value);
}

inline std::string stars_for_p(double p) {
  if (p < 0.01) return "***";
  if (p < 0.05) return "**";
  if (p < 0.10) return "*";
  return "";
}

/// Stars from the two-sided normal p-value of coef / se.
inline std::string stars(double coef, double se) {
  if (!(se > 0.0) || !std::isfinite(coef)) return "";
  return stars_for_p(dist::normal_two_sided_p(coef / se));
}

inline std::string coefficient_cell(double coef, double se) { return sig4(coef) + stars(coef, se); }
inline std::string se_cell(double se) { return "(" + sig4(se) + ")"; }

struct TableRow {
  std::string label;
  std::string coefficient;  // name in MeanGroupResult
};

struct RegressionColumn {
  std::string group;
  const MeanGroupResult* result = nullptr;
};

/// Coefficient rows with standard errors on the following line; a
/// coefficient absent from a column prints as "--".
inline std::string regression_table(const std::vector<RegressionColumn>& columns, const std::vector<TableRow>& rows) {
  std::ostringstream out;
  out << "group";
  for (const auto& c : columns) out << '\t' << c.group;
  out << "\nterm";
  for (std::size_t j = 0; j < columns.size(); ++j) out << "\t(" << j + 1 << ')';
  out << '\n';
  for (const auto& row : rows) {
    std::ostringstream se_line;
    out << row.label;
    for (const auto& c : columns) {
      if (c.result->has(row.coefficient)) {
        const double b = c.result->coefficient(row.coefficient), se = c.result->standard_error(row.coefficient);
        out << '\t' << coefficient_cell(b, se);
        se_line << '\t' << se_cell(se);
      } else {
        out << "\t--";
        se_line << "\t--";
      }
    }
    out << '\n' << se_line.str() << '\n';
  }
  out << "units";
  for (const auto& c : columns) out << '\t' << c.result->units.size();
  out << "\nperiods";
  for (const auto& c : columns) out << '\t' << c.result->usable_periods;
  out << "\ncsa_lags";
  for (const auto& c : columns) out << '\t' << c.result->csa_lags;
  out << "\njackknife";
  for (const auto& c : columns) out << '\t' << (c.result->bias_corrected ? "yes" : "no");
  out << '\n';
  return out.str();
}

/// "stat (p)"; CIPS p-values pinned at the table edges print as <0.0100 / >0.1000.
inline std::string test_cell(double statistic, std::optional<double> p, bool truncated_p = false) {
  std::string p_text = "n/a";
  if (p) {
    p_text = fixed4(*p);
    if (truncated_p && *p <= 0.01) p_text = "<0.0100";
    if (truncated_p && *p >= 0.10) p_text = ">0.1000";
  }
  return fixed4(statistic) + " (" + p_text + ")";
}

struct DiagnosticsRow {
  std::string label;
  VariableSummary summary;
  TestResult cd, cd_plus, cips;
};

/// Summary statistics and CD, CD+, CADF (Fisher combination of unit
/// statistics), CIPS per variable; slope homogeneity on the last line.
inline std::string diagnostics_table(const std::vector<DiagnosticsRow>& rows, const std::optional<TestResult>& slope) {
  std::ostringstream out;
  out << "variable\tmean\tmedian\tsd\tmin\tmax\tCD\tCD+\tCADF\tCIPS\n";
  for (const auto& r : rows) {
    out << r.label << '\t' << fixed4(r.summary.mean) << '\t' << fixed4(r.summary.median) << '\t' << fixed4(r.summary.sd)
        << '\t' << fixed4(r.summary.min) << '\t' << fixed4(r.summary.max) << '\t' << test_cell(r.cd.statistic, r.cd.p_value)
        << '\t' << test_cell(r.cd_plus.statistic, r.cd_plus.p_value) << '\t'
        << test_cell(r.cips.detail.at("fisher"), r.cips.detail.at("fisher_p")) << '\t'
        << test_cell(r.cips.statistic, r.cips.p_value, true) << '\n';
  }
  if (slope) out << "slope_homogeneity\t" << test_cell(slope->statistic, slope->p_value) << '\n';
  return out.str();
}

struct FigureSeries {
  std::string group;
  std::vector<std::string> members;
};

/// Long format: year, group, variable, mean (round-trip precision).
inline std::string figure_data(const PanelDataset& panel, const std::vector<FigureSeries>& groups,
                               const std::vector<std::string>& variables) {
  std::ostringstream out;
  out << "year\tgroup\tvariable\tmean\n";
  for (const auto& g : groups) {
    if (g.members.empty()) throw Error(ErrorCode::EmptyGroup, "figure group '" + g.group + "' has no members");
    for (const auto& v : variables) {
      const Vector avg = cross_sectional_average(panel, v, g.members);
      for (Eigen::Index t = 0; t < avg.size(); ++t)
        out << panel.years()[static_cast<std::size_t>(t)] << '\t' << g.group << '\t' << v << '\t'
            << text::format_roundtrip(avg(t)) << '\n';
    }
  }
  return out.str();
}

struct LongRunRow {
  std::string group;
  std::string regression;
  double phi = 0.0, rho = 0.0;
  std::optional<RuleResponse> response;
  std::optional<DebtPathResult> path;
  std::string note;
};

inline std::string long_run_table(const std::vector<LongRunRow>& rows) {
  std::ostringstream out;
  out << "group\tregression\tphi\trho\tlong_run\tper_10pp\tdecay_factor\tover_adjustment\tb0\tdiscounted_b_end\tverdict\tnote\n";
  for (const auto& r : rows) {
    out << r.group << '\t' << r.regression << '\t' << sig4(r.phi) << '\t' << sig4(r.rho) << '\t';
    if (r.response)
      out << sig4(r.response->value) << '\t' << sig4(10.0 * r.response->value) << '\t' << sig4(1.0 - r.response->value)
          << '\t' << (r.response->over_adjustment ? "yes" : "no");
    else
      out << "NA\tNA\tNA\tNA";
    if (r.path)
      out << '\t' << sig4(r.path->b0) << '\t' << format("%.3e", r.path->discounted_b.back()) << '\t'
          << to_string(r.path->verdict);
    else
      out << "\tNA\tNA\tNA";
    out << '\t' << (r.note.empty() ? "-" : r.note) << '\n';
  }
  return out.str();
}

}  // namespace fiscal::report
