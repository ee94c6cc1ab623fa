#pragma once

// Dynamic common-correlated-effects mean-group estimation.

#include <Eigen/Dense>

#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "fiscal/error.hpp"
#include "fiscal/ols.hpp"
#include "fiscal/panel.hpp"
#include "fiscal/parallel.hpp"
#include "fiscal/regression_spec.hpp"

namespace fiscal {

enum class ColumnRole { Intercept, LaggedDependent, Regressor, Dummy, Csa };

struct DesignOptions {
  /// Average over every unit in the panel instead of the estimation group.
  bool csa_over_full_panel = false;
  /// Overrides the spec's csa_lags (used by the half-panel jackknife).
  std::optional<int> csa_lags_override;
};

/// Parts of the design shared by every unit of one regression: row window,
/// column names/roles and the common (dummy + CSA) block.
struct DesignContext {
  RegressionSpec spec;
  int csa_lags = 0;
  Eigen::Index first = 0;  // index of the first usable period
  Eigen::Index rows = 0;
  std::vector<int> years;
  std::vector<std::string> names;
  std::vector<ColumnRole> roles;
  Matrix common;
};

struct Design {
  Vector y;
  Matrix x;
  std::vector<std::string> names;
  std::vector<ColumnRole> roles;
  std::vector<int> years;
};

inline std::string csa_name(const std::string& var, int lag) { return Regressor::lagged_name("avg_" + var, lag); }

inline DesignContext make_design_context(const PanelDataset& panel, const RegressionSpec& spec,
                                         const DesignOptions& options = {}) {
  DesignContext ctx;
  ctx.spec = spec;
  ctx.csa_lags = options.csa_lags_override ? *options.csa_lags_override : spec.resolved_csa_lags(panel.n_years());
  if (ctx.csa_lags < 0) throw Error(ErrorCode::InvalidConfig, "csa_lags must be >= 0");
  const auto t_len = static_cast<Eigen::Index>(panel.n_years());
  ctx.first = std::max(spec.max_variable_lag(), ctx.csa_lags);
  ctx.rows = t_len - ctx.first;

  ctx.names.push_back("const");
  ctx.roles.push_back(ColumnRole::Intercept);
  for (int l = 1; l <= spec.lag_dependent; ++l) {
    ctx.names.push_back(Regressor::lagged_name(spec.dependent, l));
    ctx.roles.push_back(ColumnRole::LaggedDependent);
  }
  for (const auto& r : spec.regressors) {
    ctx.names.push_back(r.name());
    ctx.roles.push_back(ColumnRole::Regressor);
  }
  const auto unit_cols = static_cast<Eigen::Index>(ctx.names.size());
  if (spec.dummy_break_year) {
    ctx.names.push_back("dummy");
    ctx.roles.push_back(ColumnRole::Dummy);
  }
  const auto csa_vars = spec.csa_variables();
  for (int m = 0; m <= ctx.csa_lags; ++m)
    for (const auto& v : csa_vars) {
      ctx.names.push_back(csa_name(v, m));
      ctx.roles.push_back(ColumnRole::Csa);
    }

  const auto cols = static_cast<Eigen::Index>(ctx.names.size());
  if (ctx.rows <= cols)
    throw Error(ErrorCode::InsufficientObservations,
                std::to_string(t_len) + " periods leave " + std::to_string(std::max<Eigen::Index>(ctx.rows, 0)) +
                    " usable rows for " + std::to_string(cols) + " design columns; reduce csa_lags (currently " +
                    std::to_string(ctx.csa_lags) + ")");

  for (Eigen::Index r = 0; r < ctx.rows; ++r) ctx.years.push_back(panel.years()[static_cast<std::size_t>(ctx.first + r)]);

  ctx.common.resize(ctx.rows, cols - unit_cols);
  Eigen::Index c = 0;
  if (spec.dummy_break_year) {
    for (Eigen::Index r = 0; r < ctx.rows; ++r)
      ctx.common(r, c) = ctx.years[static_cast<std::size_t>(r)] >= *spec.dummy_break_year ? 1.0 : 0.0;
    ++c;
  }
  const auto members = options.csa_over_full_panel ? panel.unit_ids() : spec.members(panel);
  std::vector<Vector> averages;
  for (const auto& v : csa_vars) averages.push_back(cross_sectional_average(panel, v, members));
  for (int m = 0; m <= ctx.csa_lags; ++m)
    for (const auto& avg : averages) ctx.common.col(c++) = avg.segment(ctx.first - m, ctx.rows);
  return ctx;
}

inline Design build_design(const PanelDataset& panel, const DesignContext& ctx, std::size_t unit) {
  const auto& spec = ctx.spec;
  const auto i = static_cast<Eigen::Index>(unit);
  const Matrix& dep = panel.variable(spec.dependent);
  const auto cols = static_cast<Eigen::Index>(ctx.names.size());
  const Eigen::Index unit_cols = cols - ctx.common.cols();
  Design d;
  d.y.resize(ctx.rows);
  d.x.resize(ctx.rows, cols);
  for (Eigen::Index r = 0; r < ctx.rows; ++r) {
    const Eigen::Index t = ctx.first + r;
    d.y(r) = dep(i, t);
    Eigen::Index c = 0;
    d.x(r, c++) = 1.0;
    for (int l = 1; l <= spec.lag_dependent; ++l) d.x(r, c++) = dep(i, t - l);
    for (const auto& reg : spec.regressors) d.x(r, c++) = panel.variable(reg.variable)(i, t - reg.lag);
  }
  d.x.rightCols(cols - unit_cols) = ctx.common;
  d.names = ctx.names;
  d.roles = ctx.roles;
  d.years = ctx.years;
  return d;
}

/// Response, design and column names for one unit. Columns: intercept, lagged
/// dependent, regressors, dummy, then averages of the dependent and each
/// regressor variable at lags 0..csa_lags (lag-major).
inline Design build_design(const PanelDataset& panel, const RegressionSpec& spec, const std::string& unit,
                           const DesignOptions& options = {}) {
  spec.validate(panel);
  return build_design(panel, make_design_context(panel, spec, options), panel.unit_index(unit));
}

struct UnitEstimate {
  std::string unit;
  /// Retained columns only, in design order.
  std::vector<std::string> names;
  Vector coefficients;
  Vector standard_errors;
  Vector residuals;
  int dof = 0;
  std::vector<std::string> dropped;
  std::vector<std::string> warnings;

  bool has(const std::string& name) const { return index_of(name) >= 0; }
  double coefficient(const std::string& name) const { return coefficients(checked(name)); }
  double standard_error(const std::string& name) const { return standard_errors(checked(name)); }

  Eigen::Index index_of(const std::string& name) const {
    for (std::size_t k = 0; k < names.size(); ++k)
      if (names[k] == name) return static_cast<Eigen::Index>(k);
    return -1;
  }

 private:
  Eigen::Index checked(const std::string& name) const {
    const auto k = index_of(name);
    if (k < 0) throw Error(ErrorCode::UnknownVariable, "unit " + unit + " has no coefficient " + name);
    return k;
  }
};

namespace detail {

// Fits one unit without emitting warnings (they are returned for ordered output).
inline UnitEstimate fit_unit(const PanelDataset& panel, const DesignContext& ctx, std::size_t unit) {
  const auto& id = panel.unit_ids()[unit];
  const Design d = build_design(panel, ctx, unit);
  if ((d.y.array() == d.y(0)).all())
    throw Error(ErrorCode::RankDeficient, "unit " + id + ": " + ctx.spec.dependent + " has zero variance");

  LeastSquaresFit fit;
  try {
    fit = ols(d.y, d.x, d.names, RankPolicy::DropLatest);
  } catch (const Error& e) {
    throw Error(e.code(), "unit " + id + ": " + e.message());
  }
  UnitEstimate u;
  u.unit = id;
  for (auto c : fit.dropped) {
    const auto role = d.roles[static_cast<std::size_t>(c)];
    if (role != ColumnRole::Dummy && role != ColumnRole::Csa)
      throw Error(ErrorCode::RankDeficient,
                  "unit " + id + ": collinear columns: " + join_names(fit.dropped, d.names));
    u.dropped.push_back(d.names[static_cast<std::size_t>(c)]);
  }
  if (!u.dropped.empty()) {
    std::string list;
    for (const auto& n : u.dropped) list += (list.empty() ? "" : ", ") + n;
    u.warnings.push_back("unit " + id + ": dropped collinear columns " + list);
  }
  const auto k = static_cast<Eigen::Index>(fit.kept.size());
  u.coefficients.resize(k);
  u.standard_errors.resize(k);
  for (Eigen::Index j = 0; j < k; ++j) {
    const auto c = fit.kept[static_cast<std::size_t>(j)];
    u.names.push_back(d.names[static_cast<std::size_t>(c)]);
    u.coefficients(j) = fit.coefficients(c);
    u.standard_errors(j) = fit.standard_errors(c);
  }
  u.residuals = fit.residuals;
  u.dof = fit.dof;
  return u;
}

}  // namespace detail

/// OLS of one unit's equation; CSA or dummy columns that are collinear are
/// dropped (latest first) with a warning, anything else is an error.
inline UnitEstimate estimate_unit(const PanelDataset& panel, const RegressionSpec& spec, const std::string& unit,
                                  const DesignOptions& options = {}) {
  spec.validate(panel);
  auto u = detail::fit_unit(panel, make_design_context(panel, spec, options), panel.unit_index(unit));
  for (const auto& w : u.warnings) warn(w);
  return u;
}

struct MeanGroupResult {
  std::vector<UnitEstimate> units;
  std::vector<std::string> names;
  Vector mg_coefficients;
  Vector mg_se;
  bool bias_corrected = false;
  int csa_lags = 0;
  int usable_periods = 0;

  bool has(const std::string& name) const { return index_of(name) >= 0; }
  double coefficient(const std::string& name) const { return mg_coefficients(checked(name)); }
  double standard_error(const std::string& name) const { return mg_se(checked(name)); }

  Eigen::Index index_of(const std::string& name) const {
    for (std::size_t k = 0; k < names.size(); ++k)
      if (names[k] == name) return static_cast<Eigen::Index>(k);
    return -1;
  }

 private:
  Eigen::Index checked(const std::string& name) const {
    const auto k = index_of(name);
    if (k < 0) throw Error(ErrorCode::UnknownVariable, "no mean-group coefficient " + name);
    return k;
  }
};

/// Cross-unit means and sqrt(sum (theta_i - mean)^2 / (N (N-1))).
inline MeanGroupResult mean_group(std::vector<UnitEstimate> units) {
  if (units.size() < 2) throw Error(ErrorCode::TooFewUnits, "mean group needs at least 2 units");
  MeanGroupResult r;
  r.names = units.front().names;
  for (const auto& u : units)
    if (u.names != r.names)
      throw Error(ErrorCode::InconsistentCoefficientSets,
                  "unit " + u.unit + " has different coefficients than unit " + units.front().unit);
  const auto k = static_cast<Eigen::Index>(r.names.size());
  const auto n = static_cast<double>(units.size());
  r.mg_coefficients = Vector::Zero(k);
  for (const auto& u : units) r.mg_coefficients += u.coefficients;
  r.mg_coefficients /= n;
  Vector ss = Vector::Zero(k);
  for (const auto& u : units) ss += (u.coefficients - r.mg_coefficients).cwiseAbs2();
  r.mg_se = (ss / (n * (n - 1.0))).cwiseSqrt();
  r.units = std::move(units);
  return r;
}

struct DcceOptions {
  bool jackknife = false;
  bool csa_over_full_panel = false;
  /// 0 = hardware concurrency.
  unsigned threads = 1;
};

namespace detail {

// 2 * full - (first half + second half) / 2, for coefficients present in all
// three fits; the rest stay uncorrected with a warning.
inline void apply_jackknife(UnitEstimate& full, const UnitEstimate& a, const UnitEstimate& b) {
  std::vector<std::string> skipped;
  for (std::size_t k = 0; k < full.names.size(); ++k) {
    const auto& name = full.names[k];
    const auto ia = a.index_of(name), ib = b.index_of(name);
    if (ia < 0 || ib < 0) {
      skipped.push_back(name);
      continue;
    }
    const auto kk = static_cast<Eigen::Index>(k);
    full.coefficients(kk) = 2.0 * full.coefficients(kk) - 0.5 * (a.coefficients(ia) + b.coefficients(ib));
  }
  if (!skipped.empty()) {
    std::string list;
    for (const auto& n : skipped) list += (list.empty() ? "" : ", ") + n;
    full.warnings.push_back("unit " + full.unit + ": not bias-corrected (dropped in a half-panel): " + list);
  }
}

}  // namespace detail

/// Unit-by-unit DCCE fits aggregated by mean group. Any failing unit fails the
/// whole run; the error lists every failed unit.
inline MeanGroupResult estimate_dcce(const PanelDataset& panel, const RegressionSpec& spec,
                                     const DcceOptions& options = {}) {
  spec.validate(panel);
  const auto members = spec.members(panel);
  const auto idx = panel.indices_of(members);
  DesignOptions design_options{options.csa_over_full_panel, std::nullopt};
  const DesignContext ctx = make_design_context(panel, spec, design_options);

  std::optional<PanelDataset> half_a, half_b;
  std::optional<DesignContext> ctx_a, ctx_b;
  if (options.jackknife) {
    // Halves keep the full-sample lag count so the three fits share columns.
    const auto& years = panel.years();
    const std::size_t split = years.size() / 2;
    half_a = panel.slice_years(years.front(), years[split - 1]);
    half_b = panel.slice_years(years[split], years.back());
    design_options.csa_lags_override = ctx.csa_lags;
    try {
      ctx_a = make_design_context(*half_a, spec, design_options);
      ctx_b = make_design_context(*half_b, spec, design_options);
    } catch (const Error& e) {
      throw Error(e.code(), "half-panel jackknife: " + e.message());
    }
  }

  auto outcomes = parallel_map(idx.size(), options.threads, [&](std::size_t j) {
    auto u = detail::fit_unit(panel, ctx, idx[j]);
    if (options.jackknife) {
      const auto a = detail::fit_unit(*half_a, *ctx_a, idx[j]);
      const auto b = detail::fit_unit(*half_b, *ctx_b, idx[j]);
      detail::apply_jackknife(u, a, b);
    }
    return u;
  });

  std::vector<UnitEstimate> units;
  std::vector<std::string> failures;
  std::optional<ErrorCode> common_code;
  bool mixed = false;
  for (std::size_t j = 0; j < outcomes.size(); ++j) {
    if (outcomes[j].error) {
      try {
        std::rethrow_exception(outcomes[j].error);
      } catch (const Error& e) {
        failures.push_back(e.message());
        if (common_code && *common_code != e.code()) mixed = true;
        common_code = e.code();
      } catch (const std::exception& e) {
        failures.push_back("unit " + panel.unit_ids()[idx[j]] + ": " + e.what());
        mixed = true;
      }
      continue;
    }
    units.push_back(std::move(*outcomes[j].value));
  }
  if (!failures.empty()) {
    std::string msg = std::to_string(failures.size()) + " unit(s) failed: ";
    for (std::size_t f = 0; f < failures.size(); ++f) msg += (f ? "; " : "") + failures[f];
    throw Error(failures.size() == idx.size() && !mixed ? *common_code : ErrorCode::UnitFailures, msg);
  }
  for (const auto& u : units)
    for (const auto& w : u.warnings) warn(w);

  auto result = mean_group(std::move(units));
  result.bias_corrected = options.jackknife;
  result.csa_lags = ctx.csa_lags;
  result.usable_periods = static_cast<int>(ctx.rows);
  return result;
}

/// Half-panel jackknife: per unit 2 theta_full - (theta_first + theta_second) / 2,
/// halves split at floor(T/2), then averaged.
inline MeanGroupResult jackknife_correct(const PanelDataset& panel, const RegressionSpec& spec,
                                         DcceOptions options = {}) {
  options.jackknife = true;
  return estimate_dcce(panel, spec, options);
}

}  // namespace fiscal
