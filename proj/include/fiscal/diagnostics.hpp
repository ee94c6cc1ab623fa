#pragma once

// Pre-estimation diagnostics: cross-sectional dependence (CD, CD+), panel unit
// roots (CADF / CIPS) and HAC-robust slope homogeneity.

#include <Eigen/Dense>

#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "fiscal/distributions.hpp"
#include "fiscal/ols.hpp"
#include "fiscal/panel.hpp"
#include "fiscal/regression_spec.hpp"

namespace fiscal {

struct TestResult {
  double statistic = 0.0;
  /// Unset when the statistic falls outside tabulated cases.
  std::optional<double> p_value;
  std::map<std::string, double> detail;
  /// Per-unit auxiliary values (e.g. CADF t-statistics), keyed by unit id.
  std::map<std::string, double> unit_statistics;
};

// ---------------------------------------------------------------------------
// Cross-sectional dependence

/// N x N matrix of pairwise time-series correlations of `var`.
inline Matrix pairwise_correlations(const PanelDataset& panel, const std::string& var) {
  const Matrix& m = panel.variable(var);
  const Eigen::Index n = m.rows();
  Matrix centered = m.colwise() - m.rowwise().mean();
  Vector ss(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    ss(i) = centered.row(i).squaredNorm();
    if (!(ss(i) > 0.0))
      throw Error(ErrorCode::ZeroVariance, "unit " + panel.unit_ids()[static_cast<std::size_t>(i)] + " has zero variance in " + var);
  }
  Matrix rho = Matrix::Identity(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i + 1; j < n; ++j) {
      double r = centered.row(i).dot(centered.row(j)) / std::sqrt(ss(i) * ss(j));
      r = std::clamp(r, -1.0, 1.0);
      rho(i, j) = rho(j, i) = r;
    }
  return rho;
}

/// CD = sqrt(2T / (N(N-1))) * sum_{i<j} rho_ij, two-sided normal p-value.
inline TestResult cd_test(const PanelDataset& panel, const std::string& var) {
  const auto n = static_cast<double>(panel.n_units());
  const auto t = static_cast<double>(panel.n_years());
  if (panel.n_units() < 2) throw Error(ErrorCode::TooFewUnits, "CD test needs at least 2 units");
  const Matrix rho = pairwise_correlations(panel, var);
  double sum = 0.0;
  for (Eigen::Index i = 0; i < rho.rows(); ++i)
    for (Eigen::Index j = i + 1; j < rho.cols(); ++j) sum += rho(i, j);
  const double pairs = n * (n - 1.0) / 2.0;
  TestResult r;
  r.statistic = std::sqrt(2.0 * t / (n * (n - 1.0))) * sum;
  r.p_value = dist::normal_two_sided_p(r.statistic);
  r.detail["mean_rho"] = sum / pairs;
  r.detail["pairs"] = pairs;
  return r;
}

struct CdPlusOptions {
  /// Screening threshold is threshold_constant * sqrt(log N / T).
  double threshold_constant = 2.0;
};

/// Power-enhanced CD test: J1 + J0 with J1 the standardised sum of squared
/// correlations and J0 = sum |rho_ij| over pairs with |rho_ij| above the
/// screening threshold.
inline TestResult cd_plus_test(const PanelDataset& panel, const std::string& var, const CdPlusOptions& options = {}) {
  if (panel.n_units() < 2) throw Error(ErrorCode::TooFewUnits, "CD+ test needs at least 2 units");
  const auto n = static_cast<double>(panel.n_units());
  const auto t = static_cast<double>(panel.n_years());
  if (t < 4) throw Error(ErrorCode::SeriesTooShort, "CD+ test needs T >= 4");
  const Matrix rho = pairwise_correlations(panel, var);
  const double delta = options.threshold_constant * std::sqrt(std::log(n) / t);

  // Exact null moments of rho^2 for independent Gaussian series:
  // rho^2 ~ Beta(1/2, (T-2)/2).
  const double mean_sq = 1.0 / (t - 1.0);
  const double var_sq = 2.0 * (t - 2.0) / ((t - 1.0) * (t - 1.0) * (t + 1.0));
  double sum_sq = 0.0, j0 = 0.0;
  int screened = 0;
  for (Eigen::Index i = 0; i < rho.rows(); ++i)
    for (Eigen::Index j = i + 1; j < rho.cols(); ++j) {
      const double r = rho(i, j);
      sum_sq += r * r - mean_sq;
      if (std::fabs(r) > delta) {
        j0 += std::fabs(r);
        ++screened;
      }
    }
  const double pairs = n * (n - 1.0) / 2.0;
  const double j1 = sum_sq / std::sqrt(pairs * var_sq);
  TestResult r;
  r.statistic = j1 + j0;
  r.p_value = dist::normal_upper_tail(r.statistic);
  r.detail["J1"] = j1;
  r.detail["J0"] = j0;
  r.detail["screened_pairs"] = screened;
  r.detail["threshold"] = delta;
  return r;
}

// ---------------------------------------------------------------------------
// Unit roots

struct CadfOptions {
  bool trend = false;
};

/// t-statistic on b in
///   dy_t = a + b y_{t-1} + c ybar_{t-1} + d dybar_t (+ e t) + error.
inline double cadf_stat(const Vector& y, const Vector& ybar, const CadfOptions& options = {}) {
  const Eigen::Index t_len = y.size();
  if (ybar.size() != t_len) throw Error(ErrorCode::SeriesTooShort, "series and cross-sectional average lengths differ");
  if (t_len < 8) throw Error(ErrorCode::SeriesTooShort, "CADF regression needs T >= 8, got " + std::to_string(t_len));
  if ((y.array() == y(0)).all()) throw Error(ErrorCode::ZeroVariance, "constant series");

  const Eigen::Index rows = t_len - 1;
  const Eigen::Index cols = options.trend ? 5 : 4;
  Vector dy(rows);
  Matrix x(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const Eigen::Index t = r + 1;
    dy(r) = y(t) - y(t - 1);
    x(r, 0) = 1.0;
    x(r, 1) = y(t - 1);
    x(r, 2) = ybar(t - 1);
    x(r, 3) = ybar(t) - ybar(t - 1);
    if (options.trend) x(r, 4) = static_cast<double>(t);
  }
  LeastSquaresFit fit;
  try {
    fit = ols(dy, x, {"const", "y_lag", "ybar_lag", "dybar", "trend"});
  } catch (const Error& e) {
    if (e.code() == ErrorCode::RankDeficient) throw Error(ErrorCode::CollinearRegressors, e.message());
    throw;
  }
  if (!(fit.standard_errors(1) > 0.0)) throw Error(ErrorCode::ZeroVariance, "CADF regression fits exactly");
  return fit.coefficients(1) / fit.standard_errors(1);
}

/// CIPS = mean of unit CADF statistics. The p-value interpolates the embedded
/// intercept-only critical values (truncated to [0.01, 0.10]); with a trend it
/// is left unset. `detail` also carries a Fisher combination of per-unit
/// Dickey-Fuller p-values.
inline TestResult cips_test(const PanelDataset& panel, const std::string& var, const CadfOptions& options = {}) {
  const Matrix& m = panel.variable(var);
  const Vector ybar = cross_sectional_average(panel, var);
  TestResult r;
  double sum = 0.0, fisher = 0.0;
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    const auto& unit = panel.unit_ids()[static_cast<std::size_t>(i)];
    double stat = 0.0;
    try {
      stat = cadf_stat(m.row(i).transpose(), ybar, options);
    } catch (const Error& e) {
      throw Error(e.code(), "unit " + unit + ": " + e.message());
    }
    r.unit_statistics[unit] = stat;
    sum += stat;
    const double p = dist::mackinnon_p(stat, options.trend ? dist::DfDeterministics::ConstantTrend
                                                           : dist::DfDeterministics::Constant);
    fisher += -2.0 * std::log(std::max(p, 1e-300));
  }
  const auto n = static_cast<double>(m.rows());
  r.statistic = sum / n;
  r.detail["fisher"] = fisher;
  r.detail["fisher_p"] = dist::chi_squared_upper_tail(fisher, 2.0 * n);
  if (!options.trend) {
    const auto cv = dist::cips_critical_values(n, static_cast<double>(m.cols()));
    r.p_value = dist::cips_p_value(r.statistic, cv);
    r.detail["cv01"] = cv.cv01;
    r.detail["cv05"] = cv.cv05;
    r.detail["cv10"] = cv.cv10;
  }
  return r;
}

// ---------------------------------------------------------------------------
// Slope homogeneity

enum class HacResiduals {
  Unit,        ///< residuals from each unit's own regression
  Restricted,  ///< residuals at the pooled within estimate
};

struct SlopeHomogeneityOptions {
  HacResiduals residuals = HacResiduals::Unit;
  /// Also partial out cross-sectional averages (lags 0..csa_lags).
  bool partial_out_csa = false;
};

inline int bartlett_bandwidth(Eigen::Index t) {
  return static_cast<int>(std::floor(4.0 * std::pow(static_cast<double>(t) / 100.0, 2.0 / 9.0)));
}

/// Bartlett-kernel long-run covariance (unscaled sum) of the rows of `h`.
inline Matrix bartlett_long_run_sum(const Matrix& h, int bandwidth) {
  Matrix v = h.transpose() * h;
  for (int j = 1; j <= bandwidth && j < h.rows(); ++j) {
    const Eigen::Index n = h.rows() - j;
    const Matrix g = h.bottomRows(n).transpose() * h.topRows(n);
    v += (1.0 - static_cast<double>(j) / (bandwidth + 1)) * (g + g.transpose());
  }
  return v;
}

/// HAC-robust dispersion test of slope homogeneity:
///   Delta = sqrt(N) (S / N - k) / sqrt(2k),
///   S = sum_i T (b_i - b~)' Q_i V_i^-1 Q_i (b_i - b~).
/// Slopes are the lagged dependent terms and the regressors; the intercept
/// and break dummy are partialled out unit by unit.
inline TestResult slope_homogeneity_test(const PanelDataset& panel, const RegressionSpec& spec,
                                         const SlopeHomogeneityOptions& options = {}) {
  spec.validate(panel);
  const auto members = spec.members(panel);
  const auto idx = panel.indices_of(members);
  if (idx.size() < 2) throw Error(ErrorCode::TooFewUnits, "slope homogeneity needs at least 2 units");
  const auto& years = panel.years();
  const auto n_years = static_cast<Eigen::Index>(years.size());
  const int csa_lags = options.partial_out_csa ? spec.resolved_csa_lags(years.size()) : 0;
  const Eigen::Index first = std::max(spec.max_variable_lag(), csa_lags);
  const Eigen::Index rows = n_years - first;

  std::vector<std::string> slope_names;
  for (int l = 1; l <= spec.lag_dependent; ++l) slope_names.push_back(Regressor::lagged_name(spec.dependent, l));
  for (const auto& r : spec.regressors) slope_names.push_back(r.name());
  const auto k = static_cast<Eigen::Index>(slope_names.size());
  if (k == 0) throw Error(ErrorCode::InvalidConfig, "slope homogeneity needs at least one slope");

  // Common nuisance block: intercept, dummy, optional CSAs.
  std::vector<Vector> common{Vector::Ones(rows)};
  if (spec.dummy_break_year) {
    Vector d(rows);
    for (Eigen::Index r = 0; r < rows; ++r) d(r) = years[static_cast<std::size_t>(first + r)] >= *spec.dummy_break_year ? 1.0 : 0.0;
    if (d.minCoeff() != d.maxCoeff()) common.push_back(d);
  }
  if (options.partial_out_csa) {
    for (const auto& v : spec.csa_variables()) {
      const Vector avg = cross_sectional_average(panel, v, members);
      for (int m = 0; m <= csa_lags; ++m) common.push_back(avg.segment(first - m, rows));
    }
  }
  Matrix z(rows, static_cast<Eigen::Index>(common.size()));
  for (std::size_t c = 0; c < common.size(); ++c) z.col(static_cast<Eigen::Index>(c)) = common[c];
  Eigen::ColPivHouseholderQR<Matrix> zqr(z);
  zqr.setThreshold(kRankTolerance);
  const Eigen::Index z_rank = zqr.rank();
  const Eigen::Index dof = rows - k - z_rank;
  if (dof < 2)
    throw Error(ErrorCode::InsufficientDegreesOfFreedom,
                std::to_string(rows) + " usable periods for " + std::to_string(k) + " slopes and " +
                    std::to_string(z_rank) + " nuisance terms");
  auto annihilate = [&](const Matrix& a) -> Matrix { return a - z * zqr.solve(a); };

  struct UnitData {
    Matrix x;
    Vector y;
    Vector beta;
  };
  std::vector<UnitData> units;
  for (auto i : idx) {
    const auto ii = static_cast<Eigen::Index>(i);
    UnitData u;
    u.x.resize(rows, k);
    u.y.resize(rows);
    const Matrix& dep = panel.variable(spec.dependent);
    for (Eigen::Index r = 0; r < rows; ++r) {
      const Eigen::Index t = first + r;
      u.y(r) = dep(ii, t);
      Eigen::Index c = 0;
      for (int l = 1; l <= spec.lag_dependent; ++l) u.x(r, c++) = dep(ii, t - l);
      for (const auto& reg : spec.regressors) u.x(r, c++) = panel.variable(reg.variable)(ii, t - reg.lag);
    }
    u.x = annihilate(u.x);
    u.y = annihilate(u.y);
    try {
      u.beta = ols(u.y, u.x, slope_names).coefficients;
    } catch (const Error& e) {
      if (e.code() == ErrorCode::RankDeficient)
        throw Error(ErrorCode::CollinearRegressors, "unit " + panel.unit_ids()[i] + ": " + e.message());
      throw;
    }
    units.push_back(std::move(u));
  }

  Vector pooled;
  if (options.residuals == HacResiduals::Restricted) {
    Matrix xtx = Matrix::Zero(k, k);
    Vector xty = Vector::Zero(k);
    for (const auto& u : units) {
      xtx += u.x.transpose() * u.x;
      xty += u.x.transpose() * u.y;
    }
    pooled = xtx.ldlt().solve(xty);
  }

  const int bandwidth = bartlett_bandwidth(rows);
  const double scale = options.residuals == HacResiduals::Unit ? static_cast<double>(dof) : static_cast<double>(rows - z_rank);
  std::vector<Matrix> weights;
  Matrix a = Matrix::Zero(k, k);
  Vector c = Vector::Zero(k);
  for (std::size_t u = 0; u < units.size(); ++u) {
    const auto& d = units[u];
    const Vector e = d.y - d.x * (options.residuals == HacResiduals::Unit ? d.beta : pooled);
    const Matrix h = d.x.array().colwise() * e.array();
    const Matrix v = bartlett_long_run_sum(h, bandwidth) / scale;
    const Matrix q = d.x.transpose() * d.x / static_cast<double>(rows);
    Eigen::LLT<Matrix> llt(v);
    if (llt.info() != Eigen::Success || !(v.trace() > 1e-14 * (q.trace() + 1.0)) || !(llt.matrixLLT().diagonal().minCoeff() > 0.0))
      throw Error(ErrorCode::DegenerateVariance,
                  "unit " + panel.unit_ids()[idx[u]] + ": long-run variance of scores is singular");
    Matrix w = q * llt.solve(q);
    a += w;
    c += w * d.beta;
    weights.push_back(std::move(w));
  }
  const Vector beta_tilde = a.ldlt().solve(c);
  double s = 0.0;
  for (std::size_t u = 0; u < units.size(); ++u) {
    const Vector diff = units[u].beta - beta_tilde;
    s += static_cast<double>(rows) * diff.dot(weights[u] * diff);
  }
  const auto n = static_cast<double>(units.size());
  const auto kd = static_cast<double>(k);
  TestResult r;
  r.statistic = std::sqrt(n) * (s / n - kd) / std::sqrt(2.0 * kd);
  r.p_value = dist::normal_two_sided_p(r.statistic);
  r.detail["S"] = s;
  r.detail["k"] = kd;
  r.detail["bandwidth"] = bandwidth;
  r.detail["periods"] = static_cast<double>(rows);
  for (Eigen::Index j = 0; j < k; ++j) r.detail["pooled_" + slope_names[static_cast<std::size_t>(j)]] = beta_tilde(j);
  for (std::size_t u = 0; u < units.size(); ++u)
    r.unit_statistics[panel.unit_ids()[idx[u]]] = units[u].beta(0);
  return r;
}

}  // namespace fiscal
