#pragma once

// Hodrick-Prescott trend extraction.
//
// The trend minimises sum (y - tau)^2 + lambda * sum (second difference of tau)^2,
// i.e. solves (I + lambda K'K) tau = y with K the (T-2) x T second-difference
// operator. The system matrix is symmetric positive definite and pentadiagonal,
// so it is factored as L D L' with two sub-diagonals in O(T).

#include <array>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "fiscal/panel.hpp"

namespace fiscal {

struct FilterConfig {
  double lambda = 100.0;
  /// Filter log levels; the gap is then 100 * (log deviation).
  bool log_levels = false;
};

struct TrendCycle {
  Vector trend;
  Vector cycle;
  /// 100 * cycle / trend; NaN where the trend is zero (see `undefined_gap`).
  Vector gap_percent;
  std::vector<Eigen::Index> undefined_gap;
};

/// Bands of A = I + lambda K'K: main diagonal, first and second super-diagonal.
struct PentadiagonalBands {
  Vector d0, d1, d2;
};

inline PentadiagonalBands hp_system_bands(Eigen::Index n, double lambda) {
  PentadiagonalBands a{Vector::Ones(n), Vector::Zero(std::max<Eigen::Index>(n - 1, 0)),
                       Vector::Zero(std::max<Eigen::Index>(n - 2, 0))};
  static constexpr std::array<double, 3> k{1.0, -2.0, 1.0};
  for (Eigen::Index r = 0; r + 2 < n; ++r) {
    for (int p = 0; p < 3; ++p) {
      a.d0(r + p) += lambda * k[p] * k[p];
      if (p < 2) a.d1(r + p) += lambda * k[p] * k[p + 1];
    }
    a.d2(r) += lambda * k[0] * k[2];
  }
  return a;
}

/// Solves A x = b for symmetric positive definite pentadiagonal A via L D L'.
inline Vector solve_pentadiagonal_spd(const PentadiagonalBands& a, const Vector& b) {
  const Eigen::Index n = b.size();
  Vector d(n), l1(std::max<Eigen::Index>(n - 1, 0)), l2(std::max<Eigen::Index>(n - 2, 0));
  for (Eigen::Index i = 0; i < n; ++i) {
    double di = a.d0(i);
    if (i >= 1) di -= l1(i - 1) * l1(i - 1) * d(i - 1);
    if (i >= 2) di -= l2(i - 2) * l2(i - 2) * d(i - 2);
    d(i) = di;
    if (i + 1 < n) {
      double v = a.d1(i);
      if (i >= 1) v -= l2(i - 1) * l1(i - 1) * d(i - 1);
      l1(i) = v / di;
    }
    if (i + 2 < n) l2(i) = a.d2(i) / di;
  }
  Vector z(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    double v = b(i);
    if (i >= 1) v -= l1(i - 1) * z(i - 1);
    if (i >= 2) v -= l2(i - 2) * z(i - 2);
    z(i) = v;
  }
  Vector x(n);
  for (Eigen::Index i = n - 1; i >= 0; --i) {
    double v = z(i) / d(i);
    if (i + 1 < n) v -= l1(i) * x(i + 1);
    if (i + 2 < n) v -= l2(i) * x(i + 2);
    x(i) = v;
  }
  return x;
}

inline TrendCycle hp_trend(const Vector& series, const FilterConfig& config = {}) {
  const Eigen::Index n = series.size();
  if (n < 4) throw Error(ErrorCode::SeriesTooShort, "HP filter needs at least 4 observations, got " + std::to_string(n));
  if (!(config.lambda >= 0.0) || !std::isfinite(config.lambda))
    throw Error(ErrorCode::NonFiniteInput, "HP smoothing parameter must be finite and nonnegative");
  for (Eigen::Index t = 0; t < n; ++t)
    if (!std::isfinite(series(t))) throw Error(ErrorCode::NonFiniteInput, "non-finite value at position " + std::to_string(t));

  Vector y = series;
  if (config.log_levels) {
    for (Eigen::Index t = 0; t < n; ++t) {
      if (series(t) <= 0.0)
        throw Error(ErrorCode::NonFiniteInput, "log filtering needs positive levels; position " + std::to_string(t));
      y(t) = std::log(series(t));
    }
  }

  TrendCycle out;
  out.trend = config.lambda == 0.0 ? y : solve_pentadiagonal_spd(hp_system_bands(n, config.lambda), y);
  out.cycle = y - out.trend;
  out.gap_percent.resize(n);
  for (Eigen::Index t = 0; t < n; ++t) {
    if (config.log_levels) {
      out.gap_percent(t) = 100.0 * out.cycle(t);
    } else if (out.trend(t) == 0.0) {
      out.gap_percent(t) = std::numeric_limits<double>::quiet_NaN();
      out.undefined_gap.push_back(t);
    } else {
      out.gap_percent(t) = 100.0 * out.cycle(t) / out.trend(t);
    }
  }
  return out;
}

/// Per-unit percent gaps of `var`, stored as `<var>_gap` in the returned panel.
inline PanelDataset detrend_panel(const PanelDataset& panel, const std::string& var, const FilterConfig& config = {}) {
  const Matrix& levels = panel.variable(var);
  Matrix gaps(levels.rows(), levels.cols());
  for (Eigen::Index i = 0; i < levels.rows(); ++i) {
    const auto& unit = panel.unit_ids()[static_cast<std::size_t>(i)];
    TrendCycle tc;
    try {
      tc = hp_trend(levels.row(i).transpose(), config);
    } catch (const Error& e) {
      throw Error(e.code(), "unit " + unit + ", variable " + var + ": " + e.message());
    }
    if (!tc.undefined_gap.empty())
      throw Error(ErrorCode::ZeroTrend, "unit " + unit + ", variable " + var + ": trend crosses zero, percent gap undefined");
    gaps.row(i) = tc.gap_percent.transpose();
  }
  return panel.with_variable(var + "_gap", std::move(gaps));
}

}  // namespace fiscal
