#pragma once

#include <boost/math/special_functions/gamma.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>

namespace fiscal::dist {

inline double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

inline double normal_upper_tail(double z) { return 0.5 * std::erfc(z / std::sqrt(2.0)); }

inline double normal_two_sided_p(double z) { return std::erfc(std::fabs(z) / std::sqrt(2.0)); }

/// P(X > x) for X ~ chi-squared with `dof` degrees of freedom.
inline double chi_squared_upper_tail(double x, double dof) {
  if (x <= 0.0) return 1.0;
  return boost::math::gamma_q(0.5 * dof, 0.5 * x);
}

enum class DfDeterministics { Constant, ConstantTrend };

/// Approximate p-value of a Dickey-Fuller tau statistic (one series, left tail),
/// from MacKinnon's (1994) response-surface approximation.
inline double mackinnon_p(double tau, DfDeterministics det) {
  struct Surface {
    double max_stat, min_stat, star_stat;
    std::array<double, 3> small;
    std::array<double, 4> large;
  };
  static constexpr Surface constant{2.74, -18.83, -1.61, {2.1659, 1.4412, 3.8269e-2},
                                    {1.7339, 9.3202e-1, -1.2745e-1, -1.0368e-2}};
  static constexpr Surface trend{0.7, -16.18, -2.89, {3.2512, 1.6047, 4.9588e-2},
                                 {2.5261, 6.1654e-1, -3.7956e-1, -6.0285e-2}};
  const Surface& s = det == DfDeterministics::Constant ? constant : trend;
  if (tau > s.max_stat) return 1.0;
  if (tau < s.min_stat) return 0.0;
  double z = 0.0;
  if (tau <= s.star_stat) {
    for (auto it = s.small.rbegin(); it != s.small.rend(); ++it) z = z * tau + *it;
  } else {
    for (auto it = s.large.rbegin(); it != s.large.rend(); ++it) z = z * tau + *it;
  }
  return normal_cdf(z);
}

// CIPS critical values, intercept-only case, from Pesaran (2007, Table II(b)).
// Rows are N, columns are T.
inline constexpr std::array<double, 8> kCipsN{10, 15, 20, 30, 50, 70, 100, 200};
inline constexpr std::array<double, 8> kCipsT{10, 15, 20, 30, 50, 70, 100, 200};
using CipsGrid = std::array<std::array<double, 8>, 8>;
inline constexpr CipsGrid kCips01{{
    {-2.97, -2.76, -2.64, -2.58, -2.52, -2.50, -2.50, -2.49},
    {-2.66, -2.52, -2.45, -2.42, -2.37, -2.35, -2.34, -2.33},
    {-2.60, -2.47, -2.40, -2.35, -2.33, -2.31, -2.31, -2.31},
    {-2.57, -2.42, -2.35, -2.30, -2.27, -2.27, -2.26, -2.26},
    {-2.55, -2.39, -2.32, -2.26, -2.23, -2.22, -2.22, -2.21},
    {-2.54, -2.38, -2.30, -2.24, -2.21, -2.20, -2.19, -2.19},
    {-2.53, -2.37, -2.29, -2.23, -2.19, -2.18, -2.18, -2.18},
    {-2.53, -2.35, -2.27, -2.22, -2.18, -2.17, -2.16, -2.16},
}};
inline constexpr CipsGrid kCips05{{
    {-2.52, -2.40, -2.34, -2.30, -2.27, -2.26, -2.26, -2.25},
    {-2.37, -2.28, -2.22, -2.21, -2.18, -2.17, -2.16, -2.16},
    {-2.34, -2.24, -2.19, -2.16, -2.14, -2.13, -2.14, -2.13},
    {-2.29, -2.20, -2.15, -2.13, -2.11, -2.11, -2.11, -2.10},
    {-2.27, -2.18, -2.13, -2.11, -2.09, -2.08, -2.08, -2.08},
    {-2.27, -2.17, -2.12, -2.09, -2.07, -2.07, -2.07, -2.06},
    {-2.26, -2.16, -2.11, -2.08, -2.07, -2.06, -2.06, -2.06},
    {-2.25, -2.15, -2.11, -2.08, -2.06, -2.05, -2.05, -2.05},
}};
inline constexpr CipsGrid kCips10{{
    {-2.31, -2.22, -2.18, -2.15, -2.14, -2.14, -2.14, -2.14},
    {-2.22, -2.16, -2.11, -2.09, -2.08, -2.07, -2.07, -2.07},
    {-2.21, -2.13, -2.09, -2.07, -2.05, -2.05, -2.05, -2.05},
    {-2.17, -2.10, -2.07, -2.05, -2.04, -2.04, -2.04, -2.04},
    {-2.16, -2.08, -2.05, -2.03, -2.02, -2.02, -2.02, -2.02},
    {-2.15, -2.08, -2.05, -2.03, -2.02, -2.01, -2.01, -2.01},
    {-2.15, -2.07, -2.04, -2.02, -2.01, -2.01, -2.01, -2.01},
    {-2.15, -2.07, -2.04, -2.01, -2.01, -2.01, -2.00, -2.00},
}};

namespace detail {

// Bracketing index and weight for linear interpolation, clamped to the grid.
inline std::pair<std::size_t, double> bracket(const std::array<double, 8>& grid, double x) {
  if (x <= grid.front()) return {0, 0.0};
  if (x >= grid.back()) return {grid.size() - 2, 1.0};
  std::size_t i = 0;
  while (grid[i + 1] < x) ++i;
  return {i, (x - grid[i]) / (grid[i + 1] - grid[i])};
}

}  // namespace detail

/// Bilinear interpolation of a CIPS critical-value grid at (n, t), clamped.
inline double cips_critical_value(const CipsGrid& grid, double n, double t) {
  const auto [i, wn] = detail::bracket(kCipsN, n);
  const auto [j, wt] = detail::bracket(kCipsT, t);
  const double a = grid[i][j] * (1 - wt) + grid[i][j + 1] * wt;
  const double b = grid[i + 1][j] * (1 - wt) + grid[i + 1][j + 1] * wt;
  return a * (1 - wn) + b * wn;
}

struct CipsCriticalValues {
  double cv01, cv05, cv10;
};

inline CipsCriticalValues cips_critical_values(double n, double t) {
  return {cips_critical_value(kCips01, n, t), cips_critical_value(kCips05, n, t), cips_critical_value(kCips10, n, t)};
}

/// p-value by linear interpolation between the tabulated 1/5/10% points,
/// truncated to [0.01, 0.10].
inline double cips_p_value(double statistic, const CipsCriticalValues& cv) {
  if (statistic <= cv.cv01) return 0.01;
  if (statistic >= cv.cv10) return 0.10;
  if (statistic <= cv.cv05) return 0.01 + 0.04 * (statistic - cv.cv01) / (cv.cv05 - cv.cv01);
  return 0.05 + 0.05 * (statistic - cv.cv05) / (cv.cv10 - cv.cv05);
}

}  // namespace fiscal::dist
