#pragma once

// Deliberately naive reference implementations used to check the library.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "fiscal/panel.hpp"

namespace fiscal::oracle {

/// Dense (I + lambda K'K)^-1 y with K the (T-2) x T second-difference matrix.
inline Vector dense_hp_trend(const Vector& y, double lambda) {
  const Eigen::Index n = y.size();
  Matrix k = Matrix::Zero(n - 2, n);
  for (Eigen::Index r = 0; r < n - 2; ++r) {
    k(r, r) = 1.0;
    k(r, r + 1) = -2.0;
    k(r, r + 2) = 1.0;
  }
  const Matrix a = Matrix::Identity(n, n) + lambda * k.transpose() * k;
  return a.fullPivLu().solve(y);
}

struct NormalEquationsFit {
  Vector beta;
  Vector se;
  Vector residuals;
};

/// beta = (X'X)^-1 X'y with an explicit inverse.
inline NormalEquationsFit normal_equations(const Vector& y, const Matrix& x) {
  const Matrix inv = (x.transpose() * x).inverse();
  NormalEquationsFit f;
  f.beta = inv * (x.transpose() * y);
  f.residuals = y - x * f.beta;
  const double s2 = f.residuals.squaredNorm() / static_cast<double>(x.rows() - x.cols());
  f.se = (s2 * inv.diagonal()).cwiseSqrt();
  return f;
}

/// CADF t-statistic in two stages: partial [1, ybar_{t-1}, dybar_t] out of dy_t
/// and y_{t-1}, then regress residual on residual.
inline double fwl_cadf(const Vector& y, const Vector& ybar) {
  const Eigen::Index n = y.size() - 1;
  Matrix z(n, 3);
  Vector dy(n), ylag(n);
  for (Eigen::Index r = 0; r < n; ++r) {
    dy(r) = y(r + 1) - y(r);
    ylag(r) = y(r);
    z(r, 0) = 1.0;
    z(r, 1) = ybar(r);
    z(r, 2) = ybar(r + 1) - ybar(r);
  }
  const Matrix zinv = (z.transpose() * z).inverse();
  const Vector dy_t = dy - z * (zinv * (z.transpose() * dy));
  const Vector yl_t = ylag - z * (zinv * (z.transpose() * ylag));
  const double b = yl_t.dot(dy_t) / yl_t.squaredNorm();
  const Vector e = dy_t - b * yl_t;
  const double s2 = e.squaredNorm() / static_cast<double>(n - 4);
  return b / std::sqrt(s2 / yl_t.squaredNorm());
}

/// One-pass (Welford) mean and sqrt(sum (x - mean)^2 / (N (N - 1))).
inline std::pair<double, double> welford_mean_se(const std::vector<double>& xs) {
  double mean = 0.0, m2 = 0.0;
  std::size_t k = 0;
  for (double x : xs) {
    ++k;
    const double delta = x - mean;
    mean += delta / static_cast<double>(k);
    m2 += delta * (x - mean);
  }
  const auto n = static_cast<double>(k);
  return {mean, std::sqrt(m2 / (n * (n - 1.0)))};
}

/// Per-year average by explicit loops over a name lookup.
inline Vector naive_csa(const PanelDataset& panel, const std::string& var, const std::vector<std::string>& members) {
  const Matrix& m = panel.variable(var);
  Vector out(m.cols());
  for (Eigen::Index t = 0; t < m.cols(); ++t) {
    double sum = 0.0;
    for (const auto& id : members) sum += m(static_cast<Eigen::Index>(panel.unit_index(id)), t);
    out(t) = sum / static_cast<double>(members.size());
  }
  return out;
}

inline double sort_median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace fiscal::oracle
