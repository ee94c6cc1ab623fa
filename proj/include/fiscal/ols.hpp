#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "fiscal/error.hpp"
#include "fiscal/panel.hpp"

namespace fiscal {

enum class RankPolicy {
  Throw,       ///< any collinearity is a RankDeficient error
  DropLatest,  ///< drop the latest-ordered column of each collinear set
};

struct LeastSquaresFit {
  /// One entry per design column; NaN for dropped columns.
  Vector coefficients;
  Vector residuals;
  /// Coefficient standard errors; NaN for dropped columns.
  Vector standard_errors;
  int dof = 0;
  double sigma2 = 0.0;
  std::vector<Eigen::Index> kept;
  std::vector<Eigen::Index> dropped;

  double rss() const { return residuals.squaredNorm(); }
};

inline constexpr double kRankTolerance = 1e-10;

namespace detail {

inline Eigen::Index pivoted_rank(const Matrix& x, double tol) {
  if (x.cols() == 0) return 0;
  Eigen::ColPivHouseholderQR<Matrix> qr(x);
  qr.setThreshold(tol);
  return qr.rank();
}

inline Matrix take_columns(const Matrix& x, const std::vector<Eigen::Index>& cols) {
  Matrix out(x.rows(), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t j = 0; j < cols.size(); ++j) out.col(static_cast<Eigen::Index>(j)) = x.col(cols[j]);
  return out;
}

/// Walks columns in order and keeps each one that raises the rank.
inline std::vector<Eigen::Index> forward_independent_columns(const Matrix& x, double tol,
                                                             std::vector<Eigen::Index>* rejected) {
  std::vector<Eigen::Index> kept;
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    kept.push_back(j);
    if (pivoted_rank(take_columns(x, kept), tol) < static_cast<Eigen::Index>(kept.size())) {
      kept.pop_back();
      if (rejected) rejected->push_back(j);
    }
  }
  return kept;
}

inline std::string join_names(const std::vector<Eigen::Index>& cols, const std::vector<std::string>& names) {
  std::string out;
  for (auto c : cols) {
    if (!out.empty()) out += ", ";
    out += (static_cast<std::size_t>(c) < names.size()) ? names[static_cast<std::size_t>(c)] : "column " + std::to_string(c);
  }
  return out;
}

}  // namespace detail

/// Least squares by column-pivoted Householder QR. Rank is decided at
/// `tol` relative to the leading diagonal of R.
inline LeastSquaresFit ols(const Vector& y, const Matrix& x, const std::vector<std::string>& names = {},
                           RankPolicy policy = RankPolicy::Throw, double tol = kRankTolerance) {
  if (y.size() != x.rows()) throw Error(ErrorCode::InsufficientObservations, "response and design row counts differ");
  if (x.rows() <= x.cols())
    throw Error(ErrorCode::InsufficientDegreesOfFreedom,
                std::to_string(x.rows()) + " rows for " + std::to_string(x.cols()) + " columns");

  LeastSquaresFit fit;
  Eigen::ColPivHouseholderQR<Matrix> qr(x);
  qr.setThreshold(tol);
  if (qr.rank() == x.cols()) {
    for (Eigen::Index j = 0; j < x.cols(); ++j) fit.kept.push_back(j);
  } else {
    fit.kept = detail::forward_independent_columns(x, tol, &fit.dropped);
    if (policy == RankPolicy::Throw)
      throw Error(ErrorCode::RankDeficient, "collinear columns: " + detail::join_names(fit.dropped, names));
    qr.compute(detail::take_columns(x, fit.kept));
  }

  const Eigen::Index k = static_cast<Eigen::Index>(fit.kept.size());
  const Matrix xk = fit.dropped.empty() ? x : detail::take_columns(x, fit.kept);
  const Vector beta = qr.solve(y);
  fit.residuals = y - xk * beta;
  fit.dof = static_cast<int>(x.rows() - k);
  fit.sigma2 = fit.residuals.squaredNorm() / fit.dof;

  // (X'X)^-1 = P R^-1 R^-T P' for X P = Q R.
  const Matrix r = qr.matrixR().topLeftCorner(k, k).template triangularView<Eigen::Upper>();
  const Matrix r_inv = r.template triangularView<Eigen::Upper>().solve(Matrix::Identity(k, k));
  const Matrix xtx_inv_perm = r_inv * r_inv.transpose();
  const auto& perm = qr.colsPermutation().indices();

  fit.coefficients = Vector::Constant(x.cols(), std::numeric_limits<double>::quiet_NaN());
  fit.standard_errors = Vector::Constant(x.cols(), std::numeric_limits<double>::quiet_NaN());
  for (Eigen::Index j = 0; j < k; ++j) {
    const Eigen::Index col = fit.kept[static_cast<std::size_t>(j)];
    fit.coefficients(col) = beta(j);
  }
  for (Eigen::Index p = 0; p < k; ++p) {
    const Eigen::Index col = fit.kept[static_cast<std::size_t>(perm(p))];
    fit.standard_errors(col) = std::sqrt(fit.sigma2 * xtx_inv_perm(p, p));
  }
  return fit;
}

}  // namespace fiscal
