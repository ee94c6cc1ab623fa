#pragma once

// Seeded synthetic fiscal panel with the same columns as the real input:
// primary balance, debt, real GDP and government consumption levels, current
// account. Used for demos and the determinism check.

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "fiscal/panel.hpp"

namespace fiscal {

struct SyntheticOptions {
  std::size_t units = 52;
  int first_year = 1990;
  int last_year = 2022;
  int break_year = 2008;
  std::uint64_t seed = 0;
  int burn_in = 30;
};

/// pb_t = a_i + 0.358 pb_{t-1} + 0.033 debt_{t-1} + 0.219 ygap - 0.150 ggap
///        + 0.085 ca - 0.357 D_t + loading_i f_t + e_t,
/// debt_t = (1 + r_i) / (1 + g_i) (debt_{t-1} - pb_t) + u_t,
/// with GDP and spending levels carrying the gaps around exponential trends.
inline PanelDataset synthetic_fiscal_panel(const SyntheticOptions& options = {}) {
  if (options.units < 2 || options.last_year < options.first_year)
    throw Error(ErrorCode::InvalidConfig, "synthetic panel needs at least 2 units and 1 year");
  std::seed_seq seq{static_cast<std::uint32_t>(options.seed), static_cast<std::uint32_t>(options.seed >> 32), 0x5eedu};
  std::mt19937_64 rng(seq);
  std::normal_distribution<double> z(0.0, 1.0);
  auto u = [&](double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); };

  const int t_len = options.last_year - options.first_year + 1;
  const int total = t_len + options.burn_in;
  std::vector<double> f(static_cast<std::size_t>(total));
  double prev = 0.0;
  for (auto& v : f) prev = v = 0.5 * prev + z(rng);

  const auto n = static_cast<Eigen::Index>(options.units);
  Matrix pb(n, t_len), debt(n, t_len), gdp(n, t_len), gov(n, t_len), ca(n, t_len);
  std::vector<std::string> ids;
  for (Eigen::Index i = 0; i < n; ++i) {
    char name[16];
    std::snprintf(name, sizeof(name), "C%02d", static_cast<int>(i + 1));
    ids.emplace_back(name);

    const double growth = u(0.01, 0.04);
    const double rate = growth + u(-0.01, 0.02);
    const double gross = (1.0 + rate) / (1.0 + growth);
    const double b_star = u(20.0, 110.0), a_bar = u(-4.0, 4.0);
    const double s_star = (1.0 - 1.0 / gross) * b_star;
    const double alpha = (1.0 - 0.358) * s_star - 0.033 * b_star - 0.085 * a_bar;
    const double load_s = u(0.5, 1.5), load_y = u(0.5, 1.5), load_a = u(-1.0, 1.0);
    const double share = u(0.12, 0.25);

    double s = s_star, b = b_star, yg = 0.0, gg = 0.0, a = a_bar;
    for (int k = 0; k < total; ++k) {
      const int year = options.first_year - options.burn_in + k;
      const double dummy = year >= options.break_year ? 1.0 : 0.0;
      const double fk = f[static_cast<std::size_t>(k)];
      yg = 0.6 * yg + load_y * fk + 1.5 * z(rng);
      gg = 0.3 * gg - 0.5 * yg + 2.0 * z(rng);
      a = a_bar + 0.6 * (a - a_bar) + load_a * fk + 2.0 * z(rng);
      const double s_new = alpha + 0.358 * s + 0.033 * b + 0.219 * yg - 0.150 * gg + 0.085 * a - 0.357 * dummy +
                           load_s * fk + z(rng);
      b = gross * (b - s_new) + 2.0 * z(rng);
      s = s_new;
      const int t = k - options.burn_in;
      if (t < 0) continue;
      pb(i, t) = s;
      debt(i, t) = b;
      ca(i, t) = a;
      gdp(i, t) = 100.0 * std::exp(growth * t + yg / 100.0);
      gov(i, t) = 100.0 * share * std::exp(growth * t + gg / 100.0);
    }
  }
  std::vector<int> years;
  for (int y = options.first_year; y <= options.last_year; ++y) years.push_back(y);
  return PanelDataset(std::move(ids), std::move(years),
                      {{"pb", pb}, {"debt", debt}, {"gdp", gdp}, {"gov", gov}, {"ca", ca}});
}

}  // namespace fiscal
