#pragma once

// Fiscal rule, debt law of motion and a finite-horizon no-Ponzi check.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "fiscal/config.hpp"
#include "fiscal/error.hpp"
#include "fiscal/panel.hpp"
#include "fiscal/text.hpp"

namespace fiscal {

struct RuleResponse {
  double value = 0.0;
  /// rho / (1 - phi) >= 1: the surplus over-reacts to debt.
  bool over_adjustment = false;
};

/// Permanent surplus adjustment per unit of debt, rho / (1 - phi).
inline RuleResponse long_run_response(double phi, double rho) {
  if (!(phi < 1.0)) throw Error(ErrorCode::NonStationaryInertia, "phi must be below 1, got " + text::format_roundtrip(phi));
  if (!std::isfinite(rho)) throw Error(ErrorCode::NonFiniteInput, "rho is not finite");
  const double lr = rho / (1.0 - phi);
  return {lr, lr >= 1.0};
}

/// Factor 1 - rho / (1 - phi) by which debt growth is permanently reduced.
inline RuleResponse ponzi_decay_factor(double phi, double rho) {
  const auto lr = long_run_response(phi, rho);
  return {1.0 - lr.value, lr.over_adjustment};
}

/// s_t = phi s_{t-1} + rho b_{t-1} + mu_t.
class FiscalRule {
 public:
  FiscalRule(double phi, double rho, std::vector<double> mu = {0.0}) : phi_(phi), rho_(rho), mu_(std::move(mu)) {
    if (!std::isfinite(phi) || !std::isfinite(rho))
      throw Error(ErrorCode::NonFiniteInput, "fiscal rule parameters must be finite");
    if (phi >= 1.0) throw Error(ErrorCode::NonStationaryInertia, "phi must be below 1, got " + text::format_roundtrip(phi));
    if (phi < 0.0) throw Error(ErrorCode::InvalidConfig, "phi must be nonnegative, got " + text::format_roundtrip(phi));
    if (mu_.empty()) throw Error(ErrorCode::InvalidConfig, "mu needs at least one value");
    for (double m : mu_)
      if (!std::isfinite(m)) throw Error(ErrorCode::NonFiniteInput, "mu is not finite");
  }

  double phi() const { return phi_; }
  double rho() const { return rho_; }
  const std::vector<double>& mu() const { return mu_; }
  /// mu for period t (1-based); a single value is held constant.
  double mu_at(std::size_t t) const { return mu_.size() == 1 ? mu_.front() : mu_.at(t - 1); }
  RuleResponse long_run() const { return long_run_response(phi_, rho_); }

 private:
  double phi_;
  double rho_;
  std::vector<double> mu_;
};

/// Period interest and growth rates; one value means constant. `discount`, if
/// present, replaces the natural factor (1 + g_t) / (1 + r_t).
struct EconomyPath {
  std::vector<double> r{0.0};
  std::vector<double> g{0.0};
  std::optional<std::vector<double>> discount;

  double r_at(std::size_t t) const { return r.size() == 1 ? r.front() : r.at(t - 1); }
  double g_at(std::size_t t) const { return g.size() == 1 ? g.front() : g.at(t - 1); }
  double discount_at(std::size_t t) const {
    if (!discount) return (1.0 + g_at(t)) / (1.0 + r_at(t));
    return discount->size() == 1 ? discount->front() : discount->at(t - 1);
  }
};

enum class Verdict { Sustainable, PonziViolation, Inconclusive };

inline std::string_view to_string(Verdict v) {
  switch (v) {
    case Verdict::Sustainable: return "Sustainable";
    case Verdict::PonziViolation: return "PonziViolation";
    case Verdict::Inconclusive: return "Inconclusive";
  }
  return "Inconclusive";
}

struct Classification {
  Verdict verdict = Verdict::Inconclusive;
  std::string message;
};

struct DebtPathResult {
  /// Index 0 holds the initial conditions; index t the end of period t.
  std::vector<double> b;
  std::vector<double> s;
  std::vector<double> discounted_b;
  double b0 = 0.0;
  Verdict verdict = Verdict::Inconclusive;
  std::string verdict_message;
  std::vector<std::string> warnings;

  std::size_t horizon() const { return b.empty() ? 0 : b.size() - 1; }
};

struct SustainabilityOptions {
  /// Relative to |b0|.
  double tolerance = 1e-6;
  double tail_fraction = 0.10;
  /// |mu| above this is treated as unbounded (warning only).
  double mu_cap = 100.0;
};

/// Sustainable: every discounted value in the tail window is below
/// tolerance * |b0|. PonziViolation: the tail stays above that bound and does
/// not decrease. Otherwise Inconclusive.
inline Classification classify_sustainability(const DebtPathResult& result, const SustainabilityOptions& options = {}) {
  const std::size_t n = result.horizon();
  const auto window = static_cast<std::size_t>(std::floor(options.tail_fraction * static_cast<double>(n)));
  if (window < 2)
    return {Verdict::Inconclusive, "horizon " + std::to_string(n) + " leaves a tail window of " + std::to_string(window) +
                                       " periods; use a longer horizon"};
  const double bound = options.tolerance * std::fabs(result.b0);
  const auto& d = result.discounted_b;
  bool below = true, above = true, nondecreasing = true;
  for (std::size_t t = n + 1 - window; t <= n; ++t) {
    const double a = std::fabs(d[t]);
    below = below && a < bound;
    above = above && a >= bound;
    if (t > n + 1 - window) nondecreasing = nondecreasing && d[t] >= d[t - 1] - 1e-9 * std::fabs(d[t - 1]);
  }
  if (below) return {Verdict::Sustainable, "discounted debt below " + text::format_roundtrip(bound) + " over the tail"};
  if (above && nondecreasing)
    return {Verdict::PonziViolation, "discounted debt stays above " + text::format_roundtrip(bound) + " and does not decline"};
  return {Verdict::Inconclusive, "discounted debt has not settled within the horizon; use a longer horizon"};
}

/// b_t = (1 + r_t) / (1 + g_t) * (b_{t-1} - s_t) with s_t from the rule;
/// discounted_b_t = b_t * prod_{k<=t} discount_k.
inline DebtPathResult simulate_debt_path(const FiscalRule& rule, const EconomyPath& economy, double b0, double s0,
                                         std::size_t horizon, const SustainabilityOptions& options = {}) {
  if (horizon == 0) throw Error(ErrorCode::HorizonZero, "horizon must be at least 1");
  if (!std::isfinite(b0) || !std::isfinite(s0)) throw Error(ErrorCode::NonFiniteInput, "b0 and s0 must be finite");
  auto check_len = [&](std::size_t len, const char* what) {
    if (len != 1 && len < horizon)
      throw Error(ErrorCode::InvalidConfig, std::string(what) + " series shorter than horizon " + std::to_string(horizon));
  };
  check_len(economy.r.size(), "r");
  check_len(economy.g.size(), "g");
  check_len(rule.mu().size(), "mu");
  if (economy.discount) check_len(economy.discount->size(), "discount");

  DebtPathResult out;
  out.b0 = b0;
  out.b.assign(horizon + 1, 0.0);
  out.s.assign(horizon + 1, 0.0);
  out.discounted_b.assign(horizon + 1, 0.0);
  out.b[0] = b0;
  out.s[0] = s0;
  out.discounted_b[0] = b0;
  double cumulative = 1.0;
  bool mu_flagged = false;
  for (std::size_t t = 1; t <= horizon; ++t) {
    const double r = economy.r_at(t), g = economy.g_at(t);
    if (!(1.0 + r > 0.0) || !(1.0 + g > 0.0))
      throw Error(ErrorCode::NonPositiveGrossRate, "1 + r and 1 + g must be positive (period " + std::to_string(t) + ")");
    const double mu = rule.mu_at(t);
    if (!mu_flagged && std::fabs(mu) > options.mu_cap) {
      out.warnings.push_back("mu exceeds " + text::format_roundtrip(options.mu_cap) + " at period " + std::to_string(t) +
                             "; non-debt determinants are assumed bounded");
      mu_flagged = true;
    }
    out.s[t] = rule.phi() * out.s[t - 1] + rule.rho() * out.b[t - 1] + mu;
    out.b[t] = (1.0 + r) / (1.0 + g) * (out.b[t - 1] - out.s[t]);
    cumulative *= economy.discount_at(t);
    out.discounted_b[t] = out.b[t] * cumulative;
    if (!std::isfinite(out.b[t]) || !std::isfinite(out.discounted_b[t]))
      throw Error(ErrorCode::NonFiniteInput, "debt path overflowed at period " + std::to_string(t));
  }
  for (const auto& w : out.warnings) warn(w);
  const auto c = classify_sustainability(out, options);
  out.verdict = c.verdict;
  out.verdict_message = c.message;
  return out;
}

/// One scenario from a `key = value` file.
struct Scenario {
  std::string name = "scenario";
  FiscalRule rule{0.0, 0.0};
  EconomyPath economy;
  double b0 = 0.0;
  double s0 = 0.0;
  std::size_t horizon = 0;
  SustainabilityOptions options;
};

namespace detail {

inline std::vector<double> read_series_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open series file " + path);
  std::vector<double> out;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto body = text::trim(line);
    if (body.empty() || body.front() == '#') continue;
    const auto v = text::parse_double(body);
    if (!v) throw Error(ErrorCode::UnparsableNumber, path + ":" + std::to_string(line_no) + ": '" + std::string(body) + "'");
    out.push_back(*v);
  }
  if (out.empty()) throw Error(ErrorCode::EmptyFile, path + " has no values");
  return out;
}

}  // namespace detail

/// Keys: phi, rho, b0, horizon (required); s0, mu | mu_file, r, g,
/// discount | discount_file, tolerance, tail_fraction, mu_cap, name.
/// r, g, mu and discount take a number or a list.
inline Scenario parse_scenario(const ConfigFile& cfg) {
  cfg.require_known({"name", "phi", "rho", "mu", "mu_file", "r", "g", "discount", "discount_file", "b0", "s0", "horizon",
                     "tolerance", "tail_fraction", "mu_cap"});
  Scenario sc;
  if (cfg.has("name")) sc.name = cfg.get_string("name");
  std::vector<double> mu{0.0};
  if (cfg.has("mu") && cfg.has("mu_file")) throw Error(ErrorCode::InvalidConfig, "give mu or mu_file, not both");
  if (cfg.has("mu")) mu = cfg.get_double_list("mu");
  if (cfg.has("mu_file")) mu = detail::read_series_file(cfg.get_string("mu_file"));
  sc.rule = FiscalRule(cfg.get_double("phi"), cfg.get_double("rho"), mu);
  if (cfg.has("r")) sc.economy.r = cfg.get_double_list("r");
  if (cfg.has("g")) sc.economy.g = cfg.get_double_list("g");
  if (cfg.has("discount") && cfg.has("discount_file"))
    throw Error(ErrorCode::InvalidConfig, "give discount or discount_file, not both");
  if (cfg.has("discount")) sc.economy.discount = cfg.get_double_list("discount");
  if (cfg.has("discount_file")) sc.economy.discount = detail::read_series_file(cfg.get_string("discount_file"));
  if (sc.economy.r.empty() || sc.economy.g.empty()) throw Error(ErrorCode::InvalidConfig, "r and g need at least one value");
  sc.b0 = cfg.get_double("b0");
  if (cfg.has("s0")) sc.s0 = cfg.get_double("s0");
  const auto h = cfg.get_int("horizon");
  if (h < 1) throw Error(ErrorCode::HorizonZero, "horizon must be at least 1");
  sc.horizon = static_cast<std::size_t>(h);
  if (cfg.has("tolerance")) sc.options.tolerance = cfg.get_double("tolerance");
  if (cfg.has("tail_fraction")) sc.options.tail_fraction = cfg.get_double("tail_fraction");
  if (cfg.has("mu_cap")) sc.options.mu_cap = cfg.get_double("mu_cap");
  return sc;
}

/// Tab-separated trajectory: t, r, g, s, b, discounted_b (round-trip precision).
inline void write_trajectory(const DebtPathResult& result, const EconomyPath& economy, std::ostream& out) {
  out << "t\tr\tg\ts\tb\tdiscounted_b\n";
  for (std::size_t t = 0; t <= result.horizon(); ++t) {
    out << t << '\t';
    if (t == 0)
      out << "\t";
    else
      out << text::format_roundtrip(economy.r_at(t)) << '\t' << text::format_roundtrip(economy.g_at(t));
    out << '\t' << text::format_roundtrip(result.s[t]) << '\t' << text::format_roundtrip(result.b[t]) << '\t'
        << text::format_roundtrip(result.discounted_b[t]) << '\n';
  }
}

}  // namespace fiscal
