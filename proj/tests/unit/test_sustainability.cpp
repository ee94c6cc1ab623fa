#include <gtest/gtest.h>

#include <cmath>
#include <functional>
#include <sstream>

#include "fiscal/sustainability.hpp"
#include "support/capture.hpp"

using namespace fiscal;
namespace tst = fiscal::testing;

namespace {

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorCode::Io;
}

EconomyPath constant_rates(double r, double g) {
  EconomyPath e;
  e.r = {r};
  e.g = {g};
  return e;
}

}  // namespace

// --- rule arithmetic --------------------------------------------------------

TEST(LongRun, ReportedRuleValues) {
  EXPECT_NEAR(long_run_response(0.358, 0.033).value, 0.0514, 5e-5);
  EXPECT_NEAR(10.0 * long_run_response(0.358, 0.033).value, 0.51, 5e-3);
  EXPECT_NEAR(long_run_response(0.323, 0.0182).value, 0.0269, 5e-5);
  EXPECT_NEAR(10.0 * long_run_response(0.323, 0.0182).value, 0.27, 5e-3);
  EXPECT_NEAR(ponzi_decay_factor(0.358, 0.033).value, 0.9486, 5e-5);
  EXPECT_FALSE(long_run_response(0.358, 0.033).over_adjustment);
}

TEST(LongRun, IdentityCases) {
  for (double phi : {0.0, 0.2, 0.9, -0.5}) EXPECT_EQ(long_run_response(phi, 0.0).value, 0.0);
  for (double rho : {0.0, 0.01, 0.7}) EXPECT_EQ(long_run_response(0.0, rho).value, rho);
  EXPECT_EQ(ponzi_decay_factor(0.0, 0.0).value, 1.0);
}

TEST(LongRun, OverAdjustmentIsFlagged) {
  const auto d = ponzi_decay_factor(0.5, 0.6);
  EXPECT_LT(d.value, 0.0);
  EXPECT_TRUE(d.over_adjustment);
  EXPECT_TRUE(long_run_response(0.5, 0.5).over_adjustment);
}

TEST(LongRun, DecayIsOneMinusLongRunExactly) {
  for (double phi : {0.0, 0.1, 0.358, 0.77})
    for (double rho : {0.0, 0.0182, 0.033, 0.2})
      EXPECT_EQ(ponzi_decay_factor(phi, rho).value, 1.0 - long_run_response(phi, rho).value);
}

TEST(LongRun, InertiaAtOrAboveOneIsRejected) {
  EXPECT_EQ(code_of([] { long_run_response(1.0, 0.1); }), ErrorCode::NonStationaryInertia);
  EXPECT_EQ(code_of([] { ponzi_decay_factor(1.5, 0.1); }), ErrorCode::NonStationaryInertia);
  EXPECT_EQ(code_of([] { long_run_response(NAN, 0.1); }), ErrorCode::NonStationaryInertia);
  EXPECT_EQ(code_of([] { FiscalRule(1.0, 0.1); }), ErrorCode::NonStationaryInertia);
  EXPECT_EQ(code_of([] { FiscalRule(-0.1, 0.1); }), ErrorCode::InvalidConfig);
  EXPECT_EQ(code_of([] { FiscalRule(0.3, INFINITY); }), ErrorCode::NonFiniteInput);
  EXPECT_EQ(code_of([] { FiscalRule(0.3, 0.1, {}); }), ErrorCode::InvalidConfig);
}

// --- debt path --------------------------------------------------------------

TEST(DebtPath, ProportionalRuleShrinksDebt) {
  const auto p = simulate_debt_path(FiscalRule(0.0, 0.05), constant_rates(0.02, 0.02), 100.0, 0.0, 60);
  EXPECT_DOUBLE_EQ(p.b[1], 95.0);
  EXPECT_DOUBLE_EQ(p.b[2], 90.25);
  for (std::size_t t = 1; t <= 60; ++t) {
    EXPECT_NEAR(p.b[t], std::pow(0.95, static_cast<double>(t)) * 100.0, 1e-12 * 100.0) << t;
    EXPECT_EQ(p.discounted_b[t], p.b[t]);
  }
}

TEST(DebtPath, NoResponseGrowsAtTheInterestGrowthRatio) {
  const double r = 0.05, g = 0.02;
  const auto p = simulate_debt_path(FiscalRule(0.0, 0.0), constant_rates(r, g), 60.0, 0.0, 200);
  for (std::size_t t = 1; t <= 200; ++t) {
    EXPECT_EQ(p.b[t], (1.0 + r) / (1.0 + g) * p.b[t - 1]);
    EXPECT_NEAR(p.discounted_b[t], 60.0, 1e-10 * 60.0);
  }
  EXPECT_EQ(p.verdict, Verdict::PonziViolation);
}

TEST(DebtPath, EstimatedAggregateRuleIsSustainable) {
  const auto p = simulate_debt_path(FiscalRule(0.358, 0.033), constant_rates(0.03, 0.02), 74.8, 0.0, 500);
  EXPECT_LT(std::fabs(p.discounted_b[500]), 1e-6 * 74.8);
  EXPECT_EQ(p.verdict, Verdict::Sustainable);
  EXPECT_EQ(classify_sustainability(p).verdict, Verdict::Sustainable);
  EXPECT_TRUE(p.warnings.empty());
}

TEST(DebtPath, ShortHorizonIsInconclusive) {
  const auto p = simulate_debt_path(FiscalRule(0.358, 0.033), constant_rates(0.03, 0.02), 74.8, 0.0, 3);
  EXPECT_EQ(p.verdict, Verdict::Inconclusive);
  EXPECT_NE(p.verdict_message.find("longer horizon"), std::string::npos);
  // slow decay that has not reached the tolerance is not a violation either
  const auto slow = simulate_debt_path(FiscalRule(0.0, 0.001), constant_rates(0.02, 0.02), 74.8, 0.0, 100);
  EXPECT_EQ(slow.verdict, Verdict::Inconclusive);
}

TEST(DebtPath, InputErrors) {
  const FiscalRule rule(0.3, 0.05);
  EXPECT_EQ(code_of([&] { simulate_debt_path(rule, constant_rates(0.0, 0.0), 50.0, 0.0, 0); }), ErrorCode::HorizonZero);
  EXPECT_EQ(code_of([&] { simulate_debt_path(rule, constant_rates(-1.0, 0.0), 50.0, 0.0, 10); }),
            ErrorCode::NonPositiveGrossRate);
  EXPECT_EQ(code_of([&] { simulate_debt_path(rule, constant_rates(0.0, -1.5), 50.0, 0.0, 10); }),
            ErrorCode::NonPositiveGrossRate);
  EconomyPath shortr;
  shortr.r = {0.01, 0.02};
  EXPECT_EQ(code_of([&] { simulate_debt_path(rule, shortr, 50.0, 0.0, 10); }), ErrorCode::InvalidConfig);
  EXPECT_EQ(code_of([&] { simulate_debt_path(rule, constant_rates(0.0, 0.0), NAN, 0.0, 10); }), ErrorCode::NonFiniteInput);
}

TEST(DebtPath, RecursionIdentityWithTimeVaryingInputs) {
  std::vector<double> r, g, mu;
  for (int t = 0; t < 80; ++t) {
    r.push_back(0.03 + 0.02 * std::sin(0.3 * t));
    g.push_back(0.02 + 0.03 * std::cos(0.17 * t));
    mu.push_back(0.5 * std::sin(0.11 * t));
  }
  EconomyPath e;
  e.r = r;
  e.g = g;
  const FiscalRule rule(0.358, 0.033, mu);
  const auto p = simulate_debt_path(rule, e, 74.8, 1.2, 80);
  double cumulative = 1.0;
  for (std::size_t t = 1; t <= 80; ++t) {
    const double lhs = p.b[t] * (1.0 + g[t - 1]) / (1.0 + r[t - 1]) + p.s[t];
    EXPECT_NEAR(lhs, p.b[t - 1], 1e-12 * std::max(1.0, std::fabs(p.b[t - 1]))) << t;
    EXPECT_NEAR(p.s[t], 0.358 * p.s[t - 1] + 0.033 * p.b[t - 1] + mu[t - 1], 1e-12) << t;
    cumulative *= (1.0 + g[t - 1]) / (1.0 + r[t - 1]);
    EXPECT_NEAR(p.discounted_b[t], p.b[t] * cumulative, 1e-12 * std::max(1.0, std::fabs(p.b[t])));
  }
}

TEST(DebtPath, SuppliedDiscountReplacesNaturalDiscounting) {
  EconomyPath e = constant_rates(0.03, 0.01);
  e.discount = std::vector<double>{0.5};
  const auto p = simulate_debt_path(FiscalRule(0.0, 0.0), e, 10.0, 0.0, 5);
  for (std::size_t t = 1; t <= 5; ++t) EXPECT_DOUBLE_EQ(p.discounted_b[t], p.b[t] * std::pow(0.5, static_cast<double>(t)));
}

TEST(DebtPath, VerdictIsMonotoneInResponse) {
  bool seen = false;
  for (int k = 0; k <= 40; ++k) {
    const double rho = 0.0025 * k;
    const auto v = simulate_debt_path(FiscalRule(0.358, rho), constant_rates(0.03, 0.02), 74.8, 0.0, 500).verdict;
    if (seen) EXPECT_EQ(v, Verdict::Sustainable) << rho;
    seen = seen || v == Verdict::Sustainable;
  }
  EXPECT_TRUE(seen);
}

TEST(DebtPath, DecayFactorApproximatesDiscountedDebt) {
  // small response, equal rates, surplus starting on its long-run level
  const double phi = 0.358, rho = 0.005, b0 = 74.8;
  const double lr = long_run_response(phi, rho).value;
  const auto p = simulate_debt_path(FiscalRule(phi, rho), constant_rates(0.02, 0.02), b0, lr * b0, 200);
  for (std::size_t n : {100u, 150u, 200u}) {
    const double approx = std::pow(1.0 - lr, static_cast<double>(n + 1)) * b0;
    EXPECT_NEAR(p.discounted_b[n] / approx, 1.0, 0.05) << n;
  }
}

TEST(DebtPath, LargeMuWarnsOnce) {
  tst::WarningCapture w;
  const auto p = simulate_debt_path(FiscalRule(0.2, 0.05, {500.0}), constant_rates(0.0, 0.0), 10.0, 0.0, 20);
  ASSERT_EQ(p.warnings.size(), 1u);
  EXPECT_NE(p.warnings[0].find("bounded"), std::string::npos);
  EXPECT_TRUE(w.contains("mu exceeds 100"));
  SustainabilityOptions o;
  o.mu_cap = 1000.0;
  EXPECT_TRUE(simulate_debt_path(FiscalRule(0.2, 0.05, {500.0}), constant_rates(0.0, 0.0), 10.0, 0.0, 20, o).warnings.empty());
}

// --- scenario files ---------------------------------------------------------

TEST(Scenario, ParsesAllKeys) {
  tst::TempDir dir("scenario");
  dir.write("mu.txt", "# mu\n0.1\n0.2\n\n0.3\n");
  std::istringstream in(
      "name = aggregate\nphi = 0.358\nrho = 0.033\nmu_file = " + dir.file("mu.txt") +
      "\nr = [0.03, 0.03, 0.04]\ng = 0.02\nb0 = 74.8\ns0 = 1\nhorizon = 3\ntolerance = 1e-4\ntail_fraction = 0.5\n");
  const auto sc = parse_scenario(ConfigFile::parse(in, "s.cfg"));
  EXPECT_EQ(sc.name, "aggregate");
  EXPECT_EQ(sc.rule.phi(), 0.358);
  EXPECT_EQ(sc.rule.mu(), (std::vector<double>{0.1, 0.2, 0.3}));
  EXPECT_EQ(sc.economy.r_at(3), 0.04);
  EXPECT_EQ(sc.economy.g_at(3), 0.02);
  EXPECT_EQ(sc.b0, 74.8);
  EXPECT_EQ(sc.s0, 1.0);
  EXPECT_EQ(sc.horizon, 3u);
  EXPECT_EQ(sc.options.tolerance, 1e-4);
  EXPECT_EQ(sc.options.tail_fraction, 0.5);
}

TEST(Scenario, Errors) {
  auto parse = [](const std::string& s) {
    std::istringstream in(s);
    return parse_scenario(ConfigFile::parse(in, "s.cfg"));
  };
  EXPECT_EQ(code_of([&] { parse("phi = 0.3\nrho = 0.1\nb0 = 1\nhorizon = 10\ngamma = 0.1\n"); }), ErrorCode::InvalidConfig);
  EXPECT_EQ(code_of([&] { parse("phi = 0.3\nrho = 0.1\nb0 = 1\n"); }), ErrorCode::InvalidConfig);
  EXPECT_EQ(code_of([&] { parse("phi = 0.3\nrho = 0.1\nb0 = 1\nhorizon = 0\n"); }), ErrorCode::HorizonZero);
  EXPECT_EQ(code_of([&] { parse("phi = 1.2\nrho = 0.1\nb0 = 1\nhorizon = 5\n"); }), ErrorCode::NonStationaryInertia);
  EXPECT_EQ(code_of([&] { parse("phi = 0.3\nrho = 0.1\nb0 = 1\nhorizon = 5\nmu = 1\nmu_file = x\n"); }),
            ErrorCode::InvalidConfig);
  EXPECT_EQ(code_of([&] { parse("phi = 0.3\nrho = 0.1\nb0 = 1\nhorizon = 5\nmu_file = /nonexistent/mu.txt\n"); }),
            ErrorCode::Io);
}

TEST(Scenario, TrajectoryRoundTrips) {
  const auto e = constant_rates(0.03, 0.02);
  const auto p = simulate_debt_path(FiscalRule(0.358, 0.033), e, 74.8, 0.5, 12);
  std::ostringstream out;
  write_trajectory(p, e, out);
  std::istringstream in(out.str());
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "t\tr\tg\ts\tb\tdiscounted_b");
  std::size_t t = 0;
  while (std::getline(in, line)) {
    const auto f = text::split_fields(line, '\t');
    ASSERT_EQ(f.size(), 6u) << line;
    EXPECT_EQ(*text::parse_int(f[0]), static_cast<long long>(t));
    if (t == 0) {
      EXPECT_TRUE(f[1].empty());
    } else {
      EXPECT_EQ(*text::parse_double(f[1]), 0.03);
    }
    EXPECT_EQ(*text::parse_double(f[3]), p.s[t]);
    EXPECT_EQ(*text::parse_double(f[4]), p.b[t]);
    EXPECT_EQ(*text::parse_double(f[5]), p.discounted_b[t]);
    ++t;
  }
  EXPECT_EQ(t, 13u);
}
