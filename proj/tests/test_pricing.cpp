#include <gtest/gtest.h>

#include <cmath>

#include "pdpm/errors.hpp"
#include "pdpm/pricing.hpp"
#include "support/generators.hpp"
#include "support/oracles.hpp"

using namespace pdpm;

namespace {

const LinearQuery kUnit({0, 1});

std::vector<CompensationFunction> repeat(const CompensationFunction& f, std::size_t n) {
  return std::vector<CompensationFunction>(n, f);
}

std::vector<double> mid_range_pattern() {
  std::vector<double> r(200, 0.75);
  for (std::size_t i = 100; i < 200; ++i) r[i] = 1.0;
  return r;
}

bool curvature_holds(const UtilityCurve& c, double t) {
  const double v = c.value(t);
  const auto d = c.derivatives(t);
  return v * d.second <= 2 * d.first * d.first;
}

}  // namespace

TEST(QuotePrice, LaplaceThreeLinearOwners) {
  const auto q = quote_price(MechanismKind::laplace, kUnit, 2.0, Pattern::ones(3), repeat(CompensationFunction::L(), 3));
  EXPECT_NEAR(q.theta, 1.0, 1e-12);
  EXPECT_NEAR(q.price, 6.0, 1e-11);
}

TEST(QuotePrice, ThreeOwnerPatternPrice) {
  const Pattern rho({1, 0.6, 0.4});
  const std::vector<CompensationFunction> comps{CompensationFunction::L(), CompensationFunction::L(),
                                                CompensationFunction::custom("3e", 3, 0, 0)};
  const double v = utility_laplace(kUnit, 1.5);
  const auto q = quote_price(MechanismKind::laplace, kUnit, v, rho, comps);
  EXPECT_NEAR(q.theta, 1.5, 1e-10);
  EXPECT_NEAR(q.losses.values()[0], 1.5, 1e-10);
  EXPECT_NEAR(q.losses.values()[1], 0.9, 1e-10);
  EXPECT_NEAR(q.losses.values()[2], 0.6, 1e-10);
  EXPECT_NEAR(q.price, 6.6, 1e-9);
}

TEST(QuotePrice, ProfitRateMultipliesCost) {
  const auto q = quote_price(MechanismKind::laplace, kUnit, 2.0, Pattern::ones(3), repeat(CompensationFunction::L(), 3), 0.25);
  EXPECT_NEAR(q.price, 7.5, 1e-10);
  double comp = 0;
  for (double c : q.compensation) comp += c;
  EXPECT_NEAR(comp, 6.0, 1e-10);
}

TEST(QuotePrice, PriceVanishesAsVarianceGrows) {
  const PricingFunction p(MechanismKind::laplace, Pattern::ones(4), repeat(CompensationFunction::C1(), 4));
  double prev = p.price(kUnit, 0.1);
  for (double v = 0.2; v < 1e8; v *= 1.7) {
    const double cur = p.price(kUnit, v);
    EXPECT_LT(cur, prev);
    prev = cur;
  }
  EXPECT_LT(prev, 0.1);
}

TEST(QuotePrice, ExponentialMechanismUnsupported) {
  EXPECT_THROW(PricingFunction(MechanismKind::exponential, Pattern::ones(2), repeat(CompensationFunction::L(), 2)),
               UnsupportedError);
}

TEST(CostOfLosses, Formulas) {
  const std::vector<double> zero{0, 0, 0};
  EXPECT_EQ(cost_of_losses(zero, repeat(CompensationFunction::S(), 3)), 0.0);
  const std::vector<double> four{4};
  EXPECT_NEAR(cost_of_losses(four, {CompensationFunction::B()}), 4.0, 1e-15);
  const std::vector<double> ones{1, 1, 1, 1};
  EXPECT_NEAR(cost_of_losses(ones, {CompensationFunction::B(), CompensationFunction::L(), CompensationFunction::C1(),
                                    CompensationFunction::C2()}),
              8.0, 1e-14);
}

TEST(CostOfLosses, MatchesOracle) {
  gen::Rng rng(10);
  for (int t = 0; t < 200; ++t) {
    const std::size_t n = static_cast<std::size_t>(rng.integer(1, 20));
    const auto comps = rng.compensations(n, true);
    const auto losses = rng.reals(n, 0, 3);
    double expect = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const std::string& tag = comps[i].tag();
      const oracle::Coeffs k = tag == "B" ? oracle::Coeffs{0, 2, 0}
                               : tag == "L" ? oracle::Coeffs{2, 0, 0}
                               : tag == "C1" ? oracle::Coeffs{1, 1, 0}
                               : tag == "C2" ? oracle::Coeffs{1.5, 0.5, 0}
                                             : oracle::Coeffs{0, 0, 1};
      expect += oracle::mu(k, losses[i]);
    }
    EXPECT_NEAR(cost_of_losses(losses, comps), expect, 1e-12 * std::max(1.0, expect));
  }
}

TEST(PafRangeTest, RejectsBadOrder) {
  EXPECT_THROW(PafRange(2.0, 1.0), ParameterError);
  EXPECT_THROW(PafRange(0.0, 1.0), ParameterError);
  const auto [lo, hi] = PafRange(1.0, 2.0).variance_range(UtilityCurve::laplace(1.0));
  EXPECT_NEAR(lo, 0.5, 1e-15);
  EXPECT_NEAR(hi, 2.0, 1e-15);
}

TEST(CheckAf, LaplacePasses) {
  for (double dq : {0.5, 1.0, 7.0}) EXPECT_TRUE(check_af_properties(UtilityCurve::laplace(dq)).passed());
}

TEST(CheckAf, ZeroOneSamplePatternsPass) {
  gen::Rng rng(12);
  for (int t = 0; t < 20; ++t) {
    const auto c = UtilityCurve::sample(1.0, rng.pattern(static_cast<std::size_t>(rng.integer(1, 200)), {0, 1}));
    const auto r = check_af_properties(c);
    EXPECT_TRUE(r.passed()) << testing::PrintToString(r.failed());
  }
}

TEST(CheckAf, MidRangePatternFailsCurvature) {
  const auto c = UtilityCurve::sample(1.0, Pattern(mid_range_pattern()));
  const auto r = check_af_properties(c);
  ASSERT_NE(r.find("curvature"), nullptr);
  EXPECT_FALSE(r.find("curvature")->passed);
  ASSERT_TRUE(r.find("curvature")->first_violation.has_value());
  bool fails_in_window = false;
  for (double t = 1.0 + 1e-3; t < 1.5; t += 1e-3) fails_in_window = fails_in_window || !curvature_holds(c, t);
  EXPECT_TRUE(fails_in_window);
}

TEST(CheckAf, ExponentialNeedsFallback) {
  EXPECT_THROW(check_af_properties(UtilityCurve::exponential(10)), UnsupportedError);
}

TEST(CheckAf, ReportsFirstViolation) {
  const auto c = UtilityCurve::sample(1.0, Pattern(mid_range_pattern()));
  const auto r = check_af_properties(c);
  const auto* dec = r.find("decreasing");
  ASSERT_NE(dec, nullptr);
  EXPECT_FALSE(dec->passed);
  EXPECT_GT(*dec->first_violation, 1.0);
  EXPECT_LT(*dec->first_violation, 1.3);
}

TEST(CheckPaf, LaplacePassesForAnyRange) {
  gen::Rng rng(13);
  for (int t = 0; t < 30; ++t) {
    const double lo = rng.log_uniform(1e-3, 10), hi = lo * rng.log_uniform(1, 20);
    const auto r = check_paf_properties(UtilityCurve::laplace(1.0), lo, hi);
    EXPECT_TRUE(r.passed()) << lo << " " << hi << " " << testing::PrintToString(r.failed());
  }
}

TEST(CheckPaf, RejectsReversedRange) {
  EXPECT_THROW(check_paf_properties(UtilityCurve::laplace(1.0), 2.0, 1.0), ParameterError);
}

TEST(CheckPaf, IntervalConditionDetectsViolation) {
  // θ ↦ U with a flat Bernoulli plateau breaks U(θ+θL) ≤ harmonic bound.
  const auto c = UtilityCurve::sample(1.0, Pattern(mid_range_pattern()));
  const auto r = check_paf_properties(c, 0.5, 4.0);
  EXPECT_FALSE(r.passed());
}

TEST(SuperadditiveConditions, ExponentialCompensationCurvatureBound) {
  const auto s = repeat(CompensationFunction::S(), 3);
  EXPECT_TRUE(check_laplace_corollary(s, 0.5, 1.0).find("corollary_curvature")->passed);
  EXPECT_TRUE(check_laplace_corollary(s, 0.5, 0.999).find("corollary_curvature")->passed);
  EXPECT_FALSE(check_laplace_corollary(s, 0.5, 1.01).find("corollary_curvature")->passed);
}

TEST(SuperadditiveConditions, LinearCompensationIsVacuous) {
  const auto l = repeat(CompensationFunction::L(), 3);
  EXPECT_TRUE(check_laplace_corollary(l, 0.01, 1e3).passed());
  EXPECT_TRUE(check_superadditive_conditions(UtilityCurve::laplace(1.0), l, 0.01, 1e3).passed());
}

TEST(SuperadditiveConditions, EndpointHoldsAtHalf) {
  EXPECT_LE(std::expm1(std::sqrt(2.0) * 0.5), 2 * std::expm1(0.5));
  EXPECT_TRUE(check_laplace_corollary({CompensationFunction::S()}, 0.5, 0.9).find("corollary_endpoint")->passed);
}

TEST(SuperadditiveConditions, EndpointFailsForLargeLowerBound) {
  // e^{√2 θ} − 1 > 2(e^θ − 1) once θ is a little above 1.
  EXPECT_FALSE(check_laplace_corollary({CompensationFunction::S()}, 3.0, 3.0).find("corollary_endpoint")->passed);
}

TEST(SuperadditiveConditions, GeneralFormAgreesWithCorollaryOnLaplace) {
  gen::Rng rng(14);
  for (int t = 0; t < 40; ++t) {
    const double lo = rng.uniform(0.05, 2.0), hi = lo + rng.uniform(0.0, 2.0);
    const auto s = repeat(CompensationFunction::S(), 2);
    const bool corollary = check_laplace_corollary(s, lo, hi).passed();
    const bool general = check_superadditive_conditions(UtilityCurve::laplace(1.0), s, lo, hi).passed();
    EXPECT_EQ(corollary, general) << lo << " " << hi;
  }
}

TEST(RangeSelection, ExponentialCompensationOwners) {
  const PafRange r = select_paf_range_laplace(repeat(CompensationFunction::S(), 5));
  EXPECT_NEAR(r.theta_upper, 1.0, 1e-6);
  const auto [vlo, vhi] = r.variance_range(UtilityCurve::laplace(1.0));
  EXPECT_NEAR(vlo, 2.0, 1e-5);
  EXPECT_GT(vhi, vlo);
  EXPECT_LE(r.theta_lower, r.theta_upper);
}

TEST(RangeSelection, LinearOwnersReachCap) {
  const RangeSelectionOptions o;
  const PafRange r = select_paf_range_laplace(repeat(CompensationFunction::L(), 5), o);
  EXPECT_EQ(r.theta_upper, o.cap);
}

TEST(RangeSelection, SubadditiveOwnersGetFullRange) {
  const RangeSelectionOptions o;
  const PafRange r = select_paf_range_laplace(repeat(CompensationFunction::B(), 5), o);
  EXPECT_EQ(r.theta_lower, o.grid_lower);
  EXPECT_EQ(r.theta_upper, o.cap);
}

TEST(RangeSelection, SelectedRangePassesCorollary) {
  const auto comps = std::vector<CompensationFunction>{CompensationFunction::S(), CompensationFunction::L(),
                                                       CompensationFunction::B()};
  const PafRange r = select_paf_range_laplace(comps);
  CheckOptions o;
  o.rel_tol = 1e-8;
  EXPECT_TRUE(check_laplace_corollary(comps, r.theta_lower, r.theta_upper, o).passed());
}

TEST(PricingProperties, CostRecovery) {
  gen::Rng rng(15);
  int delivered = 0;
  for (int t = 0; t < 300; ++t) {
    const std::size_t n = static_cast<std::size_t>(rng.integer(1, 15));
    const double profit = rng.coin() ? 0.0 : rng.uniform(0, 1);
    const PricingFunction p(MechanismKind::sample, rng.pattern(n), rng.compensations(n, true), profit);
    std::optional<PriceQuote> q;
    try {
      q = p.quote(kUnit, rng.log_uniform(0.05, 50));
    } catch (const CheckerError&) {
      continue;  // non-monotone curve, nothing delivered
    }
    ++delivered;
    const double cost = cost_of_losses(q->losses.values(), p.compensations());
    EXPECT_GE(q->price, cost);
    if (profit == 0.0) {
      EXPECT_EQ(q->price, cost);
    }
  }
  EXPECT_GT(delivered, 150);
}

TEST(PricingProperties, MonotoneInVariance) {
  gen::Rng rng(16);
  for (int t = 0; t < 50; ++t) {
    const std::size_t n = static_cast<std::size_t>(rng.integer(1, 30));
    const PricingFunction p(MechanismKind::sample, rng.pattern(n, {0, 1}), rng.compensations(n, true));
    for (int k = 0; k < 20; ++k) {
      const double v1 = rng.log_uniform(0.01, 100), v2 = v1 * rng.log_uniform(1.0001, 10);
      EXPECT_GE(p.price(kUnit, v1), p.price(kUnit, v2));
    }
  }
}

TEST(PricingProperties, ScaleConsistency) {
  gen::Rng rng(17);
  for (int t = 0; t < 200; ++t) {
    const std::size_t n = static_cast<std::size_t>(rng.integer(1, 10));
    const PricingFunction p(rng.coin() ? MechanismKind::laplace : MechanismKind::sample, rng.pattern(n, {0, 1}),
                            rng.compensations(n, true));
    const LinearQuery q = rng.query(4);
    if (global_sensitivity(q) < 1e-3) continue;
    const double a = rng.coin() ? rng.uniform(0.1, 5) : -rng.uniform(0.1, 5);
    const double v = rng.log_uniform(0.1, 30);
    const double base = p.price(q, v);
    EXPECT_NEAR(p.price(q.scaled(a), a * a * v), base, 1e-9 * base);
  }
}

TEST(PricingProperties, SubadditiveUnderAfPass) {
  gen::Rng rng(18);
  int tested = 0;
  while (tested < 1000) {
    const std::size_t n = static_cast<std::size_t>(rng.integer(1, 20));
    const PricingFunction p(rng.coin() ? MechanismKind::laplace : MechanismKind::sample, rng.pattern(n, {0, 1}),
                            rng.compensations(n, false));
    ASSERT_TRUE(verify_pricing(p).passed());
    for (int k = 0; k < 50; ++k, ++tested) {
      const double v1 = rng.log_uniform(0.05, 50), v2 = rng.log_uniform(0.05, 50);
      const double v = 1.0 / (1.0 / v1 + 1.0 / v2) * rng.uniform(1.0, 3.0);
      EXPECT_LE(p.price(kUnit, v), (p.price(kUnit, v1) + p.price(kUnit, v2)) * (1 + 1e-12));
    }
  }
}

TEST(PricingFunctionTest, CapSetsMinimumVariance) {
  PricingFunction p(MechanismKind::laplace, Pattern::ones(2), repeat(CompensationFunction::L(), 2));
  p.with_theta_cap(2.0);
  EXPECT_NEAR(p.min_variance(kUnit), 0.5, 1e-15);
  EXPECT_EQ(p.admissible(kUnit, 0.49), RejectReason::below_min_variance);
  EXPECT_EQ(p.admissible(kUnit, 0.0), RejectReason::infeasible_v);
  EXPECT_EQ(p.quote(kUnit, 0.5).theta, 2.0);
  try {
    p.quote(kUnit, 0.3);
    FAIL() << "expected rejection";
  } catch (const QuoteRejected& e) {
    EXPECT_EQ(e.reason(), RejectReason::below_min_variance);
    EXPECT_STREQ(to_string(e.reason()), "BELOW_MIN_VARIANCE");
  }
}

TEST(PricingFunctionTest, RangeRestrictsVariance) {
  PricingFunction p(MechanismKind::laplace, Pattern::ones(2), repeat(CompensationFunction::S(), 2));
  p.with_range(PafRange(0.5, 1.0));
  EXPECT_EQ(p.admissible(kUnit, 1.9), RejectReason::outside_paf_range);
  EXPECT_EQ(p.admissible(kUnit, 8.1), RejectReason::outside_paf_range);
  EXPECT_EQ(p.admissible(kUnit, 2.0), RejectReason::none);
  EXPECT_EQ(p.admissible(kUnit, 8.0), RejectReason::none);
  EXPECT_FALSE(p.try_quote(kUnit, 1.0).has_value());
  const auto [lo, hi] = p.accepted_variance(kUnit);
  EXPECT_NEAR(lo, 2.0, 1e-12);
  EXPECT_NEAR(hi, 8.0, 1e-12);
}

TEST(VerifyPricing, SuperadditiveOwnersFailWithoutRange) {
  const PricingFunction p(MechanismKind::laplace, Pattern::ones(2), repeat(CompensationFunction::S(), 2));
  const auto r = verify_pricing(p);
  EXPECT_FALSE(r.passed());
  EXPECT_EQ(r.failed(), std::vector<std::string>{"compensation_class"});
}

TEST(VerifyPricing, SelectedRangePasses) {
  PricingFunction p(MechanismKind::laplace, Pattern::ones(3), repeat(CompensationFunction::S(), 3));
  p.with_range(select_paf_range_laplace(p.compensations()));
  const auto r = verify_pricing(p);
  EXPECT_TRUE(r.passed()) << testing::PrintToString(r.failed());
}

TEST(Grids, Shapes) {
  const auto g = geometric_grid(1e-4, 50, 2000);
  ASSERT_EQ(g.size(), 2000u);
  EXPECT_DOUBLE_EQ(g.front(), 1e-4);
  EXPECT_DOUBLE_EQ(g.back(), 50);
  for (std::size_t i = 1; i < g.size(); ++i) EXPECT_LT(g[i - 1], g[i]);
  const auto l = linear_grid(1, 2, 11);
  EXPECT_DOUBLE_EQ(l[5], 1.5);
}
