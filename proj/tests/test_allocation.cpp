#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "pdpm/allocation.hpp"
#include "pdpm/errors.hpp"
#include "pdpm/experiments.hpp"
#include "pdpm/pricing.hpp"
#include "support/generators.hpp"

using namespace pdpm;

namespace {

std::vector<CompensationFunction> two_linear_one_triple() {
  return {CompensationFunction::L(), CompensationFunction::L(), CompensationFunction::custom("3e", 3, 0, 0)};
}

std::vector<double> default_bounds() {
  ExperimentConfig c;
  c.population.seed = 1;
  return build_population(c).bounds;
}

double sum(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0); }

// Brute-force max θ over all within-group permutations for small n.
double best_scale_over_exchanges(const std::vector<double>& bounds, const Pattern& rho,
                                 const std::vector<CompensationFunction>& comps) {
  std::vector<std::size_t> idx(rho.size());
  std::iota(idx.begin(), idx.end(), 0);
  double best = 0;
  do {
    bool ok = true;
    for (std::size_t i = 0; i < idx.size() && ok; ++i) ok = comps[i].same_function(comps[idx[i]]);
    if (!ok) continue;
    std::vector<double> r(rho.size());
    for (std::size_t i = 0; i < idx.size(); ++i) r[i] = rho[idx[i]];
    best = std::max(best, patterning_scale(bounds, Pattern(r)));
  } while (std::next_permutation(idx.begin(), idx.end()));
  return best;
}

}  // namespace

TEST(AllocateUniform, MinimumBoundTimesReservation) {
  const std::vector<double> b{0.5, 2, 4, 8};
  for (double x : allocate_uniform(b, 0.2)) EXPECT_DOUBLE_EQ(x, 0.4);
  for (double x : allocate_uniform(b, 1.0)) EXPECT_EQ(x, 0.0);
  const std::vector<double> u{1.25, 1.25, 1.25};
  for (double x : allocate_uniform(u, 0.0)) EXPECT_EQ(x, 1.25);
}

TEST(AllocateUniform, RejectsBadReservation) {
  const std::vector<double> b{1, 2};
  EXPECT_THROW(allocate_uniform(b, -0.1), ParameterError);
  EXPECT_THROW(allocate_uniform(b, 1.1), ParameterError);
}

TEST(Patterning, MinRatioScale) {
  const std::vector<double> b{2, 1.6, 1.0};
  const auto r = patterning(b, Pattern({1, 0.6, 0.4}), 0.0);
  EXPECT_DOUBLE_EQ(r.theta, 2.0);
  EXPECT_NEAR(r.budgets[0], 2.0, 1e-15);
  EXPECT_NEAR(r.budgets[1], 1.2, 1e-15);
  EXPECT_NEAR(r.budgets[2], 0.8, 1e-15);
}

TEST(Patterning, ThreeOwnerRemainingBounds) {
  const std::vector<double> b{0.5, 0.7, 0.4};
  const auto r = patterning(b, Pattern({1, 0.6, 0.4}), 0.0);
  EXPECT_NEAR(r.budgets[0], 0.5, 1e-12);
  EXPECT_NEAR(r.budgets[1], 0.3, 1e-12);
  EXPECT_NEAR(r.budgets[2], 0.2, 1e-12);
}

TEST(Patterning, ExchangeRaisesBudgets) {
  const std::vector<double> b{0.5, 0.7, 0.4};
  const auto r = patterning(b, Pattern({1, 0.6, 0.4}), 0.0, true, two_linear_one_triple());
  EXPECT_EQ(r.pattern, Pattern({0.6, 1, 0.4}));
  EXPECT_NEAR(r.budgets[0], 0.42, 1e-12);
  EXPECT_NEAR(r.budgets[1], 0.7, 1e-12);
  EXPECT_NEAR(r.budgets[2], 0.28, 1e-12);
}

TEST(Patterning, ZeroRatioOwnersImposeNoLimit) {
  const std::vector<double> b{3, 0.01, 2};
  const auto r = patterning(b, Pattern({1, 0, 0.5}), 0.0);
  EXPECT_DOUBLE_EQ(r.theta, 3.0);
  EXPECT_EQ(r.budgets[1], 0.0);
}

TEST(Patterning, FeasibleAndExactPattern) {
  gen::Rng rng(31);
  for (int t = 0; t < 1000; ++t) {
    const std::size_t n = static_cast<std::size_t>(rng.integer(1, 25));
    const auto b = rng.reals(n, 0.0, 10.0);
    const Pattern p = rng.pattern(n);
    const double res = rng.uniform(0, 1);
    const auto r = patterning(b, p, res);
    for (std::size_t i = 0; i < n; ++i) {
      EXPECT_LE(r.budgets[i], b[i]);
      EXPECT_GE(r.budgets[i], 0.0);
      EXPECT_NEAR(r.budgets[i], p[i] * r.theta * (1 - res), 1e-15 * std::max(1.0, r.theta));
    }
  }
}

TEST(PatternExchange, SwapsWithinGroup) {
  const std::vector<double> b{0.5, 0.7, 0.4};
  EXPECT_EQ(pattern_exchange(Pattern({1, 0.6, 0.4}), b, two_linear_one_triple()), Pattern({0.6, 1, 0.4}));
}

TEST(PatternExchange, DistinctFunctionsLeavePatternAlone) {
  const std::vector<double> b{0.1, 5, 2, 9};
  const std::vector<CompensationFunction> comps{CompensationFunction::B(), CompensationFunction::L(),
                                                CompensationFunction::C1(), CompensationFunction::C2()};
  const Pattern p({1, 0.2, 0.7, 0.4});
  EXPECT_EQ(pattern_exchange(p, b, comps), p);
}

TEST(PatternExchange, TiesBrokenByIndex) {
  const std::vector<double> b{1, 1, 1};
  const auto comps = std::vector<CompensationFunction>(3, CompensationFunction::L());
  EXPECT_EQ(pattern_exchange(Pattern({0.2, 1, 0.5}), b, comps), Pattern({1, 0.5, 0.2}));
}

TEST(PatternExchange, NeverLowersBudgetAndIsOptimal) {
  gen::Rng rng(32);
  for (int t = 0; t < 1000; ++t) {
    const std::size_t n = static_cast<std::size_t>(rng.integer(1, 6));
    const auto b = rng.reals(n, 0.05, 8.0);
    const Pattern p = rng.pattern(n);
    std::vector<CompensationFunction> comps;
    for (std::size_t i = 0; i < n; ++i) comps.push_back(rng.coin() ? CompensationFunction::L() : CompensationFunction::B());
    const auto plain = patterning(b, p, 0.0);
    const auto ex = patterning(b, p, 0.0, true, comps);
    EXPECT_GE(sum(ex.budgets), sum(plain.budgets) * (1 - 1e-12));
    EXPECT_NEAR(ex.theta, best_scale_over_exchanges(b, p, comps), 1e-12 * ex.theta);
    EXPECT_TRUE(patterns_equivalent(p, ex.pattern, comps));
  }
}

TEST(PatternsEquivalent, Cases) {
  const auto same = std::vector<CompensationFunction>(3, CompensationFunction::L());
  EXPECT_TRUE(patterns_equivalent(Pattern({1, 0.5, 0.2}), Pattern({0.5, 1, 0.2}), same));
  EXPECT_TRUE(patterns_equivalent(Pattern({1, 0.5, 0.2}), Pattern({0.2, 1, 0.5}), same));
  const std::vector<CompensationFunction> mixed{CompensationFunction::L(), CompensationFunction::B(),
                                                CompensationFunction::L()};
  EXPECT_FALSE(patterns_equivalent(Pattern({1, 0.5, 0.2}), Pattern({0.5, 1, 0.2}), mixed));
  EXPECT_TRUE(patterns_equivalent(Pattern({1, 0.5, 0.2}), Pattern({0.2, 0.5, 1}), mixed));
  EXPECT_FALSE(patterns_equivalent(Pattern({1, 0.5, 0.2}), Pattern({1, 0.5, 0.3}), same));
}

TEST(PatternsEquivalent, EquivalentPatternsPriceIdentically) {
  gen::Rng rng(33);
  for (int t = 0; t < 1000; ++t) {
    const std::size_t n = static_cast<std::size_t>(rng.integer(2, 10));
    std::vector<CompensationFunction> comps;
    for (std::size_t i = 0; i < n; ++i) comps.push_back(rng.named_compensation(true));
    const Pattern a = rng.pattern(n, {0, 0.3, 1});
    std::vector<double> shuffled = a.ratios();
    // Shuffle within groups only.
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) {
        if (comps[i].same_function(comps[j]) && rng.coin()) std::swap(shuffled[i], shuffled[j]);
      }
    }
    if (std::find(shuffled.begin(), shuffled.end(), 1.0) == shuffled.end()) continue;
    const Pattern b(shuffled);
    ASSERT_TRUE(patterns_equivalent(a, b, comps));
    const LinearQuery q = rng.query(3);
    if (global_sensitivity(q) < 1e-3) continue;
    const double v = rng.log_uniform(0.1, 50);
    const MechanismKind m = rng.coin() ? MechanismKind::laplace : MechanismKind::sample;
    double pa = 0, pb = 0;
    try {
      pa = quote_price(m, q, v, a, comps).price;
      pb = quote_price(m, q, v, b, comps).price;
    } catch (const CheckerError&) {
      continue;
    }
    EXPECT_NEAR(pa, pb, 1e-9 * pa);
  }
}

TEST(PatternSearch, UniformBoundsReturnOnes) {
  const std::vector<double> b(10, 3.0);
  const auto r = pattern_search(b);
  EXPECT_EQ(r.pattern, Pattern::ones(10));
  EXPECT_EQ(r.objective, 0.0);
}

TEST(PatternSearch, AfResultPassesChecker) {
  const auto b = default_bounds();
  const auto r = pattern_search(b);
  EXPECT_TRUE(r.converged);
  EXPECT_TRUE(check_af_properties(UtilityCurve::sample(1.0, r.pattern)).passed());
  EXPECT_TRUE(r.monotonicity_violations.empty());
  EXPECT_LE(r.iterations, static_cast<std::size_t>(std::ceil(std::log2(1e8)) + 64));
}

TEST(PatternSearch, PafObjectiveBelowAf) {
  const auto b = default_bounds();
  const auto af = pattern_search(b);
  PatternSearchOptions o;
  o.variant = SearchVariant::paf;
  o.theta_lower = 1.5;
  const auto paf = pattern_search(b, o);
  EXPECT_LT(paf.objective, af.objective);
  EXPECT_TRUE(pattern_feasible(paf.pattern, b, o));
}

TEST(PatternSearch, PafWithFixedUpperPassesChecker) {
  const auto b = default_bounds();
  PatternSearchOptions o;
  o.variant = SearchVariant::paf;
  o.theta_lower = 1.5;
  o.theta_upper = 10.0;
  const auto r = pattern_search(b, o);
  EXPECT_TRUE(check_paf_properties(UtilityCurve::sample(1.0, r.pattern), 1.5, 10.0).passed());
}

TEST(PatternSearch, PreservesBoundOrdering) {
  gen::Rng rng(34);
  for (int t = 0; t < 10; ++t) {
    const std::size_t n = static_cast<std::size_t>(rng.integer(5, 80));
    std::vector<double> b(n);
    for (double& x : b) x = std::vector<double>{0.5, 2, 4, 8}[static_cast<std::size_t>(rng.integer(0, 3))];
    b[0] = 8;
    const auto r = pattern_search(b);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        if (b[i] >= b[j]) {
          EXPECT_GE(r.pattern[i], r.pattern[j]);
        }
      }
    }
    EXPECT_TRUE(r.monotonicity_violations.empty());
  }
}

TEST(PatternSearch, StepsRecordFeasibility) {
  const auto r = pattern_search(default_bounds());
  ASSERT_FALSE(r.steps.empty());
  EXPECT_EQ(r.steps.size(), r.iterations);
  bool any_feasible = false;
  for (const auto& s : r.steps) any_feasible = any_feasible || s.feasible;
  EXPECT_TRUE(any_feasible);
}
