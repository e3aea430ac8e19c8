#pragma once
#include <optional>
#include <span>
#include <vector>

#include "pdpm/compensation.hpp"
#include "pdpm/core_model.hpp"
#include "pdpm/pricing.hpp"

namespace pdpm {

// ε̄_i = min_j ε̂_j·(1 − r).
std::vector<double> allocate_uniform(std::span<const double> bounds, double r);

// θ = sup{θ | ρ_i·θ ≤ ε̂_i ∀i}, starting from max ε̂; owners with ρ_i = 0 impose no limit.
double patterning_scale(std::span<const double> bounds, const Pattern& rho);

struct PatterningResult {
  Pattern pattern;  // after exchange, if requested
  double theta;     // scale before the reservation factor
  std::vector<double> budgets;
};

// ε̄ = θ·ρ·(1 − r). With exchange, ρ is first replaced by
// pattern_exchange(ρ, bounds, compensations).
PatterningResult patterning(std::span<const double> bounds, const Pattern& rho, double r, bool exchange = false,
                            const std::vector<CompensationFunction>& compensations = {});

enum class SearchVariant { af, paf };

struct PatternSearchOptions {
  SearchVariant variant = SearchVariant::af;
  double sigma = 1e-8;
  double theta_lower = 1.5;
  // Unset: θ^U = sup{θ | ρ_i θ ≤ ε̂_i} for each candidate ρ.
  std::optional<double> theta_upper;
  CheckOptions check;
  std::size_t monotonicity_probes = 8;
};

struct SearchStep {
  double t;  // iterate ρ = t·ρ^bound on the unpinned entries
  bool feasible;
};

struct PatternSearchResult {
  Pattern pattern;
  double t = 1.0;
  std::size_t iterations = 0;
  bool converged = true;
  std::vector<SearchStep> steps;
  // Probed points below the returned t that failed the constraints.
  std::vector<double> monotonicity_violations;
  double objective = 0.0;  // Σ_i (ρ_i − ρ^bound_i)²
};

// Bisection between ρ^bound = ε̂/max ε̂ and the 0/1 pattern that keeps only
// the entries equal to 1. Each iterate is accepted if the Sample curve
// satisfies the variant's constraints on the check grid.
PatternSearchResult pattern_search(std::span<const double> bounds, const PatternSearchOptions& opts = {});

// Feasibility of a candidate pattern under the search constraints.
bool pattern_feasible(const Pattern& rho, std::span<const double> bounds, const PatternSearchOptions& opts);

// Within each group of owners sharing a compensation tag, the largest
// pattern elements go to the owners with the largest remaining bounds
// (ties broken by owner index).
Pattern pattern_exchange(const Pattern& rho, std::span<const double> bounds,
                         const std::vector<CompensationFunction>& compensations);

// True iff ρb permutes ρa only within equal-compensation groups.
bool patterns_equivalent(const Pattern& a, const Pattern& b, const std::vector<CompensationFunction>& compensations);

}  // namespace pdpm
