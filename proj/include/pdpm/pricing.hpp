#pragma once
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "pdpm/compensation.hpp"
#include "pdpm/core_model.hpp"
#include "pdpm/errors.hpp"
#include "pdpm/mechanisms.hpp"
#include "pdpm/utility.hpp"

namespace pdpm {

enum class RejectReason { none, below_min_variance, outside_paf_range, market_exhausted, infeasible_v };

// BELOW_MIN_VARIANCE, OUTSIDE_PAF_RANGE, MARKET_EXHAUSTED, INFEASIBLE_V; "" for none.
const char* to_string(RejectReason r) noexcept;

class QuoteRejected : public InfeasibleError {
 public:
  QuoteRejected(RejectReason reason, const std::string& what) : InfeasibleError(what), reason_(reason) {}
  RejectReason reason() const noexcept { return reason_; }

 private:
  RejectReason reason_;
};

// Scale interval [θ^L, θ^U] of a partially arbitrage-free pricing function.
struct PafRange {
  double theta_lower;
  double theta_upper;

  PafRange(double lower, double upper);

  // [U(θ^U), U(θ^L)].
  std::pair<double, double> variance_range(const UtilityCurve& curve) const;
};

struct PriceQuote {
  double price;
  double theta;
  PrivacyLossVector losses;
  std::vector<double> compensation;
};

double cost_of_losses(std::span<const double> losses, const std::vector<CompensationFunction>& compensations);

// Π(q, v) = (1 + profit_rate)·Σ_i μ_i(ρ_i·U⁻¹(v)).
//
// A scale cap θ̄ (the largest allocated budget scale) sets the minimum
// tradable variance v̌ = U(θ̄); a PafRange further restricts v to its
// variance interval.
class PricingFunction {
 public:
  PricingFunction(MechanismKind mechanism, Pattern rho, std::vector<CompensationFunction> compensations,
                  double profit_rate = 0.0);

  PricingFunction& with_range(PafRange range);
  PricingFunction& with_theta_cap(double theta_cap);

  MechanismKind mechanism() const noexcept { return mechanism_; }
  const Pattern& pattern() const noexcept { return rho_; }
  const std::vector<CompensationFunction>& compensations() const noexcept { return compensations_; }
  double profit_rate() const noexcept { return profit_rate_; }
  const std::optional<PafRange>& range() const noexcept { return range_; }
  const std::optional<double>& theta_cap() const noexcept { return theta_cap_; }

  UtilityCurve curve(const LinearQuery& q) const;
  // v̌; 0 when no cap is set.
  double min_variance(const LinearQuery& q) const;
  // Variances accepted for q: [max(v̌, U(θ^U)), U(θ^L)] (upper end +inf without a range).
  std::pair<double, double> accepted_variance(const LinearQuery& q) const;

  RejectReason admissible(const LinearQuery& q, double v) const;
  PriceQuote quote(const LinearQuery& q, double v) const;
  std::optional<PriceQuote> try_quote(const LinearQuery& q, double v) const;
  double price(const LinearQuery& q, double v) const { return quote(q, v).price; }

 private:
  MechanismKind mechanism_;
  Pattern rho_;
  std::vector<CompensationFunction> compensations_;
  double profit_rate_;
  std::optional<PafRange> range_;
  std::optional<double> theta_cap_;
};

PriceQuote quote_price(MechanismKind mechanism, const LinearQuery& q, double v, const Pattern& rho,
                       const std::vector<CompensationFunction>& compensations, double profit_rate = 0.0);

struct PropertyResult {
  std::string name;
  bool passed = true;
  std::optional<double> first_violation;  // θ of the first failing grid point
  std::string detail;
};

struct CheckReport {
  std::vector<PropertyResult> properties;

  bool passed() const;
  const PropertyResult* find(const std::string& name) const;
  std::vector<std::string> failed() const;
  void merge(const CheckReport& other);
};

std::vector<double> geometric_grid(double lo, double hi, std::size_t points);
std::vector<double> linear_grid(double lo, double hi, std::size_t points);

struct CheckOptions {
  double beta = 1e-6;
  // Grid for "for all θ > 0" quantifiers.
  std::vector<double> grid = geometric_grid(1e-4, 50.0, 2000);
  // Points of the linear grid used on bounded intervals such as [θ^L, θ^U].
  std::size_t interval_points = 1000;
  // Relative slack on inequality checks.
  double rel_tol = 1e-12;
  // Use central differences when a curve has no analytic derivatives.
  bool finite_difference_fallback = false;
};

// Properties checked on the Δq-normalized curve:
//   divergence  U(1e-6) > 1e9·U(1)
//   decreasing  ∂v/∂θ + β ≤ 0 on the grid
//   curvature   v·∂²v/∂θ² ≤ 2(∂v/∂θ)² on the grid
CheckReport check_af_properties(const UtilityCurve& curve, const CheckOptions& opts = {});

// interval    U(θ+θ^L) ≤ 1/(1/U(θ^L) + 1/U(θ)) for θ ∈ [θ^L, θ^U − θ^L]
// decreasing  as above on the full grid
// curvature   as above on [θ^L, θ^U]
CheckReport check_paf_properties(const UtilityCurve& curve, double theta_lower, double theta_upper,
                                 const CheckOptions& opts = {});

// For each superadditive μ_i:
//   superadditive_endpoint   U(θ^A_i) ≤ U(θ^L)/2, θ^A_i = μ_i⁻¹(2μ_i(ρ_i θ^L))/ρ_i
//   superadditive_curvature  v·∂²v/∂c_i² ≤ 2(∂v/∂c_i)² on [θ^L, θ^U], c_i = μ_i(ρ_i θ)
// Owners with ρ_i = 0 sell nothing and are skipped.
CheckReport check_superadditive_conditions(const UtilityCurve& curve,
                                           const std::vector<CompensationFunction>& compensations,
                                           double theta_lower, double theta_upper,
                                           const CheckOptions& opts = {});

// Laplace specialization, for every μ_i:
//   corollary_endpoint   μ_i(√2·θ^L) ≤ 2μ_i(θ^L)
//   corollary_curvature  θ·μ_i″(θ) ≤ μ_i′(θ) on [θ^L, θ^U]
CheckReport check_laplace_corollary(const std::vector<CompensationFunction>& compensations, double theta_lower,
                                    double theta_upper, const CheckOptions& opts = {});

struct RangeSelectionOptions {
  double grid_lower = 1e-4;
  double cap = 50.0;
  std::size_t points = 2000;
  double rel_slack = 0.0;
};

// θ^L is the smallest θ meeting both corollary conditions; θ^U ends the
// contiguous run from θ^L on which the curvature condition still holds.
// Without superadditive owners the full [grid_lower, cap] range is returned.
PafRange select_paf_range_laplace(const std::vector<CompensationFunction>& compensations,
                                  const RangeSelectionOptions& opts = {});

// Full verdict for a pricing function on a Δq = 1 query: the AF checks plus
// a compensation_class property when no range is set, otherwise the PAF
// checks plus the superadditive conditions.
CheckReport verify_pricing(const PricingFunction& pricing, const CheckOptions& opts = {});

}  // namespace pdpm
