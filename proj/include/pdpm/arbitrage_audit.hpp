#pragma once
#include <functional>
#include <iosfwd>
#include <optional>
#include <vector>

#include "pdpm/core_model.hpp"
#include "pdpm/mechanisms.hpp"
#include "pdpm/pricing.hpp"

namespace pdpm {

// Π(q, v), or nullopt when the seller refuses to sell (q, v).
using Pricer = std::function<std::optional<double>(const LinearQuery& q, double v)>;

Pricer make_pricer(const PricingFunction& pricing);

struct SplitAttackEntry {
  double v = 0.0;
  double price = 0.0;
  double min_rate = 0.0;  // +inf when no split is purchasable
  int argmin_m = 0;       // 0 when no split is purchasable
  std::vector<int> infeasible_m;
  bool violation = false;
};

// rate = min over purchasable m of m·Π(q, m·v)/Π(q, v).
SplitAttackEntry split_attack(const Pricer& pricer, const LinearQuery& q, double v, int m_lo = 2, int m_hi = 10);

// One bought answer: query s·q at variance `variance`, weighted by a in the
// buyer's estimate Σ_j a_j ỹ_j.
struct AttackComponent {
  double scale;
  double coefficient;
  double variance;
};

// Σ_j Π(s_j·q, v_j), or nullopt if any component cannot be bought.
std::optional<double> decomposition_cost(const Pricer& pricer, const LinearQuery& q,
                                         const std::vector<AttackComponent>& components);

struct ComboAttackEntry {
  double v = 0.0;
  double price = 0.0;
  double best_cost = 0.0;  // +inf when every trial was pruned
  double best_rate = 0.0;
  std::size_t trials = 0;
  std::size_t pruned = 0;
  std::vector<AttackComponent> best;
  bool violation = false;
};

// Random multisets of 2..5 components with Σ a_j s_j = 1 and
// Σ a_j² v_j ∈ [0.9v, v]; a violation is a total cost below Π(q, v).
ComboAttackEntry combo_attack(const Pricer& pricer, const LinearQuery& q, double v, std::size_t trials,
                              NoiseSource& rng);

inline constexpr double kViolationTolerance = 1e-9;

struct AuditRow {
  double v = 0.0;
  double min_rate = 0.0;
  int argmin_m = 0;
  std::size_t violations = 0;
  std::size_t n_infeasible = 0;
  bool price_defined = true;
  std::optional<ComboAttackEntry> combo;
};

struct AttackReport {
  std::vector<AuditRow> rows;

  // Smallest split rate over rows with a finite rate; +inf if none.
  double min_rate() const;
  std::size_t violations() const;

  // Columns: v, min_rate, argmin_m, violations.
  void write_csv(std::ostream& out) const;
};

struct SweepOptions {
  int m_lo = 2;
  int m_hi = 10;
  std::size_t combo_trials = 0;
  std::uint64_t seed = 0;
};

// Grid points where Π(q, v) itself is undefined are kept with price_defined = false.
AttackReport sweep(const Pricer& pricer, const LinearQuery& q, const std::vector<double>& v_grid,
                   const SweepOptions& opts = {});

}  // namespace pdpm
