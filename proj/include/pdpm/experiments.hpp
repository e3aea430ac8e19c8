#pragma once
#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "pdpm/arbitrage_audit.hpp"
#include "pdpm/compensation.hpp"
#include "pdpm/core_model.hpp"
#include "pdpm/protocol.hpp"

namespace pdpm {

enum class OwnerGroup { conservative, hesitant, ordinary, liberal };
const char* to_string(OwnerGroup g) noexcept;

struct GroupSpec {
  double fraction;
  double bound;
};

struct PopulationSpec {
  std::size_t n = 200;
  std::size_t domain = 20;
  // conservative, hesitant, ordinary, liberal
  std::array<GroupSpec, 4> groups{{{0.16, 0.5}, {0.16, 2.0}, {0.33, 4.0}, {0.34, 8.0}}};
  std::uint64_t seed = 0;

  void validate() const;
};

// floor(fraction·n) per group; the remainder goes to the liberal group.
std::array<std::size_t, 4> group_sizes(const PopulationSpec& spec);

enum class CompensationScheme { selectable, semiselectable, unselectable, all_superadditive };
const char* to_string(CompensationScheme s) noexcept;
CompensationScheme scheme_from_string(const std::string& name);

struct Population {
  std::size_t domain = 20;
  std::vector<OwnerGroup> groups;
  std::vector<double> bounds;
  std::vector<int> values;
  std::vector<CompensationFunction> compensations;

  std::size_t size() const noexcept { return bounds.size(); }
  std::vector<Owner> owners() const;
  Database database() const;
  // First k owners, keeping their groups, values and compensations.
  Population truncated(std::size_t k) const;
};

// Owners are assigned to groups by a seeded shuffle; data values are uniform
// on {1..domain}. Every owner starts on μ^L until a scheme is assigned.
Population generate_population(const PopulationSpec& spec);

// Seed-dependent choices (selectable, semiselectable) draw from `seed`.
void assign_compensation(Population& pop, CompensationScheme scheme, std::uint64_t seed);

// 0/1 weights with at least one 0 and one 1, so Δq = 1.
LinearQuery random_counting_query(std::size_t domain, NoiseSource& rng);

struct ExperimentConfig {
  ProtocolConfig protocol = ProtocolConfig::preset(ProtocolPreset::UT);
  PopulationSpec population;
  CompensationScheme scheme = CompensationScheme::semiselectable;
  double max_variance = 100.0;  // V
  std::size_t queries = 100;
  std::size_t rounds = 100;
  std::uint64_t seed = 0;

  void validate() const;
};

// Population from config.population with its scheme applied.
Population build_population(const ExperimentConfig& config);

struct TradingResult {
  double mean = 0.0;
  double stderr_ = 0.0;
  std::vector<double> per_round;
  std::size_t accepted = 0;
  std::size_t rejected = 0;
  std::size_t no_trade = 0;
};

// Seed of round k: mix_seed(seed ⊕ k).
std::uint64_t round_seed(std::uint64_t seed, std::size_t round) noexcept;

// Mean over rounds of Σ_i ε_i / n. Buyers draw v uniformly from the
// purchasable window clipped to V; an empty window is a non-trade.
TradingResult run_trading(const ExperimentConfig& config);
// `events`, when given, receives the JSON-lines log of the first round.
TradingResult run_trading(const ExperimentConfig& config, const Population& pop, const SessionSetup& setup,
                          std::ostream* events = nullptr);

// Pricing function a fresh session quotes for a Δq = 1 query.
PricingFunction initial_pricing(const ExperimentConfig& config, const Population& pop, const SessionSetup& setup);

AttackReport run_arbitrage(const ExperimentConfig& config, const std::vector<double>& v_grid,
                           std::size_t combo_trials = 0);

struct TradingRow {
  std::string protocol;
  std::string parameter;
  double value;
  TradingResult result;
};

struct ArbitrageRow {
  std::string protocol;
  AuditRow row;
};

struct SweepGrids {
  std::vector<double> min_bounds{0.25, 0.5, 1.0, 2.0};
  std::vector<double> max_bounds{4.0, 6.0, 8.0, 10.0};
  std::vector<double> theta_lowers{0.5, 1.0, 1.5, 2.0};
  std::vector<double> max_variances{20.0, 40.0, 60.0, 80.0, 100.0};
  std::vector<double> reservation_rates{0.1, 0.2, 0.3, 0.4, 0.5};
  std::vector<double> v_grid;  // empty: 50 log-spaced points on [0.1, 100]
};

// UT and PT with the conservative (min) and liberal (max) bounds varied.
std::vector<TradingRow> rq1_bounds(const ExperimentConfig& base, const SweepGrids& grids = {});
// PT and PTP/θ^L with V and r varied.
std::vector<TradingRow> rq2_partial(const ExperimentConfig& base, const SweepGrids& grids = {});
// PT, PT+PE, PTP, PTP+PE per compensation scheme (parameter = scheme).
std::vector<TradingRow> rq3_exchange(const ExperimentConfig& base);
// UT and PT split audits.
std::vector<ArbitrageRow> rq4_arbitrage(const ExperimentConfig& base, const SweepGrids& grids = {});
// UTP on the all-superadditive scheme and PTP.
std::vector<ArbitrageRow> rq5_partial_arbitrage(const ExperimentConfig& base, const SweepGrids& grids = {});

}  // namespace pdpm
