#pragma once
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "pdpm/allocation.hpp"
#include "pdpm/compensation.hpp"
#include "pdpm/core_model.hpp"
#include "pdpm/mechanisms.hpp"
#include "pdpm/pricing.hpp"
#include "pdpm/utility.hpp"

namespace pdpm {

enum class ProtocolPreset { UT, PT, UTP, PTP };
enum class AllocatorKind { uniform, patterning };
enum class AfMode { full, partial };

const char* to_string(ProtocolPreset p) noexcept;
ProtocolPreset preset_from_string(const std::string& name);

struct ProtocolConfig {
  std::string name = "UT";
  MechanismKind mechanism = MechanismKind::laplace;
  AllocatorKind allocator = AllocatorKind::uniform;
  bool exchange = false;
  AfMode af_mode = AfMode::full;
  // Partial mode. Laplace with both unset selects the range from the
  // compensation functions; Sample defaults θ^L to 1.5 and θ^U to the
  // largest scale the initial bounds allow.
  std::optional<double> theta_lower;
  std::optional<double> theta_upper;
  double r = 0.2;
  double profit_rate = 0.0;
  double sigma = 1e-8;
  CheckOptions check;
  // DEVIATION from the trading loop when true: deduct the consumed losses
  // ε_i instead of the full budgets ε̄_i.
  bool deduct_consumed_only = false;

  // UT = Laplace+Uniform+full, PT = Sample+Patterning (AF search),
  // UTP = Laplace+Uniform+partial, PTP = Sample+Patterning (PAF search).
  static ProtocolConfig preset(ProtocolPreset p);

  void validate() const;
};

struct Owner {
  double bound;
  CompensationFunction compensation;
};

struct TransactionRecord {
  std::uint64_t sequence = 0;
  std::vector<double> query;
  double v = 0.0;
  double v_min = 0.0;
  bool accepted = false;
  RejectReason reason = RejectReason::none;
  double theta = 0.0;
  std::vector<double> budgets;
  std::vector<double> losses;
  double price = 0.0;
  std::vector<double> compensation;
  std::optional<double> answer;
};

// One JSON object per line with keys: seq, query, v, v_min, status, reason,
// theta, budgets, losses, price, compensation, answer.
std::string to_json_line(const TransactionRecord& r);

struct OwnerLedger {
  double initial_bound = 0.0;
  double remaining_bound = 0.0;
  double consumed_loss = 0.0;
  double compensation = 0.0;
};

struct LedgerSummary {
  std::vector<OwnerLedger> owners;
  std::size_t accepted = 0;
  std::size_t rejected = 0;
  double total_payments = 0.0;
  double total_compensation = 0.0;
  double average_traded_loss = 0.0;  // Σ_i consumed_i / n
};

// Pattern and PAF range fixed at session start; reusable across sessions
// that share the same owners.
struct SessionSetup {
  Pattern pattern;
  std::optional<PafRange> range;
  std::optional<PatternSearchResult> search;
};

SessionSetup prepare_session(const ProtocolConfig& config, const std::vector<Owner>& owners);

class Session {
 public:
  Session(ProtocolConfig config, std::vector<Owner> owners, Database db, std::uint64_t seed);
  Session(ProtocolConfig config, std::vector<Owner> owners, Database db, std::uint64_t seed, SessionSetup setup);

  const ProtocolConfig& config() const noexcept { return config_; }
  const Pattern& pattern() const noexcept { return setup_.pattern; }
  const std::optional<PafRange>& paf_range() const noexcept { return setup_.range; }
  const SessionSetup& setup() const noexcept { return setup_; }
  std::size_t size() const noexcept { return owners_.size(); }

  bool exhausted() const;

  // Allocates budgets for q and returns v̌. Throws MarketExhausted.
  double offer(const LinearQuery& q);

  // Pricing function of the pending offer.
  const PricingFunction& pending_pricing() const;

  // Variances a buyer can purchase for the pending offer.
  std::pair<double, double> pending_window() const;

  // Answers the pending offer with variance v; rejections leave the ledger untouched.
  TransactionRecord purchase(const LinearQuery& q, double v);

  LedgerSummary settle() const;

  const std::vector<TransactionRecord>& events() const noexcept { return events_; }
  void export_events(std::ostream& out) const;

 private:
  struct Pending {
    std::uint64_t sequence;
    LinearQuery query;
    std::vector<double> budgets;
    double theta_cap;
    double v_min;
    PricingFunction pricing;
  };

  ProtocolConfig config_;
  std::vector<Owner> owners_;
  std::vector<CompensationFunction> compensations_;
  Database db_;
  NoiseSource rng_;
  SessionSetup setup_;
  std::vector<OwnerLedger> ledger_;
  std::optional<Pending> pending_;
  std::uint64_t next_sequence_ = 1;
  std::vector<TransactionRecord> events_;
  double payments_ = 0.0;
};

Session open_session(const ProtocolConfig& config, const std::vector<Owner>& owners, const Database& db,
                     std::uint64_t seed);

}  // namespace pdpm
