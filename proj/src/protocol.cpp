#include "pdpm/protocol.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

#include "json.hpp"
#include "pdpm/errors.hpp"

namespace pdpm {

namespace {

constexpr double kExhaustedFraction = 1e-12;

std::vector<double> bounds_of(const std::vector<Owner>& owners) {
  std::vector<double> b;
  b.reserve(owners.size());
  for (const auto& o : owners) b.push_back(o.bound);
  return b;
}

std::vector<CompensationFunction> compensations_of(const std::vector<Owner>& owners) {
  std::vector<CompensationFunction> c;
  c.reserve(owners.size());
  for (const auto& o : owners) c.push_back(o.compensation);
  return c;
}

}  // namespace

const char* to_string(ProtocolPreset p) noexcept {
  switch (p) {
    case ProtocolPreset::UT: return "UT";
    case ProtocolPreset::PT: return "PT";
    case ProtocolPreset::UTP: return "UTP";
    case ProtocolPreset::PTP: return "PTP";
  }
  return "?";
}

ProtocolPreset preset_from_string(const std::string& name) {
  if (name == "UT") return ProtocolPreset::UT;
  if (name == "PT") return ProtocolPreset::PT;
  if (name == "UTP") return ProtocolPreset::UTP;
  if (name == "PTP") return ProtocolPreset::PTP;
  throw ConfigError("unknown protocol '" + name + "' (expected UT, PT, UTP or PTP)");
}

ProtocolConfig ProtocolConfig::preset(ProtocolPreset p) {
  ProtocolConfig c;
  c.name = to_string(p);
  switch (p) {
    case ProtocolPreset::UT: break;
    case ProtocolPreset::PT:
      c.mechanism = MechanismKind::sample;
      c.allocator = AllocatorKind::patterning;
      break;
    case ProtocolPreset::UTP: c.af_mode = AfMode::partial; break;
    case ProtocolPreset::PTP:
      c.mechanism = MechanismKind::sample;
      c.allocator = AllocatorKind::patterning;
      c.af_mode = AfMode::partial;
      c.theta_lower = 1.5;
      c.theta_upper = 10.0;
      break;
  }
  return c;
}

void ProtocolConfig::validate() const {
  if (mechanism == MechanismKind::exponential) throw ConfigError("protocols use the Laplace or Sample mechanism");
  if (!(r >= 0.0 && r <= 1.0)) throw ConfigError("reservation rate must lie in [0, 1]");
  if (!(profit_rate >= 0.0) || !std::isfinite(profit_rate)) throw ConfigError("profit rate must be ≥ 0");
  if (!(sigma > 0.0)) throw ConfigError("σ must be > 0");
  if (mechanism == MechanismKind::laplace && allocator == AllocatorKind::patterning) {
    throw ConfigError("the Laplace mechanism requires uniform privacy losses");
  }
  if (exchange && allocator != AllocatorKind::patterning) throw ConfigError("exchange requires the patterning allocator");
  if (theta_lower && !(*theta_lower > 0.0)) throw ConfigError("θ^L must be > 0");
  if (theta_lower && theta_upper && !(*theta_lower <= *theta_upper)) throw ConfigError("θ^L must not exceed θ^U");
}

std::string to_json_line(const TransactionRecord& r) {
  nlohmann::ordered_json j;
  j["seq"] = r.sequence;
  j["query"] = r.query;
  j["v"] = r.v;
  j["v_min"] = std::isfinite(r.v_min) ? nlohmann::ordered_json(r.v_min) : nlohmann::ordered_json(nullptr);
  j["status"] = r.accepted ? "accepted" : "rejected";
  j["reason"] = to_string(r.reason);
  j["theta"] = r.theta;
  j["budgets"] = r.budgets;
  j["losses"] = r.losses;
  j["price"] = r.price;
  j["compensation"] = r.compensation;
  j["answer"] = r.answer ? nlohmann::ordered_json(*r.answer) : nlohmann::ordered_json(nullptr);
  return j.dump();
}

SessionSetup prepare_session(const ProtocolConfig& config, const std::vector<Owner>& owners) {
  config.validate();
  if (owners.empty()) throw ConfigError("a session needs at least one owner");
  const std::vector<double> bounds = bounds_of(owners);
  const std::vector<CompensationFunction> comps = compensations_of(owners);

  SessionSetup s{Pattern::ones(owners.size()), std::nullopt, std::nullopt};
  if (config.allocator == AllocatorKind::patterning) {
    PatternSearchOptions o;
    o.variant = config.af_mode == AfMode::full ? SearchVariant::af : SearchVariant::paf;
    o.sigma = config.sigma;
    o.check = config.check;
    o.theta_lower = config.theta_lower.value_or(1.5);
    o.theta_upper = config.theta_upper;
    if (*std::max_element(bounds.begin(), bounds.end()) > 0.0) {
      s.search = pattern_search(bounds, o);
      s.pattern = s.search->pattern;
    }
  }
  if (config.af_mode == AfMode::partial) {
    try {
      if (config.mechanism == MechanismKind::laplace && !config.theta_lower && !config.theta_upper) {
        s.range = select_paf_range_laplace(comps);
      } else {
        const double lo = config.theta_lower.value_or(1.5);
        const double hi = config.theta_upper ? *config.theta_upper : patterning_scale(bounds, s.pattern);
        s.range = PafRange(lo, hi);
      }
    } catch (const ParameterError& e) {
      throw ConfigError(std::string("infeasible partial arbitrage-free range: ") + e.what());
    }
  }
  return s;
}

Session::Session(ProtocolConfig config, std::vector<Owner> owners, Database db, std::uint64_t seed)
    : Session(config, owners, std::move(db), seed, prepare_session(config, owners)) {}

Session::Session(ProtocolConfig config, std::vector<Owner> owners, Database db, std::uint64_t seed,
                 SessionSetup setup)
    : config_(std::move(config)),
      owners_(std::move(owners)),
      compensations_(compensations_of(owners_)),
      db_(std::move(db)),
      rng_(seed),
      setup_(std::move(setup)) {
  config_.validate();
  if (db_.size() != owners_.size()) throw ConfigError("database must hold one row per owner");
  if (setup_.pattern.size() != owners_.size()) throw ConfigError("pattern length must match the owner count");
  ledger_.resize(owners_.size());
  for (std::size_t i = 0; i < owners_.size(); ++i) {
    if (!(owners_[i].bound >= 0.0) || !std::isfinite(owners_[i].bound)) {
      throw ConfigError("privacy loss bounds must be finite and ≥ 0");
    }
    ledger_[i].initial_bound = owners_[i].bound;
    ledger_[i].remaining_bound = owners_[i].bound;
  }
}

bool Session::exhausted() const {
  return std::any_of(ledger_.begin(), ledger_.end(), [](const OwnerLedger& l) {
    return l.remaining_bound <= kExhaustedFraction * l.initial_bound;
  });
}

double Session::offer(const LinearQuery& q) {
  if (q.dimension() != db_.domain_size()) throw DomainError("query dimension does not match database domain");
  if (exhausted()) {
    TransactionRecord rec;
    rec.sequence = next_sequence_++;
    rec.query = q.weights();
    rec.reason = RejectReason::market_exhausted;
    rec.v_min = std::numeric_limits<double>::infinity();
    events_.push_back(rec);
    pending_.reset();
    throw MarketExhausted("market exhausted: an owner's privacy loss bound is used up");
  }
  std::vector<double> remaining(ledger_.size());
  for (std::size_t i = 0; i < ledger_.size(); ++i) remaining[i] = ledger_[i].remaining_bound;

  Pattern rho = setup_.pattern;
  std::vector<double> budgets;
  double cap = 0.0;
  if (config_.allocator == AllocatorKind::uniform) {
    budgets = allocate_uniform(remaining, config_.r);
    cap = budgets.empty() ? 0.0 : budgets.front();
  } else {
    PatterningResult pr = patterning(remaining, setup_.pattern, config_.r, config_.exchange, compensations_);
    rho = pr.pattern;
    budgets = std::move(pr.budgets);
    cap = pr.theta * (1.0 - config_.r);
  }

  PricingFunction pricing(config_.mechanism, rho, compensations_, config_.profit_rate);
  if (cap > 0.0) pricing.with_theta_cap(cap);
  if (setup_.range) pricing.with_range(*setup_.range);

  const UtilityCurve curve = pricing.curve(q);
  double v_min;
  if (curve.sensitivity() == 0.0) v_min = 0.0;
  else if (cap > 0.0) v_min = curve.value(cap);
  else v_min = std::numeric_limits<double>::infinity();

  pending_.emplace(Pending{next_sequence_++, q, std::move(budgets), cap, v_min, std::move(pricing)});
  return v_min;
}

const PricingFunction& Session::pending_pricing() const {
  if (!pending_) throw ProtocolError("no pending offer");
  return pending_->pricing;
}

std::pair<double, double> Session::pending_window() const {
  if (!pending_) throw ProtocolError("no pending offer");
  if (!std::isfinite(pending_->v_min)) {
    return {std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
  }
  auto [lo, hi] = pending_->pricing.accepted_variance(pending_->query);
  lo = std::max(lo, pending_->v_min);
  return {lo, hi};
}

TransactionRecord Session::purchase(const LinearQuery& q, double v) {
  if (!pending_) throw ProtocolError("purchase without a pending offer");
  if (q.weights() != pending_->query.weights()) throw ProtocolError("purchase does not match the pending offer");
  Pending p = std::move(*pending_);
  pending_.reset();

  TransactionRecord rec;
  rec.sequence = p.sequence;
  rec.query = q.weights();
  rec.v = v;
  rec.v_min = p.v_min;
  rec.budgets = p.budgets;

  RejectReason why = p.pricing.admissible(q, v);
  if (why == RejectReason::none && !std::isfinite(p.v_min)) why = RejectReason::below_min_variance;
  if (why != RejectReason::none) {
    rec.reason = why;
    events_.push_back(rec);
    return rec;
  }

  PriceQuote quote = p.pricing.quote(q, v);
  rec.accepted = true;
  rec.theta = quote.theta;
  rec.losses = quote.losses.values();
  rec.price = quote.price;
  rec.compensation = quote.compensation;

  if (quote.theta == 0.0) {
    rec.answer = evaluate_query(q, build_histogram(db_));
  } else if (config_.mechanism == MechanismKind::laplace) {
    rec.answer = perturb_laplace(db_, q, quote.theta, rng_);
  } else {
    rec.answer = perturb_sample(db_, q, quote.losses, rng_);
  }

  for (std::size_t i = 0; i < ledger_.size(); ++i) {
    const double deduct = config_.deduct_consumed_only ? rec.losses[i] : p.budgets[i];
    ledger_[i].remaining_bound = std::max(0.0, ledger_[i].remaining_bound - deduct);
    ledger_[i].consumed_loss += rec.losses[i];
    ledger_[i].compensation += rec.compensation[i];
  }
  payments_ += rec.price;
  events_.push_back(rec);
  return rec;
}

LedgerSummary Session::settle() const {
  LedgerSummary s;
  s.owners = ledger_;
  for (const auto& e : events_) {
    if (e.accepted) ++s.accepted;
    else ++s.rejected;
  }
  s.total_payments = payments_;
  double consumed = 0.0;
  for (const auto& l : ledger_) {
    s.total_compensation += l.compensation;
    consumed += l.consumed_loss;
  }
  s.average_traded_loss = ledger_.empty() ? 0.0 : consumed / static_cast<double>(ledger_.size());
  return s;
}

void Session::export_events(std::ostream& out) const {
  for (const auto& e : events_) out << to_json_line(e) << '\n';
}

Session open_session(const ProtocolConfig& config, const std::vector<Owner>& owners, const Database& db,
                     std::uint64_t seed) {
  return Session(config, owners, db, seed);
}

}  // namespace pdpm
