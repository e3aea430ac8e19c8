#include "pdpm/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include "pdpm/errors.hpp"

namespace pdpm {

namespace {

constexpr std::uint64_t kSchemeStream = 0x5c4e3e5eedULL;
constexpr std::uint64_t kSessionStream = 0x0b5e55104ULL;

TradingResult summarize(std::vector<double> per_round) {
  TradingResult r;
  const double n = static_cast<double>(per_round.size());
  if (per_round.empty()) return r;
  double sum = 0.0;
  for (double x : per_round) sum += x;
  r.mean = sum / n;
  if (per_round.size() > 1) {
    double ss = 0.0;
    for (double x : per_round) ss += (x - r.mean) * (x - r.mean);
    r.stderr_ = std::sqrt(ss / (n - 1.0) / n);
  }
  r.per_round = std::move(per_round);
  return r;
}

ExperimentConfig with_protocol(const ExperimentConfig& base, ProtocolPreset p) {
  ExperimentConfig c = base;
  ProtocolConfig pc = ProtocolConfig::preset(p);
  pc.r = base.protocol.r;
  pc.profit_rate = base.protocol.profit_rate;
  pc.sigma = base.protocol.sigma;
  pc.check = base.protocol.check;
  pc.deduct_consumed_only = base.protocol.deduct_consumed_only;
  if (p == ProtocolPreset::PTP) {
    if (base.protocol.theta_lower) pc.theta_lower = base.protocol.theta_lower;
    if (base.protocol.theta_upper) pc.theta_upper = base.protocol.theta_upper;
  }
  c.protocol = pc;
  return c;
}

std::vector<double> default_v_grid(const SweepGrids& g) {
  return g.v_grid.empty() ? geometric_grid(0.1, 100.0, 50) : g.v_grid;
}

std::vector<ArbitrageRow> label(const std::string& protocol, const AttackReport& rep) {
  std::vector<ArbitrageRow> out;
  for (const auto& r : rep.rows) out.push_back({protocol, r});
  return out;
}

}  // namespace

const char* to_string(OwnerGroup g) noexcept {
  switch (g) {
    case OwnerGroup::conservative: return "conservative";
    case OwnerGroup::hesitant: return "hesitant";
    case OwnerGroup::ordinary: return "ordinary";
    case OwnerGroup::liberal: return "liberal";
  }
  return "?";
}

void PopulationSpec::validate() const {
  if (domain == 0) throw ConfigError("domain size must be ≥ 1");
  double total = 0.0;
  for (const auto& g : groups) {
    if (!(g.fraction >= 0.0)) throw ConfigError("group fractions must be ≥ 0");
    if (!(g.bound >= 0.0) || !std::isfinite(g.bound)) throw ConfigError("group bounds must be finite and ≥ 0");
    total += g.fraction;
  }
  if (total > 1.0 + 1e-12) throw ConfigError("group fractions must sum to at most 1");
}

std::array<std::size_t, 4> group_sizes(const PopulationSpec& spec) {
  spec.validate();
  std::array<std::size_t, 4> sizes{};
  std::size_t used = 0;
  for (std::size_t g = 0; g < 4; ++g) {
    // The small epsilon keeps exact products such as 0.33·200 = 66 from flooring to 65.
    sizes[g] = static_cast<std::size_t>(std::floor(spec.groups[g].fraction * static_cast<double>(spec.n) + 1e-9));
    used += sizes[g];
  }
  if (used > spec.n) throw ConfigError("group sizes exceed the population");
  sizes[3] += spec.n - used;
  return sizes;
}

const char* to_string(CompensationScheme s) noexcept {
  switch (s) {
    case CompensationScheme::selectable: return "selectable";
    case CompensationScheme::semiselectable: return "semiselectable";
    case CompensationScheme::unselectable: return "unselectable";
    case CompensationScheme::all_superadditive: return "all_superadditive";
  }
  return "?";
}

CompensationScheme scheme_from_string(const std::string& name) {
  if (name == "selectable") return CompensationScheme::selectable;
  if (name == "semiselectable") return CompensationScheme::semiselectable;
  if (name == "unselectable") return CompensationScheme::unselectable;
  if (name == "all_superadditive") return CompensationScheme::all_superadditive;
  throw ConfigError("unknown compensation scheme '" + name + "'");
}

std::vector<Owner> Population::owners() const {
  std::vector<Owner> out;
  out.reserve(size());
  for (std::size_t i = 0; i < size(); ++i) out.push_back({bounds[i], compensations[i]});
  return out;
}

Database Population::database() const { return Database(values, domain); }

Population Population::truncated(std::size_t k) const {
  k = std::min(k, size());
  Population p;
  p.domain = domain;
  p.groups.assign(groups.begin(), groups.begin() + static_cast<std::ptrdiff_t>(k));
  p.bounds.assign(bounds.begin(), bounds.begin() + static_cast<std::ptrdiff_t>(k));
  p.values.assign(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(k));
  p.compensations.assign(compensations.begin(), compensations.begin() + static_cast<std::ptrdiff_t>(k));
  return p;
}

Population generate_population(const PopulationSpec& spec) {
  const std::array<std::size_t, 4> sizes = group_sizes(spec);
  NoiseSource rng(spec.seed);
  Population p;
  p.domain = spec.domain;
  for (std::size_t g = 0; g < 4; ++g) p.groups.insert(p.groups.end(), sizes[g], static_cast<OwnerGroup>(g));
  for (std::size_t i = p.groups.size(); i > 1; --i) {
    std::swap(p.groups[i - 1], p.groups[static_cast<std::size_t>(rng.uniform_int(0, i - 1))]);
  }
  for (std::size_t i = 0; i < p.groups.size(); ++i) {
    p.bounds.push_back(spec.groups[static_cast<std::size_t>(p.groups[i])].bound);
    p.values.push_back(static_cast<int>(rng.uniform_int(1, spec.domain)));
  }
  p.compensations.assign(p.size(), CompensationFunction::L());
  return p;
}

void assign_compensation(Population& pop, CompensationScheme scheme, std::uint64_t seed) {
  NoiseSource rng(seed);
  const CompensationFunction four[] = {CompensationFunction::B(), CompensationFunction::L(),
                                       CompensationFunction::C1(), CompensationFunction::C2()};
  pop.compensations.clear();
  for (OwnerGroup g : pop.groups) {
    switch (scheme) {
      case CompensationScheme::selectable: pop.compensations.push_back(four[rng.uniform_int(0, 3)]); break;
      case CompensationScheme::semiselectable:
        switch (g) {
          case OwnerGroup::conservative: pop.compensations.push_back(CompensationFunction::B()); break;
          case OwnerGroup::hesitant:
            pop.compensations.push_back(rng.bernoulli(0.5) ? CompensationFunction::B() : CompensationFunction::C1());
            break;
          case OwnerGroup::ordinary:
            pop.compensations.push_back(rng.bernoulli(0.5) ? CompensationFunction::C1() : CompensationFunction::L());
            break;
          case OwnerGroup::liberal: pop.compensations.push_back(CompensationFunction::L()); break;
        }
        break;
      case CompensationScheme::unselectable:
        switch (g) {
          case OwnerGroup::conservative: pop.compensations.push_back(CompensationFunction::B()); break;
          case OwnerGroup::hesitant: pop.compensations.push_back(CompensationFunction::C1()); break;
          case OwnerGroup::ordinary: pop.compensations.push_back(CompensationFunction::C2()); break;
          case OwnerGroup::liberal: pop.compensations.push_back(CompensationFunction::L()); break;
        }
        break;
      case CompensationScheme::all_superadditive: pop.compensations.push_back(CompensationFunction::S()); break;
    }
  }
}

LinearQuery random_counting_query(std::size_t domain, NoiseSource& rng) {
  if (domain < 2) throw ParameterError("a Δq = 1 counting query needs a domain of at least 2 values");
  std::vector<double> w(domain);
  for (;;) {
    bool zero = false;
    bool one = false;
    for (double& x : w) {
      x = rng.bernoulli(0.5) ? 1.0 : 0.0;
      (x == 1.0 ? one : zero) = true;
    }
    if (zero && one) return LinearQuery(w);
  }
}

void ExperimentConfig::validate() const {
  protocol.validate();
  population.validate();
  if (!(max_variance > 0.0) || !std::isfinite(max_variance)) throw ConfigError("V must be finite and > 0");
  if (queries == 0 || rounds == 0) throw ConfigError("queries and rounds must be ≥ 1");
}

Population build_population(const ExperimentConfig& config) {
  Population pop = generate_population(config.population);
  assign_compensation(pop, config.scheme, mix_seed(config.population.seed ^ kSchemeStream));
  return pop;
}

std::uint64_t round_seed(std::uint64_t seed, std::size_t round) noexcept {
  return mix_seed(seed ^ static_cast<std::uint64_t>(round));
}

TradingResult run_trading(const ExperimentConfig& config) {
  config.validate();
  const Population pop = build_population(config);
  return run_trading(config, pop, prepare_session(config.protocol, pop.owners()));
}

TradingResult run_trading(const ExperimentConfig& config, const Population& pop, const SessionSetup& setup,
                          std::ostream* events) {
  config.validate();
  const std::vector<Owner> owners = pop.owners();
  const Database db = pop.database();
  std::vector<double> per_round;
  per_round.reserve(config.rounds);
  std::size_t accepted = 0, rejected = 0, no_trade = 0;

  for (std::size_t k = 0; k < config.rounds; ++k) {
    const std::uint64_t rs = round_seed(config.seed, k);
    NoiseSource buyer(rs);
    Session session(config.protocol, owners, db, mix_seed(rs ^ kSessionStream), setup);
    for (std::size_t j = 0; j < config.queries && !session.exhausted(); ++j) {
      const LinearQuery q = random_counting_query(pop.domain, buyer);
      session.offer(q);
      auto [lo, hi] = session.pending_window();
      hi = std::min(hi, config.max_variance);
      if (!(lo <= hi)) {
        ++no_trade;
        continue;
      }
      const double v = lo + (hi - lo) * buyer.uniform();
      const TransactionRecord rec = session.purchase(q, v);
      if (rec.accepted) ++accepted;
      else ++rejected;
    }
    if (k == 0 && events) session.export_events(*events);
    per_round.push_back(session.settle().average_traded_loss);
  }
  TradingResult r = summarize(std::move(per_round));
  r.accepted = accepted;
  r.rejected = rejected;
  r.no_trade = no_trade;
  return r;
}

PricingFunction initial_pricing(const ExperimentConfig& config, const Population& pop, const SessionSetup& setup) {
  Session session(config.protocol, pop.owners(), pop.database(), config.seed, setup);
  std::vector<double> w(pop.domain, 0.0);
  w.back() = 1.0;
  session.offer(LinearQuery(w));
  return session.pending_pricing();
}

AttackReport run_arbitrage(const ExperimentConfig& config, const std::vector<double>& v_grid,
                           std::size_t combo_trials) {
  config.validate();
  const Population pop = build_population(config);
  const SessionSetup setup = prepare_session(config.protocol, pop.owners());
  const PricingFunction pricing = initial_pricing(config, pop, setup);
  std::vector<double> w(pop.domain, 0.0);
  w.back() = 1.0;
  SweepOptions o;
  o.combo_trials = combo_trials;
  o.seed = config.seed;
  return sweep(make_pricer(pricing), LinearQuery(w), v_grid, o);
}

std::vector<TradingRow> rq1_bounds(const ExperimentConfig& base, const SweepGrids& grids) {
  std::vector<TradingRow> rows;
  const std::pair<const char*, std::size_t> sweeps[] = {{"min", 0}, {"max", 3}};
  for (const auto& [name, group] : sweeps) {
    const std::vector<double>& values = group == 0 ? grids.min_bounds : grids.max_bounds;
    for (ProtocolPreset p : {ProtocolPreset::UT, ProtocolPreset::PT}) {
      for (double b : values) {
        ExperimentConfig c = with_protocol(base, p);
        c.population.groups[group].bound = b;
        rows.push_back({to_string(p), name, b, run_trading(c)});
      }
    }
  }
  return rows;
}

std::vector<TradingRow> rq2_partial(const ExperimentConfig& base, const SweepGrids& grids) {
  std::vector<TradingRow> rows;
  std::vector<std::pair<std::string, ExperimentConfig>> protocols;
  protocols.emplace_back("PT", with_protocol(base, ProtocolPreset::PT));
  for (double tl : grids.theta_lowers) {
    ExperimentConfig c = with_protocol(base, ProtocolPreset::PTP);
    c.protocol.theta_lower = tl;
    char label[32];
    std::snprintf(label, sizeof label, "PTP/%g", tl);
    protocols.emplace_back(label, c);
  }
  for (const auto& [label, cfg] : protocols) {
    const Population pop = build_population(cfg);
    const SessionSetup setup = prepare_session(cfg.protocol, pop.owners());
    for (double V : grids.max_variances) {
      ExperimentConfig c = cfg;
      c.max_variance = V;
      rows.push_back({label, "V", V, run_trading(c, pop, setup)});
    }
    for (double r : grids.reservation_rates) {
      ExperimentConfig c = cfg;
      c.protocol.r = r;
      rows.push_back({label, "r", r, run_trading(c, pop, setup)});
    }
  }
  return rows;
}

std::vector<TradingRow> rq3_exchange(const ExperimentConfig& base) {
  std::vector<TradingRow> rows;
  for (CompensationScheme s :
       {CompensationScheme::selectable, CompensationScheme::semiselectable, CompensationScheme::unselectable}) {
    for (ProtocolPreset p : {ProtocolPreset::PT, ProtocolPreset::PTP}) {
      ExperimentConfig c = with_protocol(base, p);
      c.scheme = s;
      const Population pop = build_population(c);
      const SessionSetup setup = prepare_session(c.protocol, pop.owners());
      rows.push_back({to_string(p), to_string(s), 0.0, run_trading(c, pop, setup)});
      c.protocol.exchange = true;
      rows.push_back({std::string(to_string(p)) + "+PE", to_string(s), 0.0, run_trading(c, pop, setup)});
    }
  }
  return rows;
}

std::vector<ArbitrageRow> rq4_arbitrage(const ExperimentConfig& base, const SweepGrids& grids) {
  std::vector<ArbitrageRow> rows;
  for (ProtocolPreset p : {ProtocolPreset::UT, ProtocolPreset::PT}) {
    const auto part = label(to_string(p), run_arbitrage(with_protocol(base, p), default_v_grid(grids)));
    rows.insert(rows.end(), part.begin(), part.end());
  }
  return rows;
}

std::vector<ArbitrageRow> rq5_partial_arbitrage(const ExperimentConfig& base, const SweepGrids& grids) {
  std::vector<ArbitrageRow> rows;
  ExperimentConfig utp = with_protocol(base, ProtocolPreset::UTP);
  utp.scheme = CompensationScheme::all_superadditive;
  auto part = label("UTP", run_arbitrage(utp, default_v_grid(grids)));
  rows.insert(rows.end(), part.begin(), part.end());
  part = label("PTP", run_arbitrage(with_protocol(base, ProtocolPreset::PTP), default_v_grid(grids)));
  rows.insert(rows.end(), part.begin(), part.end());
  return rows;
}

}  // namespace pdpm
