#include "pdpm/arbitrage_audit.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>

#include "pdpm/errors.hpp"

namespace pdpm {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::string g10(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", x);
  return buf;
}

double require_price(const Pricer& pricer, const LinearQuery& q, double v) {
  const std::optional<double> p = pricer(q, v);
  if (!p) throw InfeasibleError("the attacked query (q, v) is not for sale");
  return *p;
}

}  // namespace

Pricer make_pricer(const PricingFunction& pricing) {
  return [pricing](const LinearQuery& q, double v) -> std::optional<double> {
    try {
      if (auto quote = pricing.try_quote(q, v)) return quote->price;
    } catch (const InfeasibleError&) {
    } catch (const CheckerError&) {
      // A curve that cannot be inverted at v has no price there.
    }
    return std::nullopt;
  };
}

SplitAttackEntry split_attack(const Pricer& pricer, const LinearQuery& q, double v, int m_lo, int m_hi) {
  if (m_lo < 2 || m_hi < m_lo) throw ParameterError("split attack needs 2 ≤ m_lo ≤ m_hi");
  SplitAttackEntry e;
  e.v = v;
  e.price = require_price(pricer, q, v);
  e.min_rate = kInf;
  for (int m = m_lo; m <= m_hi; ++m) {
    const std::optional<double> part = pricer(q, m * v);
    if (!part) {
      e.infeasible_m.push_back(m);
      continue;
    }
    const double rate = m * *part / e.price;
    if (rate < e.min_rate) {
      e.min_rate = rate;
      e.argmin_m = m;
    }
  }
  e.violation = e.argmin_m != 0 && e.min_rate < 1.0 - kViolationTolerance;
  return e;
}

std::optional<double> decomposition_cost(const Pricer& pricer, const LinearQuery& q,
                                         const std::vector<AttackComponent>& components) {
  double total = 0.0;
  for (const auto& c : components) {
    const std::optional<double> p = pricer(q.scaled(c.scale), c.variance);
    if (!p) return std::nullopt;
    total += *p;
  }
  return total;
}

ComboAttackEntry combo_attack(const Pricer& pricer, const LinearQuery& q, double v, std::size_t trials,
                              NoiseSource& rng) {
  if (trials == 0) throw ParameterError("combo attack needs at least one trial");
  ComboAttackEntry e;
  e.v = v;
  e.price = require_price(pricer, q, v);
  e.best_cost = kInf;
  e.best_rate = kInf;
  e.trials = trials;

  for (std::size_t t = 0; t < trials; ++t) {
    const std::size_t k = static_cast<std::size_t>(rng.uniform_int(2, 5));
    std::vector<double> w(k), f(k);
    double wsum = 0.0;
    double fsum = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      w[j] = rng.uniform();
      f[j] = rng.uniform();
      wsum += w[j];
      fsum += f[j];
    }
    const double slack = 0.9 + 0.1 * rng.uniform();
    std::vector<AttackComponent> comps(k);
    for (std::size_t j = 0; j < k; ++j) {
      const double s = rng.bernoulli(0.5) ? 1.0 : std::exp(std::log(4.0) * (2.0 * rng.uniform() - 1.0));
      const double a = (w[j] / wsum) / s;
      comps[j] = {s, a, slack * (f[j] / fsum) * v / (a * a)};
    }
    const std::optional<double> cost = decomposition_cost(pricer, q, comps);
    if (!cost) {
      ++e.pruned;
      continue;
    }
    if (*cost < e.best_cost) {
      e.best_cost = *cost;
      e.best = comps;
    }
  }
  if (std::isfinite(e.best_cost)) {
    e.best_rate = e.price > 0.0 ? e.best_cost / e.price : kInf;
    e.violation = e.best_cost < e.price * (1.0 - kViolationTolerance);
  }
  return e;
}

double AttackReport::min_rate() const {
  double m = kInf;
  for (const auto& r : rows) {
    if (r.price_defined && r.min_rate < m) m = r.min_rate;
  }
  return m;
}

std::size_t AttackReport::violations() const {
  std::size_t n = 0;
  for (const auto& r : rows) n += r.violations;
  return n;
}

void AttackReport::write_csv(std::ostream& out) const {
  out << "v,min_rate,argmin_m,violations\n";
  for (const auto& r : rows) {
    out << g10(r.v) << ',' << (r.price_defined ? g10(r.min_rate) : std::string("nan")) << ',' << r.argmin_m << ','
        << r.violations << '\n';
  }
}

AttackReport sweep(const Pricer& pricer, const LinearQuery& q, const std::vector<double>& v_grid,
                   const SweepOptions& opts) {
  if (v_grid.empty()) throw ParameterError("sweep needs a non-empty variance grid");
  AttackReport report;
  NoiseSource rng(opts.seed);
  for (double v : v_grid) {
    AuditRow row;
    row.v = v;
    if (!pricer(q, v)) {
      row.price_defined = false;
      row.min_rate = kInf;
      row.n_infeasible = static_cast<std::size_t>(opts.m_hi - opts.m_lo + 1);
      report.rows.push_back(row);
      continue;
    }
    const SplitAttackEntry s = split_attack(pricer, q, v, opts.m_lo, opts.m_hi);
    row.min_rate = s.min_rate;
    row.argmin_m = s.argmin_m;
    row.n_infeasible = s.infeasible_m.size();
    row.violations = s.violation ? 1 : 0;
    if (opts.combo_trials > 0) {
      row.combo = combo_attack(pricer, q, v, opts.combo_trials, rng);
      if (row.combo->violation) ++row.violations;
    }
    report.rows.push_back(row);
  }
  return report;
}

}  // namespace pdpm
