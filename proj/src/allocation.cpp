#include "pdpm/allocation.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "pdpm/errors.hpp"

namespace pdpm {

namespace {

void require_rate(double r) {
  if (!(r >= 0.0 && r <= 1.0)) throw ParameterError("reservation rate must lie in [0, 1]");
}

void require_bounds(std::span<const double> bounds) {
  for (double b : bounds) {
    if (!(b >= 0.0) || !std::isfinite(b)) throw ParameterError("privacy loss bounds must be finite and ≥ 0");
  }
}

std::map<std::string, std::vector<std::size_t>> groups_by_tag(const std::vector<CompensationFunction>& comps) {
  std::map<std::string, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < comps.size(); ++i) groups[comps[i].tag()].push_back(i);
  return groups;
}

}  // namespace

std::vector<double> allocate_uniform(std::span<const double> bounds, double r) {
  require_rate(r);
  require_bounds(bounds);
  if (bounds.empty()) return {};
  const double lo = *std::min_element(bounds.begin(), bounds.end());
  return std::vector<double>(bounds.size(), lo * (1.0 - r));
}

double patterning_scale(std::span<const double> bounds, const Pattern& rho) {
  require_bounds(bounds);
  if (bounds.size() != rho.size()) throw DomainError("pattern and bounds differ in length");
  if (bounds.empty()) return 0.0;
  double theta = *std::max_element(bounds.begin(), bounds.end());
  for (std::size_t i = 0; i < bounds.size(); ++i) {
    if (rho[i] > 0.0 && bounds[i] < theta * rho[i]) theta = bounds[i] / rho[i];
  }
  return theta;
}

PatterningResult patterning(std::span<const double> bounds, const Pattern& rho, double r, bool exchange,
                            const std::vector<CompensationFunction>& compensations) {
  require_rate(r);
  Pattern used = exchange ? pattern_exchange(rho, bounds, compensations) : rho;
  const double theta = patterning_scale(bounds, used);
  std::vector<double> budgets(bounds.size());
  for (std::size_t i = 0; i < budgets.size(); ++i) {
    budgets[i] = std::min(theta * used[i] * (1.0 - r), bounds[i]);
  }
  return PatterningResult{std::move(used), theta, std::move(budgets)};
}

bool pattern_feasible(const Pattern& rho, std::span<const double> bounds, const PatternSearchOptions& opts) {
  const UtilityCurve curve = UtilityCurve::sample(1.0, rho);
  if (opts.variant == SearchVariant::af) return check_af_properties(curve, opts.check).passed();
  const double upper = opts.theta_upper ? *opts.theta_upper : patterning_scale(bounds, rho);
  if (!(upper >= opts.theta_lower)) return false;
  return check_paf_properties(curve, opts.theta_lower, upper, opts.check).passed();
}

PatternSearchResult pattern_search(std::span<const double> bounds, const PatternSearchOptions& opts) {
  require_bounds(bounds);
  if (bounds.empty()) throw ParameterError("pattern search needs at least one owner");
  if (!(opts.sigma > 0.0)) throw ParameterError("σ must be > 0");
  const double top = *std::max_element(bounds.begin(), bounds.end());
  if (!(top > 0.0)) throw ParameterError("pattern search needs a positive bound");

  std::vector<double> base(bounds.size());
  std::vector<bool> pinned(bounds.size());
  double free_norm = 0.0;
  for (std::size_t i = 0; i < bounds.size(); ++i) {
    base[i] = bounds[i] / top;
    pinned[i] = base[i] == 1.0;
    if (!pinned[i]) free_norm += base[i] * base[i];
  }
  auto at = [&](double t) {
    std::vector<double> v(base.size());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = pinned[i] ? 1.0 : t * base[i];
    return Pattern(std::move(v));
  };

  PatternSearchResult res{at(1.0), 1.0, 0, true, {}, {}, 0.0};
  double t = 1.0;
  double t_start = 1.0;
  double t_end = 0.0;
  const std::size_t limit = static_cast<std::size_t>(std::ceil(std::log2(1.0 / opts.sigma))) + 64;
  res.converged = false;
  while (res.iterations < limit) {
    ++res.iterations;
    const double pre = t;
    const bool ok = pattern_feasible(at(t), bounds, opts);
    res.steps.push_back({t, ok});
    if (ok) {
      t_end = t;
      t = 0.5 * (t + t_start);
    } else {
      t_start = t;
      t = 0.5 * (t + t_end);
    }
    if ((t - pre) * (t - pre) * free_norm < opts.sigma) {
      res.converged = true;
      break;
    }
  }

  res.t = t_end;
  res.pattern = at(t_end);
  for (std::size_t k = 0; k < opts.monotonicity_probes && t_end > 0.0; ++k) {
    const double probe = t_end * static_cast<double>(k) / static_cast<double>(opts.monotonicity_probes);
    if (!pattern_feasible(at(probe), bounds, opts)) res.monotonicity_violations.push_back(probe);
  }
  for (std::size_t i = 0; i < base.size(); ++i) {
    const double d = res.pattern[i] - base[i];
    res.objective += d * d;
  }
  return res;
}

Pattern pattern_exchange(const Pattern& rho, std::span<const double> bounds,
                         const std::vector<CompensationFunction>& compensations) {
  if (rho.size() != bounds.size() || rho.size() != compensations.size()) {
    throw DomainError("pattern, bounds and compensations differ in length");
  }
  std::vector<double> out(rho.ratios());
  for (auto& [tag, members] : groups_by_tag(compensations)) {
    std::vector<double> sub;
    sub.reserve(members.size());
    for (std::size_t i : members) sub.push_back(rho[i]);
    std::sort(sub.begin(), sub.end(), std::greater<>());
    std::vector<std::size_t> order = members;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return bounds[a] > bounds[b]; });
    for (std::size_t j = 0; j < order.size(); ++j) out[order[j]] = sub[j];
  }
  return Pattern(std::move(out));
}

bool patterns_equivalent(const Pattern& a, const Pattern& b, const std::vector<CompensationFunction>& compensations) {
  if (a.size() != b.size() || a.size() != compensations.size()) return false;
  for (auto& [tag, members] : groups_by_tag(compensations)) {
    std::vector<double> xa, xb;
    for (std::size_t i : members) {
      xa.push_back(a[i]);
      xb.push_back(b[i]);
    }
    std::sort(xa.begin(), xa.end());
    std::sort(xb.begin(), xb.end());
    if (xa != xb) return false;
  }
  return true;
}

}  // namespace pdpm
