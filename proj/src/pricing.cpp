#include "pdpm/pricing.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace pdpm {

namespace {

constexpr double kRangeSlack = 1e-9;

bool leq(double lhs, double rhs, double rel_tol) { return lhs <= rhs + rel_tol * std::abs(rhs); }

std::string fmt(double x) {
  std::ostringstream os;
  os.precision(10);
  os << x;
  return os.str();
}

UtilityDerivatives derivatives_at(const UtilityCurve& curve, double theta, const CheckOptions& opts) {
  if (curve.has_analytic_derivatives()) return curve.derivatives(theta);
  if (!opts.finite_difference_fallback) {
    throw UnsupportedError(std::string("no analytic derivatives for the ") + to_string(curve.mechanism()) +
                           " curve");
  }
  return numeric_derivatives(curve, theta);
}

void fail_at(PropertyResult& r, double theta, std::string detail) {
  if (r.passed) {
    r.passed = false;
    r.first_violation = theta;
    r.detail = std::move(detail);
  }
}

PropertyResult decreasing_property(const UtilityCurve& c, const CheckOptions& opts) {
  PropertyResult r{"decreasing", true, std::nullopt, ""};
  for (double t : opts.grid) {
    const double d1 = derivatives_at(c, t, opts).first;
    if (!(d1 + opts.beta <= 0.0)) fail_at(r, t, "dv/dθ = " + fmt(d1));
  }
  return r;
}

PropertyResult curvature_property(const UtilityCurve& c, const std::vector<double>& grid,
                                  const CheckOptions& opts) {
  PropertyResult r{"curvature", true, std::nullopt, ""};
  for (double t : grid) {
    const UtilityDerivatives d = derivatives_at(c, t, opts);
    const double lhs = c.value(t) * d.second;
    const double rhs = 2.0 * d.first * d.first;
    if (!leq(lhs, rhs, opts.rel_tol)) fail_at(r, t, "v·v'' = " + fmt(lhs) + " > 2v'^2 = " + fmt(rhs));
  }
  return r;
}

double owner_ratio(const UtilityCurve& curve, std::size_t i) {
  return curve.mechanism() == MechanismKind::sample ? curve.pattern()[i] : 1.0;
}

bool any_superadditive(const std::vector<CompensationFunction>& comps) {
  return std::any_of(comps.begin(), comps.end(),
                     [](const CompensationFunction& m) { return m.additivity() == Additivity::superadditive; });
}

bool corollary_endpoint_holds(const std::vector<CompensationFunction>& comps, double theta, double slack) {
  for (const auto& mu : comps) {
    if (!leq(mu(std::sqrt(2.0) * theta), 2.0 * mu(theta), slack)) return false;
  }
  return true;
}

bool corollary_curvature_holds(const std::vector<CompensationFunction>& comps, double theta, double slack) {
  for (const auto& mu : comps) {
    const double d2 = mu.second_derivative(theta);
    if (d2 <= 0.0) continue;
    if (!leq(theta * d2, mu.derivative(theta), slack)) return false;
  }
  return true;
}

}  // namespace

const char* to_string(RejectReason r) noexcept {
  switch (r) {
    case RejectReason::none: return "";
    case RejectReason::below_min_variance: return "BELOW_MIN_VARIANCE";
    case RejectReason::outside_paf_range: return "OUTSIDE_PAF_RANGE";
    case RejectReason::market_exhausted: return "MARKET_EXHAUSTED";
    case RejectReason::infeasible_v: return "INFEASIBLE_V";
  }
  return "?";
}

PafRange::PafRange(double lower, double upper) : theta_lower(lower), theta_upper(upper) {
  if (!(lower > 0.0) || !std::isfinite(upper) || !(lower <= upper)) {
    throw ParameterError("PAF range requires 0 < θ^L ≤ θ^U < ∞");
  }
}

std::pair<double, double> PafRange::variance_range(const UtilityCurve& curve) const {
  return {curve.value(theta_upper), curve.value(theta_lower)};
}

double cost_of_losses(std::span<const double> losses, const std::vector<CompensationFunction>& compensations) {
  if (losses.size() != compensations.size()) throw DomainError("one compensation function per owner is required");
  double total = 0.0;
  for (std::size_t i = 0; i < losses.size(); ++i) total += compensations[i](losses[i]);
  return total;
}

PricingFunction::PricingFunction(MechanismKind mechanism, Pattern rho, std::vector<CompensationFunction> compensations,
                                 double profit_rate)
    : mechanism_(mechanism), rho_(std::move(rho)), compensations_(std::move(compensations)), profit_rate_(profit_rate) {
  if (mechanism_ == MechanismKind::exponential) throw UnsupportedError("pricing supports Laplace and Sample only");
  if (rho_.size() != compensations_.size()) throw DomainError("pattern and compensations differ in length");
  if (!(profit_rate_ >= 0.0) || !std::isfinite(profit_rate_)) throw ParameterError("profit rate must be ≥ 0");
}

PricingFunction& PricingFunction::with_range(PafRange range) {
  range_ = range;
  return *this;
}

PricingFunction& PricingFunction::with_theta_cap(double theta_cap) {
  if (!(theta_cap > 0.0) || !std::isfinite(theta_cap)) throw ParameterError("θ cap must be finite and > 0");
  theta_cap_ = theta_cap;
  return *this;
}

UtilityCurve PricingFunction::curve(const LinearQuery& q) const {
  return UtilityCurve::for_query(mechanism_, q, rho_);
}

double PricingFunction::min_variance(const LinearQuery& q) const {
  return theta_cap_ ? curve(q).value(*theta_cap_) : 0.0;
}

std::pair<double, double> PricingFunction::accepted_variance(const LinearQuery& q) const {
  const UtilityCurve c = curve(q);
  double lo = theta_cap_ ? c.value(*theta_cap_) : 0.0;
  double hi = std::numeric_limits<double>::infinity();
  if (range_) {
    const auto [vlo, vhi] = range_->variance_range(c);
    lo = std::max(lo, vlo);
    hi = vhi;
  }
  return {lo, hi};
}

RejectReason PricingFunction::admissible(const LinearQuery& q, double v) const {
  if (!(v > 0.0) || !std::isfinite(v)) return RejectReason::infeasible_v;
  const UtilityCurve c = curve(q);
  if (theta_cap_ && v < c.value(*theta_cap_)) return RejectReason::below_min_variance;
  if (range_) {
    const auto [vlo, vhi] = range_->variance_range(c);
    if (v < vlo * (1.0 - kRangeSlack) || v > vhi * (1.0 + kRangeSlack)) return RejectReason::outside_paf_range;
  }
  return RejectReason::none;
}

PriceQuote PricingFunction::quote(const LinearQuery& q, double v) const {
  const RejectReason why = admissible(q, v);
  if (why != RejectReason::none) {
    throw QuoteRejected(why, std::string("quote rejected: ") + to_string(why) + " at v = " + fmt(v));
  }
  const UtilityCurve c = curve(q);
  double theta = 0.0;
  if (c.sensitivity() > 0.0) {
    if (theta_cap_ && v <= c.value(*theta_cap_) * (1.0 + 1e-12)) {
      theta = *theta_cap_;
    } else {
      InvertOptions io;
      if (theta_cap_) io.upper = std::max(*theta_cap_, io.lower * 2.0);
      theta = invert_utility(c, v, io);
      if (theta_cap_) theta = std::min(theta, *theta_cap_);
    }
  }
  std::vector<double> losses = rho_.scaled(theta);
  std::vector<double> comp(losses.size());
  double total = 0.0;
  for (std::size_t i = 0; i < losses.size(); ++i) {
    comp[i] = compensations_[i](losses[i]);
    total += comp[i];
  }
  return PriceQuote{total * (1.0 + profit_rate_), theta, PrivacyLossVector(std::move(losses)), std::move(comp)};
}

std::optional<PriceQuote> PricingFunction::try_quote(const LinearQuery& q, double v) const {
  if (admissible(q, v) != RejectReason::none) return std::nullopt;
  return quote(q, v);
}

PriceQuote quote_price(MechanismKind mechanism, const LinearQuery& q, double v, const Pattern& rho,
                       const std::vector<CompensationFunction>& compensations, double profit_rate) {
  return PricingFunction(mechanism, rho, compensations, profit_rate).quote(q, v);
}

bool CheckReport::passed() const {
  return std::all_of(properties.begin(), properties.end(), [](const PropertyResult& p) { return p.passed; });
}

const PropertyResult* CheckReport::find(const std::string& name) const {
  for (const auto& p : properties) {
    if (p.name == name) return &p;
  }
  return nullptr;
}

std::vector<std::string> CheckReport::failed() const {
  std::vector<std::string> out;
  for (const auto& p : properties) {
    if (!p.passed) out.push_back(p.name);
  }
  return out;
}

void CheckReport::merge(const CheckReport& other) {
  properties.insert(properties.end(), other.properties.begin(), other.properties.end());
}

std::vector<double> geometric_grid(double lo, double hi, std::size_t points) {
  if (!(lo > 0.0) || !(hi >= lo) || points == 0) throw ParameterError("geometric grid needs 0 < lo ≤ hi, points ≥ 1");
  if (points == 1) return {lo};
  std::vector<double> g(points);
  const double step = std::log(hi / lo) / static_cast<double>(points - 1);
  for (std::size_t i = 0; i < points; ++i) g[i] = lo * std::exp(step * static_cast<double>(i));
  g.back() = hi;
  return g;
}

std::vector<double> linear_grid(double lo, double hi, std::size_t points) {
  if (!(hi >= lo) || points == 0) throw ParameterError("linear grid needs lo ≤ hi, points ≥ 1");
  if (points == 1) return {lo};
  std::vector<double> g(points);
  const double step = (hi - lo) / static_cast<double>(points - 1);
  for (std::size_t i = 0; i < points; ++i) g[i] = lo + step * static_cast<double>(i);
  g.back() = hi;
  return g;
}

CheckReport check_af_properties(const UtilityCurve& curve, const CheckOptions& opts) {
  const UtilityCurve c = curve.normalized();
  CheckReport report;

  PropertyResult div{"divergence", true, std::nullopt, ""};
  const double near = c.value(1e-6);
  const double unit = c.value(1.0);
  if (!(near > 1e9 * unit)) {
    div.passed = false;
    div.first_violation = 1e-6;
    div.detail = "U(1e-6) = " + fmt(near) + ", U(1) = " + fmt(unit);
  }
  report.properties.push_back(div);
  report.properties.push_back(decreasing_property(c, opts));
  report.properties.push_back(curvature_property(c, opts.grid, opts));
  return report;
}

CheckReport check_paf_properties(const UtilityCurve& curve, double theta_lower, double theta_upper,
                                 const CheckOptions& opts) {
  if (!(theta_lower > 0.0) || !(theta_lower <= theta_upper)) {
    throw ParameterError("PAF check requires 0 < θ^L ≤ θ^U");
  }
  const UtilityCurve c = curve.normalized();
  CheckReport report;

  PropertyResult interval{"interval", true, std::nullopt, ""};
  if (theta_upper - theta_lower >= theta_lower) {
    const double u_low = c.value(theta_lower);
    for (double t : linear_grid(theta_lower, theta_upper - theta_lower, opts.interval_points)) {
      const double lhs = c.value(t + theta_lower);
      const double rhs = 1.0 / (1.0 / u_low + 1.0 / c.value(t));
      if (!leq(lhs, rhs, opts.rel_tol)) fail_at(interval, t, "U(θ+θL) = " + fmt(lhs) + " > " + fmt(rhs));
    }
  }
  report.properties.push_back(interval);
  report.properties.push_back(decreasing_property(c, opts));
  report.properties.push_back(
      curvature_property(c, linear_grid(theta_lower, theta_upper, opts.interval_points), opts));
  return report;
}

CheckReport check_superadditive_conditions(const UtilityCurve& curve,
                                           const std::vector<CompensationFunction>& compensations,
                                           double theta_lower, double theta_upper, const CheckOptions& opts) {
  if (!(theta_lower > 0.0) || !(theta_lower <= theta_upper)) {
    throw ParameterError("superadditive check requires 0 < θ^L ≤ θ^U");
  }
  if (curve.mechanism() == MechanismKind::sample && curve.pattern().size() != compensations.size()) {
    throw DomainError("pattern and compensations differ in length");
  }
  const UtilityCurve c = curve.normalized();
  PropertyResult endpoint{"superadditive_endpoint", true, std::nullopt, ""};
  PropertyResult curvature{"superadditive_curvature", true, std::nullopt, ""};

  const std::vector<double> grid = linear_grid(theta_lower, theta_upper, opts.interval_points);
  std::vector<UtilityDerivatives> d(grid.size());
  std::vector<double> v(grid.size());
  bool evaluated = false;
  const double half_low = c.value(theta_lower) / 2.0;

  for (std::size_t i = 0; i < compensations.size(); ++i) {
    const CompensationFunction& mu = compensations[i];
    if (mu.additivity() != Additivity::superadditive) continue;
    const double rho = owner_ratio(c, i);
    if (rho == 0.0) continue;

    const double theta_a = mu.inverse(2.0 * mu(rho * theta_lower)) / rho;
    const double u_a = c.value(theta_a);
    if (!leq(u_a, half_low, opts.rel_tol)) {
      fail_at(endpoint, theta_lower,
              "owner " + std::to_string(i) + ": U(θA) = " + fmt(u_a) + " > U(θL)/2 = " + fmt(half_low));
    }

    if (!evaluated) {
      for (std::size_t k = 0; k < grid.size(); ++k) {
        d[k] = derivatives_at(c, grid[k], opts);
        v[k] = c.value(grid[k]);
      }
      evaluated = true;
    }
    for (std::size_t k = 0; k < grid.size(); ++k) {
      const double eps = rho * grid[k];
      const double lhs = v[k] * (d[k].second - d[k].first * rho * mu.second_derivative(eps) / mu.derivative(eps));
      const double rhs = 2.0 * d[k].first * d[k].first;
      if (!leq(lhs, rhs, opts.rel_tol)) {
        fail_at(curvature, grid[k], "owner " + std::to_string(i) + ": " + fmt(lhs) + " > " + fmt(rhs));
      }
    }
  }
  CheckReport report;
  report.properties.push_back(endpoint);
  report.properties.push_back(curvature);
  return report;
}

CheckReport check_laplace_corollary(const std::vector<CompensationFunction>& compensations, double theta_lower,
                                    double theta_upper, const CheckOptions& opts) {
  if (!(theta_lower > 0.0) || !(theta_lower <= theta_upper)) {
    throw ParameterError("corollary check requires 0 < θ^L ≤ θ^U");
  }
  PropertyResult endpoint{"corollary_endpoint", true, std::nullopt, ""};
  if (!corollary_endpoint_holds(compensations, theta_lower, opts.rel_tol)) {
    fail_at(endpoint, theta_lower, "μ(√2·θL) > 2μ(θL) for some owner");
  }
  PropertyResult curvature{"corollary_curvature", true, std::nullopt, ""};
  for (double t : linear_grid(theta_lower, theta_upper, opts.interval_points)) {
    if (!corollary_curvature_holds(compensations, t, opts.rel_tol)) fail_at(curvature, t, "θ·μ'' > μ'");
  }
  CheckReport report;
  report.properties.push_back(endpoint);
  report.properties.push_back(curvature);
  return report;
}

PafRange select_paf_range_laplace(const std::vector<CompensationFunction>& compensations,
                                  const RangeSelectionOptions& opts) {
  if (!any_superadditive(compensations)) return PafRange(opts.grid_lower, opts.cap);

  const double s = opts.rel_slack;
  auto feasible = [&](double t) {
    return corollary_endpoint_holds(compensations, t, s) && corollary_curvature_holds(compensations, t, s);
  };
  auto refine = [](double good, double bad, auto&& pred) {
    // pred(good) holds, pred(bad) does not; returns the boundary on the good side.
    for (int it = 0; it < 200 && std::abs(bad - good) > 4.0 * std::numeric_limits<double>::epsilon() * std::abs(bad);
         ++it) {
      const double mid = 0.5 * (good + bad);
      if (pred(mid)) good = mid;
      else bad = mid;
    }
    return good;
  };

  const std::vector<double> grid = geometric_grid(opts.grid_lower, opts.cap, opts.points);
  std::size_t k = 0;
  while (k < grid.size() && !feasible(grid[k])) ++k;
  if (k == grid.size()) throw InfeasibleError("no θ satisfies the partial arbitrage-freeness conditions");
  const double theta_lower = k == 0 ? grid[0] : refine(grid[k], grid[k - 1], feasible);

  auto curvature_ok = [&](double t) { return corollary_curvature_holds(compensations, t, s); };
  std::size_t j = k;
  while (j < grid.size() && curvature_ok(grid[j])) ++j;
  double theta_upper = opts.cap;
  if (j < grid.size()) theta_upper = refine(std::max(grid[j - 1], theta_lower), grid[j], curvature_ok);
  return PafRange(theta_lower, std::max(theta_upper, theta_lower));
}

CheckReport verify_pricing(const PricingFunction& pricing, const CheckOptions& opts) {
  const UtilityCurve c = pricing.curve(LinearQuery({0.0, 1.0})).normalized();
  CheckReport report;
  if (!pricing.range()) {
    report = check_af_properties(c, opts);
    PropertyResult cls{"compensation_class", true, std::nullopt, ""};
    const auto& comps = pricing.compensations();
    for (std::size_t i = 0; i < comps.size(); ++i) {
      if (comps[i].additivity() == Additivity::superadditive) {
        cls.passed = false;
        cls.detail = "owner " + std::to_string(i) + " has superadditive compensation " + comps[i].tag();
        break;
      }
    }
    report.properties.push_back(cls);
    return report;
  }
  const PafRange& r = *pricing.range();
  report = check_paf_properties(c, r.theta_lower, r.theta_upper, opts);
  report.merge(check_superadditive_conditions(c, pricing.compensations(), r.theta_lower, r.theta_upper, opts));
  return report;
}

}  // namespace pdpm
