#include "pdpm/utility.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "pdpm/errors.hpp"
#include "pdpm/mechanisms.hpp"

namespace pdpm {

namespace {

void require_positive_theta(double theta) {
  if (!(theta > 0.0) || !std::isfinite(theta)) throw ParameterError("utility requires finite θ > 0");
}

// Retention probability (e^{aθ}−1)/(e^θ−1), finite for large θ.
double retention(double a, double theta) {
  if (a == 0.0) return 0.0;
  if (a == 1.0) return 1.0;
  return std::exp((a - 1.0) * theta) * (-std::expm1(-a * theta)) / (-std::expm1(-theta));
}

// Σ w·d² / Σ w on unnormalized weights, so ε = 0 reduces to an exact integer ratio.
double exponential_branch(std::size_t n, double y, double epsilon) {
  double num = 0.0;
  double den = 0.0;
  for (std::size_t o = 0; o <= n; ++o) {
    const double d = static_cast<double>(o) - y;
    const double w = std::exp(-epsilon * std::abs(d) / 2.0);
    num += w * d * d;
    den += w;
  }
  return num / den;
}

}  // namespace

const char* to_string(MechanismKind m) noexcept {
  switch (m) {
    case MechanismKind::laplace: return "laplace";
    case MechanismKind::sample: return "sample";
    case MechanismKind::exponential: return "exponential";
  }
  return "?";
}

UtilityCurve::UtilityCurve(MechanismKind m, double sensitivity, Pattern rho, std::size_t n)
    : mechanism_(m), sensitivity_(sensitivity), rho_(std::move(rho)), n_(n) {
  if (!(sensitivity_ >= 0.0) || !std::isfinite(sensitivity_)) throw ParameterError("Δq must be finite and ≥ 0");
}

UtilityCurve UtilityCurve::laplace(double sensitivity) {
  return UtilityCurve(MechanismKind::laplace, sensitivity, Pattern::ones(1), 0);
}

UtilityCurve UtilityCurve::sample(double sensitivity, Pattern rho) {
  return UtilityCurve(MechanismKind::sample, sensitivity, std::move(rho), 0);
}

UtilityCurve UtilityCurve::exponential(std::size_t n) {
  return UtilityCurve(MechanismKind::exponential, 1.0, Pattern::ones(std::max<std::size_t>(n, 1)), n);
}

UtilityCurve UtilityCurve::for_query(MechanismKind mechanism, const LinearQuery& q, const Pattern& rho) {
  switch (mechanism) {
    case MechanismKind::laplace: return laplace(global_sensitivity(q));
    case MechanismKind::sample: return sample(global_sensitivity(q), rho);
    case MechanismKind::exponential:
      if (!q.is_counting()) throw UnsupportedError("exponential utility is defined for counting queries only");
      return exponential(rho.size());
  }
  throw ParameterError("unknown mechanism");
}

UtilityCurve UtilityCurve::normalized() const {
  UtilityCurve c = *this;
  c.sensitivity_ = 1.0;
  return c;
}

double UtilityCurve::value(double theta) const {
  if (mechanism_ == MechanismKind::exponential) return utility_exponential(n_, theta);
  require_positive_theta(theta);
  const double dq2 = sensitivity_ * sensitivity_;
  if (dq2 == 0.0) return 0.0;
  double bern = 0.0;
  if (mechanism_ == MechanismKind::sample) {
    for (double a : rho_.ratios()) {
      const double p = retention(a, theta);
      bern += p * (1.0 - p);
    }
  }
  return dq2 * (bern + 2.0 / (theta * theta));
}

UtilityDerivatives UtilityCurve::derivatives(double theta) const {
  if (mechanism_ == MechanismKind::exponential) {
    throw UnsupportedError("exponential utility has no analytic θ-derivatives");
  }
  require_positive_theta(theta);
  const double dq2 = sensitivity_ * sensitivity_;
  double s1 = 0.0;
  double s2 = 0.0;
  if (mechanism_ == MechanismKind::sample) {
    // With g = 1/(1−e^{−θ}) and e = e^{(a−1)θ}·g, the numerator N = e^{aθ}−1
    // and denominator D = e^θ−1 give N'/D = a·e, N''/D = a²·e, D'/D = g.
    const double g = 1.0 / (-std::expm1(-theta));
    for (double a : rho_.ratios()) {
      if (a == 0.0 || a == 1.0) continue;
      const double p = retention(a, theta);
      const double e = std::exp((a - 1.0) * theta) * g;
      const double p1 = a * e - p * g;
      const double p2 = a * a * e - p * g - 2.0 * g * p1;
      s1 += (1.0 - 2.0 * p) * p1;
      s2 += (1.0 - 2.0 * p) * p2 - 2.0 * p1 * p1;
    }
  }
  const double t3 = theta * theta * theta;
  return {dq2 * (s1 - 4.0 / t3), dq2 * (s2 + 12.0 / (t3 * theta))};
}

double UtilityCurve::supremum() const {
  if (mechanism_ == MechanismKind::exponential) return utility_exponential(n_, 0.0);
  return sensitivity_ == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
}

double utility_laplace(const LinearQuery& q, double theta) {
  return UtilityCurve::laplace(global_sensitivity(q)).value(theta);
}

double utility_sample(const LinearQuery& q, const Pattern& rho, double theta) {
  return UtilityCurve::sample(global_sensitivity(q), rho).value(theta);
}

double utility_exponential(const LinearQuery& q, std::size_t n, double epsilon) {
  if (!q.is_counting()) throw UnsupportedError("exponential utility is defined for counting queries only");
  return utility_exponential(n, epsilon);
}

double utility_exponential(std::size_t n, double epsilon) {
  if (!(epsilon >= 0.0) || !std::isfinite(epsilon)) throw ParameterError("exponential utility requires finite ε ≥ 0");
  double best = 0.0;
  for (std::size_t y = 0; y <= n; ++y) best = std::max(best, exponential_branch(n, static_cast<double>(y), epsilon));
  return best;
}

UtilityDerivatives utility_derivatives(const UtilityCurve& curve, double theta) { return curve.derivatives(theta); }

UtilityDerivatives numeric_derivatives(const UtilityCurve& curve, double theta, double rel_step) {
  require_positive_theta(theta);
  const double h = rel_step * theta;
  const double up = curve.value(theta + h);
  const double mid = curve.value(theta);
  const double down = curve.value(theta - h);
  return {(up - down) / (2.0 * h), (up - 2.0 * mid + down) / (h * h)};
}

double invert_utility(const UtilityCurve& curve, double v, const InvertOptions& opts) {
  if (!(v > 0.0) || std::isnan(v)) throw ParameterError("invert_utility requires v > 0");
  if (curve.sensitivity() == 0.0) return 0.0;
  if (v >= curve.supremum()) return 0.0;

  double lo = opts.lower;
  double hi = opts.upper;
  if (!(lo > 0.0) || !(hi > lo)) throw ParameterError("invert_utility: bad bracket");

  while (curve.value(hi) > v) {
    hi *= 2.0;
    if (hi > 1e12) throw InfeasibleError("requested variance is below what any privacy loss can reach");
  }
  while (curve.value(lo) < v) {
    lo /= 2.0;
    if (lo < 1e-300) throw InfeasibleError("requested variance is above the curve's range");
  }
  const double ulo = curve.value(lo);
  const double uhi = curve.value(hi);
  if (!(ulo > uhi)) throw CheckerError("utility curve is not decreasing on the inversion bracket");
  // Bisection needs a single crossing; probe the bracket geometrically.
  constexpr int kProbes = 64;
  const double step = std::pow(hi / lo, 1.0 / kProbes);
  double prev = ulo;
  double t = lo;
  for (int i = 1; i <= kProbes; ++i) {
    t = i == kProbes ? hi : t * step;
    const double cur = curve.value(t);
    if (cur > prev * (1.0 + 1e-12)) {
      throw CheckerError("utility curve rises near θ=" + std::to_string(t) + " inside the inversion bracket");
    }
    prev = cur;
  }

  for (int it = 0; it < opts.max_iterations && hi - lo > 4.0 * std::numeric_limits<double>::epsilon() * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (curve.value(mid) > v) lo = mid;
    else hi = mid;
  }
  const double ul = curve.value(lo);
  const double uh = curve.value(hi);
  return std::abs(ul - v) <= std::abs(uh - v) ? lo : hi;
}

}  // namespace pdpm
