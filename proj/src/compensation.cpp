#include "pdpm/compensation.hpp"

#include <cmath>
#include <limits>

#include "pdpm/errors.hpp"

namespace pdpm {

const char* to_string(Additivity a) noexcept {
  switch (a) {
    case Additivity::subadditive: return "subadditive";
    case Additivity::superadditive: return "superadditive";
    case Additivity::linear: return "linear";
  }
  return "?";
}

CompensationFunction::CompensationFunction(CompensationKind kind, std::string tag, double a, double b,
                                           double c)
    : kind_(kind), tag_(std::move(tag)), linear_(a), sqrt_(b), exp_(c) {
  if (!(a >= 0 && b >= 0 && c >= 0) || !std::isfinite(a + b + c)) {
    throw ParameterError("compensation coefficients must be finite and non-negative");
  }
  if (a + b + c == 0) throw ParameterError("compensation function must be increasing");
  // √ε is concave and e^ε − 1 convex; their sum has no fixed additivity class.
  if (b > 0 && c > 0) throw ParameterError("compensation '" + tag_ + "' mixes concave and convex terms");
  if (tag_.empty()) throw ParameterError("compensation tag must be non-empty");
}

CompensationFunction CompensationFunction::B() { return {CompensationKind::B, "B", 0, 2, 0}; }
CompensationFunction CompensationFunction::L() { return {CompensationKind::L, "L", 2, 0, 0}; }
CompensationFunction CompensationFunction::C1() { return {CompensationKind::C1, "C1", 1, 1, 0}; }
CompensationFunction CompensationFunction::C2() { return {CompensationKind::C2, "C2", 1.5, 0.5, 0}; }
CompensationFunction CompensationFunction::S() { return {CompensationKind::S, "S", 0, 0, 1}; }

CompensationFunction CompensationFunction::custom(std::string tag, double linear, double sqrt, double exp) {
  if (tag == "B" || tag == "L" || tag == "C1" || tag == "C2" || tag == "S") {
    throw ParameterError("custom compensation may not reuse the reserved tag '" + tag + "'");
  }
  return {CompensationKind::custom, std::move(tag), linear, sqrt, exp};
}

CompensationFunction CompensationFunction::from_tag(const std::string& tag) {
  if (tag == "B") return B();
  if (tag == "L") return L();
  if (tag == "C1") return C1();
  if (tag == "C2") return C2();
  if (tag == "S") return S();
  throw ParameterError("unknown compensation function '" + tag + "'");
}

Additivity CompensationFunction::additivity() const noexcept {
  if (sqrt_ > 0) return Additivity::subadditive;
  if (exp_ > 0) return Additivity::superadditive;
  return Additivity::linear;
}

double CompensationFunction::operator()(double eps) const {
  if (eps < 0) throw ParameterError("privacy loss must be non-negative");
  double v = linear_ * eps;
  if (sqrt_ > 0) v += sqrt_ * std::sqrt(eps);
  if (exp_ > 0) v += exp_ * std::expm1(eps);
  return v;
}

double CompensationFunction::derivative(double eps) const {
  if (eps < 0) throw ParameterError("privacy loss must be non-negative");
  double d = linear_;
  if (sqrt_ > 0) d += eps == 0 ? std::numeric_limits<double>::infinity() : 0.5 * sqrt_ / std::sqrt(eps);
  if (exp_ > 0) d += exp_ * std::exp(eps);
  return d;
}

double CompensationFunction::second_derivative(double eps) const {
  if (eps < 0) throw ParameterError("privacy loss must be non-negative");
  double d = 0;
  if (sqrt_ > 0) d -= eps == 0 ? std::numeric_limits<double>::infinity() : 0.25 * sqrt_ / (eps * std::sqrt(eps));
  if (exp_ > 0) d += exp_ * std::exp(eps);
  return d;
}

double CompensationFunction::inverse(double compensation) const {
  if (compensation < 0) throw ParameterError("compensation must be non-negative");
  if (compensation == 0) return 0;
  double lo = 0, hi = 1;
  while ((*this)(hi) < compensation) {
    hi *= 2;
    if (hi > 1e12) {
      throw InfeasibleError("no bracket for inverse of compensation '" + tag_ + "'");
    }
  }
  for (int it = 0; it < 200 && hi - lo > 4 * std::numeric_limits<double>::epsilon() * hi; ++it) {
    double mid = 0.5 * (lo + hi);
    if ((*this)(mid) < compensation) lo = mid; else hi = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace pdpm
