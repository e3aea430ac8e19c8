#pragma once
#include <span>
#include <string>
#include <vector>

namespace pdpm {

enum class CompensationKind { B, L, C1, C2, S, custom };

enum class Additivity { subadditive, superadditive, linear };

const char* to_string(Additivity a) noexcept;

// Compensation μ(ε) = a·ε + b·√ε + c·(e^ε − 1) with a, b, c ≥ 0.
//
// The five named schemes are fixed coefficient triples:
//   B  = 2√ε          L  = 2ε          C1 = ε + √ε
//   C2 = 1.5ε + 0.5√ε S  = e^ε − 1
// Anything else is `custom` and carries a caller-chosen tag. Owners are
// grouped for pattern exchange by tag, so two custom functions with equal
// coefficients but different tags are treated as distinct.
class CompensationFunction {
 public:
  static CompensationFunction B();
  static CompensationFunction L();
  static CompensationFunction C1();
  static CompensationFunction C2();
  static CompensationFunction S();
  static CompensationFunction custom(std::string tag, double linear, double sqrt, double exp);
  static CompensationFunction from_tag(const std::string& tag);

  CompensationKind kind() const noexcept { return kind_; }
  const std::string& tag() const noexcept { return tag_; }
  Additivity additivity() const noexcept;

  double operator()(double eps) const;
  double derivative(double eps) const;
  double second_derivative(double eps) const;

  // μ⁻¹(c) by bisection; throws InfeasibleError if no bracket is found.
  double inverse(double compensation) const;

  bool same_function(const CompensationFunction& other) const noexcept { return tag_ == other.tag_; }

 private:
  CompensationFunction(CompensationKind kind, std::string tag, double a, double b, double c);

  CompensationKind kind_;
  std::string tag_;
  double linear_;
  double sqrt_;
  double exp_;
};

}  // namespace pdpm
