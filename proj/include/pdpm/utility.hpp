#pragma once
#include <cstddef>
#include <optional>

#include "pdpm/core_model.hpp"

namespace pdpm {

enum class MechanismKind { laplace, sample, exponential };

const char* to_string(MechanismKind m) noexcept;

struct UtilityDerivatives {
  double first;
  double second;
};

// Worst-case variance v = U_M(q, ρ·θ) as a function of the scale θ.
//
// The query enters only through Δq, so a curve stores Δq and the pattern.
// The Exponential curve is the counting-query mechanism over {0..n} with a
// uniform loss ε = θ; it has no analytic derivatives here.
class UtilityCurve {
 public:
  static UtilityCurve laplace(double sensitivity);
  static UtilityCurve sample(double sensitivity, Pattern rho);
  static UtilityCurve exponential(std::size_t n);
  static UtilityCurve for_query(MechanismKind mechanism, const LinearQuery& q, const Pattern& rho);

  MechanismKind mechanism() const noexcept { return mechanism_; }
  double sensitivity() const noexcept { return sensitivity_; }
  const Pattern& pattern() const noexcept { return rho_; }
  std::size_t exponential_range() const noexcept { return n_; }

  // Same curve with Δq = 1, i.e. η(ρ·θ) = U/Δq².
  UtilityCurve normalized() const;

  double value(double theta) const;
  bool has_analytic_derivatives() const noexcept { return mechanism_ != MechanismKind::exponential; }
  UtilityDerivatives derivatives(double theta) const;

  // lim θ→0⁺ U; +inf for Laplace/Sample with Δq > 0.
  double supremum() const;

 private:
  UtilityCurve(MechanismKind m, double sensitivity, Pattern rho, std::size_t n);

  MechanismKind mechanism_;
  double sensitivity_;
  Pattern rho_;
  std::size_t n_;
};

// 2(Δq/θ)².
double utility_laplace(const LinearQuery& q, double theta);

// Δq²·[Σ_i Pr_i(1 − Pr_i) + 2/θ²], Pr_i = (e^{ρ_i θ} − 1)/(e^θ − 1).
double utility_sample(const LinearQuery& q, const Pattern& rho, double theta);

// max over y ∈ {0..n} of E[(o − y)²] under the exponential mechanism.
double utility_exponential(const LinearQuery& q, std::size_t n, double epsilon);
double utility_exponential(std::size_t n, double epsilon);

UtilityDerivatives utility_derivatives(const UtilityCurve& curve, double theta);

// Central differences with step h = rel_step·θ; usable on every curve.
UtilityDerivatives numeric_derivatives(const UtilityCurve& curve, double theta, double rel_step = 1e-4);

struct InvertOptions {
  double lower = 1e-9;
  double upper = 1e3;
  int max_iterations = 200;
};

// θ with U(θ) = v by bisection. Returns 0 when v is at or above sup U.
// Throws InfeasibleError if v is below what θ up to the bracket limit can
// reach, and CheckerError if the curve is not decreasing on the bracket.
double invert_utility(const UtilityCurve& curve, double v, const InvertOptions& opts = {});

}  // namespace pdpm
