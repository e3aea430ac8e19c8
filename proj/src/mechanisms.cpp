#include "pdpm/mechanisms.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "pdpm/errors.hpp"

namespace pdpm {

PrivacyLossVector::PrivacyLossVector(std::vector<double> losses) : losses_(std::move(losses)) {
  for (double e : losses_) {
    if (!(e >= 0.0) || !std::isfinite(e)) throw ParameterError("privacy losses must be finite and non-negative");
  }
}

double PrivacyLossVector::max() const noexcept {
  return losses_.empty() ? 0.0 : *std::max_element(losses_.begin(), losses_.end());
}

std::uint64_t mix_seed(std::uint64_t seed) noexcept {
  // splitmix64 finalizer
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

NoiseSource::NoiseSource(std::uint64_t seed) : seed_(seed), engine_(mix_seed(seed)) {}

double NoiseSource::uniform() {
  return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
}

std::uint64_t NoiseSource::uniform_int(std::uint64_t lo, std::uint64_t hi) {
  if (hi < lo) throw ParameterError("uniform_int: empty range");
  const std::uint64_t span = hi - lo + 1;
  if (span == 0) return engine_();
  // Rejection sampling keeps the draw unbiased for any span.
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % span;
  std::uint64_t x;
  do {
    x = engine_();
  } while (x >= limit);
  return lo + x % span;
}

bool NoiseSource::bernoulli(double p) { return uniform() < p; }

double NoiseSource::laplace(double scale) {
  const double u = uniform() - 0.5;
  return -scale * std::copysign(1.0, u) * std::log1p(-2.0 * std::abs(u));
}

double perturb_laplace(const Database& db, const LinearQuery& q, double epsilon, NoiseSource& rng) {
  if (!(epsilon > 0.0)) throw ParameterError("Laplace mechanism requires ε > 0");
  const double y = evaluate_query(q, build_histogram(db));
  const double sensitivity = global_sensitivity(q);
  if (sensitivity == 0.0) return y;
  return y + rng.laplace(sensitivity / epsilon);
}

std::vector<double> sample_probabilities(const PrivacyLossVector& losses) {
  const double top = losses.max();
  if (!(top > 0.0)) throw ParameterError("Sample mechanism requires max ε > 0");
  std::vector<double> pr(losses.size());
  // (e^{ε_i}−1)/(e^{θ}−1) rewritten to stay finite for large θ.
  const double denom = -std::expm1(-top);
  for (std::size_t i = 0; i < pr.size(); ++i) {
    const double e = losses.values()[i];
    if (e == 0.0) pr[i] = 0.0;
    else if (e == top) pr[i] = 1.0;
    else pr[i] = std::exp(e - top) * (-std::expm1(-e)) / denom;
  }
  return pr;
}

double perturb_sample(const Database& db, const LinearQuery& q, const PrivacyLossVector& losses,
                      NoiseSource& rng) {
  if (losses.size() != db.size()) throw DomainError("one privacy loss per database row is required");
  if (q.dimension() != db.domain_size()) throw DomainError("query dimension does not match database domain");
  const std::vector<double> pr = sample_probabilities(losses);
  std::vector<std::size_t> counts(db.domain_size(), 0);
  for (std::size_t i = 0; i < db.size(); ++i) {
    bool keep;
    if (pr[i] == 0.0) keep = false;
    else if (pr[i] == 1.0) keep = true;
    else keep = rng.bernoulli(pr[i]);
    if (keep) ++counts[static_cast<std::size_t>(db.rows()[i] - 1)];
  }
  const double y = evaluate_query(q, Histogram(std::move(counts)));
  const double sensitivity = global_sensitivity(q);
  if (sensitivity == 0.0) return y;
  return y + rng.laplace(sensitivity / losses.max());
}

std::vector<double> exponential_mechanism_probabilities(std::size_t n, double y, double epsilon) {
  if (!(epsilon >= 0.0)) throw ParameterError("exponential mechanism requires ε ≥ 0");
  std::vector<double> p(n + 1);
  double total = 0.0;
  for (std::size_t o = 0; o <= n; ++o) {
    p[o] = std::exp(-epsilon * std::abs(static_cast<double>(o) - y) / 2.0);
    total += p[o];
  }
  for (double& x : p) x /= total;
  return p;
}

int perturb_exponential(const Database& db, const LinearQuery& q, double epsilon, NoiseSource& rng) {
  if (!q.is_counting()) throw UnsupportedError("exponential mechanism is defined for counting queries only");
  const double y = evaluate_query(q, build_histogram(db));
  const std::vector<double> p = exponential_mechanism_probabilities(db.size(), y, epsilon);
  const double u = rng.uniform();
  double cdf = 0.0;
  for (std::size_t o = 0; o + 1 < p.size(); ++o) {
    cdf += p[o];
    if (u < cdf) return static_cast<int>(o);
  }
  return static_cast<int>(p.size() - 1);
}

}  // namespace pdpm
