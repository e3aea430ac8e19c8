#pragma once
#include <cstdint>
#include <random>
#include <vector>

#include "pdpm/core_model.hpp"

namespace pdpm {

// Per-owner privacy losses Φ = [ε_1..ε_n], all ε_i ≥ 0.
class PrivacyLossVector {
 public:
  explicit PrivacyLossVector(std::vector<double> losses);

  const std::vector<double>& values() const noexcept { return losses_; }
  std::size_t size() const noexcept { return losses_.size(); }
  double max() const noexcept;

 private:
  std::vector<double> losses_;
};

// Seeded random stream. Uniforms are built from the raw 53 high bits of
// mt19937_64 rather than std::uniform_real_distribution, whose output is
// implementation-defined, so a seed reproduces across standard libraries.
class NoiseSource {
 public:
  explicit NoiseSource(std::uint64_t seed);

  std::uint64_t seed() const noexcept { return seed_; }

  // Uniform on the open interval (0, 1).
  double uniform();
  // Uniform integer in [lo, hi].
  std::uint64_t uniform_int(std::uint64_t lo, std::uint64_t hi);
  bool bernoulli(double p);
  // Inverse-CDF Laplace draw with the given scale: one uniform per call.
  double laplace(double scale);

  std::mt19937_64& engine() noexcept { return engine_; }

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
};

// Mixes a user seed so nearby seeds (s, s^1, s^2, ...) give unrelated streams.
std::uint64_t mix_seed(std::uint64_t seed) noexcept;

// q(D) + Lap(Δq/ε).
double perturb_laplace(const Database& db, const LinearQuery& q, double epsilon, NoiseSource& rng);

// Keeps row i with probability (e^{ε_i} − 1)/(e^{max ε} − 1), evaluates q on
// the retained rows, then adds Lap(Δq/max ε). Rows with ε_i = 0 are dropped
// and rows with ε_i = max ε are kept without consuming a draw.
double perturb_sample(const Database& db, const LinearQuery& q, const PrivacyLossVector& losses,
                      NoiseSource& rng);

// Per-row retention probabilities of the Sample mechanism.
std::vector<double> sample_probabilities(const PrivacyLossVector& losses);

// Pr[o] ∝ exp(−ε|o − y|/2) for o ∈ {0..n}.
std::vector<double> exponential_mechanism_probabilities(std::size_t n, double y, double epsilon);

// Draws o ∈ {0..n} from the exponential mechanism; q must be a counting query.
int perturb_exponential(const Database& db, const LinearQuery& q, double epsilon, NoiseSource& rng);

}  // namespace pdpm
