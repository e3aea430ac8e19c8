#pragma once
#include <cstddef>
#include <span>
#include <vector>

namespace pdpm {

// One row per data owner; each row holds a value in [1, d].
class Database {
 public:
  Database(std::vector<int> rows, std::size_t domain_size);

  const std::vector<int>& rows() const noexcept { return rows_; }
  std::size_t domain_size() const noexcept { return domain_size_; }
  std::size_t size() const noexcept { return rows_.size(); }

 private:
  std::vector<int> rows_;
  std::size_t domain_size_;
};

// x_l = number of rows whose value is l (index l-1).
class Histogram {
 public:
  explicit Histogram(std::vector<std::size_t> counts) : counts_(std::move(counts)) {}

  const std::vector<std::size_t>& counts() const noexcept { return counts_; }
  std::size_t dimension() const noexcept { return counts_.size(); }
  std::size_t total() const noexcept;

  bool operator==(const Histogram&) const = default;

 private:
  std::vector<std::size_t> counts_;
};

class LinearQuery {
 public:
  explicit LinearQuery(std::vector<double> weights);

  const std::vector<double>& weights() const noexcept { return weights_; }
  std::size_t dimension() const noexcept { return weights_.size(); }

  // Entries all in {0, 1}.
  bool is_counting() const noexcept;

  LinearQuery scaled(double factor) const;

 private:
  std::vector<double> weights_;
};

// Ratio vector ρ with 0 ≤ ρ_i ≤ 1 and at least one ρ_j == 1.
class Pattern {
 public:
  explicit Pattern(std::vector<double> ratios);

  static Pattern ones(std::size_t n) { return Pattern(std::vector<double>(n, 1.0)); }

  const std::vector<double>& ratios() const noexcept { return ratios_; }
  std::size_t size() const noexcept { return ratios_.size(); }
  double operator[](std::size_t i) const noexcept { return ratios_[i]; }

  // Losses in this pattern at scale θ: ρ·θ.
  std::vector<double> scaled(double theta) const;

  bool operator==(const Pattern&) const = default;

 private:
  std::vector<double> ratios_;
};

struct QueryRequest {
  LinearQuery query;
  double variance;

  QueryRequest(LinearQuery q, double v);
};

Histogram build_histogram(const Database& db);

double evaluate_query(const LinearQuery& q, const Histogram& x);

// Δq = max_l q_l − min_l q_l.
double global_sensitivity(const LinearQuery& q);

// ρ_i = w_i / max_j w_j.
Pattern normalize_to_pattern(std::span<const double> weights);

}  // namespace pdpm
