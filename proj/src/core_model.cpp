#include "pdpm/core_model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "pdpm/errors.hpp"

namespace pdpm {

Database::Database(std::vector<int> rows, std::size_t domain_size)
    : rows_(std::move(rows)), domain_size_(domain_size) {
  if (domain_size_ == 0) throw DomainError("database domain size must be positive");
  for (std::size_t i = 0; i < rows_.size(); ++i) {
    if (rows_[i] < 1 || static_cast<std::size_t>(rows_[i]) > domain_size_) {
      throw DomainError("row " + std::to_string(i) + " has value " + std::to_string(rows_[i]) +
                        " outside [1, " + std::to_string(domain_size_) + "]");
    }
  }
}

std::size_t Histogram::total() const noexcept {
  return std::accumulate(counts_.begin(), counts_.end(), std::size_t{0});
}

LinearQuery::LinearQuery(std::vector<double> weights) : weights_(std::move(weights)) {
  if (weights_.empty()) throw DomainError("linear query must have at least one weight");
  for (double w : weights_) {
    if (!std::isfinite(w)) throw DomainError("linear query weights must be finite");
  }
}

bool LinearQuery::is_counting() const noexcept {
  return std::all_of(weights_.begin(), weights_.end(), [](double w) { return w == 0.0 || w == 1.0; });
}

LinearQuery LinearQuery::scaled(double factor) const {
  std::vector<double> w = weights_;
  for (double& x : w) x *= factor;
  return LinearQuery(std::move(w));
}

Pattern::Pattern(std::vector<double> ratios) : ratios_(std::move(ratios)) {
  if (ratios_.empty()) throw DomainError("pattern must be non-empty");
  bool has_one = false;
  for (double r : ratios_) {
    if (!(r >= 0.0 && r <= 1.0)) throw DomainError("pattern elements must lie in [0, 1]");
    has_one = has_one || r == 1.0;
  }
  if (!has_one) throw DomainError("pattern must contain an element equal to 1");
}

std::vector<double> Pattern::scaled(double theta) const {
  std::vector<double> out(ratios_.size());
  std::transform(ratios_.begin(), ratios_.end(), out.begin(), [theta](double r) { return r * theta; });
  return out;
}

QueryRequest::QueryRequest(LinearQuery q, double v) : query(std::move(q)), variance(v) {
  if (!(v > 0.0)) throw ParameterError("requested variance must be positive");
}

Histogram build_histogram(const Database& db) {
  std::vector<std::size_t> counts(db.domain_size(), 0);
  for (int value : db.rows()) ++counts[static_cast<std::size_t>(value - 1)];
  return Histogram(std::move(counts));
}

double evaluate_query(const LinearQuery& q, const Histogram& x) {
  if (q.dimension() != x.dimension()) {
    throw DomainError("query dimension " + std::to_string(q.dimension()) +
                      " does not match histogram dimension " + std::to_string(x.dimension()));
  }
  double y = 0.0;
  for (std::size_t l = 0; l < q.dimension(); ++l) {
    y += q.weights()[l] * static_cast<double>(x.counts()[l]);
  }
  return y;
}

double global_sensitivity(const LinearQuery& q) {
  auto [lo, hi] = std::minmax_element(q.weights().begin(), q.weights().end());
  return *hi - *lo;
}

Pattern normalize_to_pattern(std::span<const double> weights) {
  if (weights.empty()) throw DomainError("cannot normalize an empty weight vector");
  double max = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0) || !std::isfinite(w)) throw DomainError("pattern weights must be finite and non-negative");
    max = std::max(max, w);
  }
  if (max == 0.0) throw DomainError("cannot normalize an all-zero weight vector");
  std::vector<double> rho(weights.size());
  std::transform(weights.begin(), weights.end(), rho.begin(), [max](double w) { return w / max; });
  return Pattern(std::move(rho));
}

}  // namespace pdpm
