#pragma once

// Truncated-line spline basis z_k(x) = (x - kappa_k)_+ over a knot set frozen
// at warm-up. Inputs outside [domain_lo, domain_hi] are clamped to the
// boundary and counted.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "linalg.hpp"

namespace streamvb {

class SplineBasis {
 public:
  SplineBasis(std::vector<double> knots, double domain_lo, double domain_hi)
      : knots_(std::move(knots)), lo_(domain_lo), hi_(domain_hi), exceedances_(std::make_shared<std::atomic<std::int64_t>>(0)) {
    if (knots_.empty()) throw std::invalid_argument("SplineBasis: at least one knot required");
    for (std::size_t k = 1; k < knots_.size(); ++k)
      if (!(knots_[k] > knots_[k - 1])) throw std::invalid_argument("SplineBasis: knots must be strictly increasing");
    if (!(lo_ < knots_.front()) || !(knots_.back() < hi_))
      throw std::invalid_argument("SplineBasis: knots must lie strictly inside the domain");
  }

  std::size_t size() const { return knots_.size(); }
  const std::vector<double>& knots() const { return knots_; }
  double domain_lo() const { return lo_; }
  double domain_hi() const { return hi_; }

  /// Number of evaluations that fell outside the domain and were clamped.
  std::int64_t exceedances() const { return exceedances_->load(std::memory_order_relaxed); }

  Vec eval(double x) const {
    Vec z(static_cast<Eigen::Index>(knots_.size()));
    eval_into(x, z);
    return z;
  }

  template <typename Out>
  void eval_into(double x, Out&& z) const {
    if (x < lo_ || x > hi_) {
      exceedances_->fetch_add(1, std::memory_order_relaxed);
      x = std::clamp(x, lo_, hi_);
    }
    for (std::size_t k = 0; k < knots_.size(); ++k) z(static_cast<Eigen::Index>(k)) = std::max(x - knots_[k], 0.0);
  }

 private:
  std::vector<double> knots_;
  double lo_;
  double hi_;
  std::shared_ptr<std::atomic<std::int64_t>> exceedances_;
};

/// Sample quantile with linear interpolation between order statistics.
inline double sample_quantile(std::vector<double> values, double prob) {
  if (values.empty()) throw std::invalid_argument("sample_quantile: empty sample");
  std::sort(values.begin(), values.end());
  const double h = prob * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

/// Knots at the k/(K+1) sample quantiles of the unique warm-up values,
/// domain [min, max] of the warm-up values.
inline SplineBasis make_knots(const std::vector<double>& warmup_values, std::size_t num_knots) {
  if (num_knots < 1) throw std::invalid_argument("make_knots: K must be at least 1");
  std::vector<double> uniq(warmup_values);
  std::sort(uniq.begin(), uniq.end());
  uniq.erase(std::unique(uniq.begin(), uniq.end()), uniq.end());
  if (uniq.size() < num_knots + 2)
    throw std::invalid_argument("make_knots: need at least K+2 distinct values (have " + std::to_string(uniq.size()) +
                                ", K=" + std::to_string(num_knots) + ")");
  std::vector<double> knots;
  knots.reserve(num_knots);
  for (std::size_t k = 1; k <= num_knots; ++k)
    knots.push_back(sample_quantile(uniq, static_cast<double>(k) / static_cast<double>(num_knots + 1)));
  return SplineBasis(std::move(knots), uniq.front(), uniq.back());
}

/// Default basis size when none is configured.
inline std::size_t default_num_knots(std::size_t n_warm) { return std::max<std::size_t>(1, std::min<std::size_t>(35, n_warm / 4)); }

}  // namespace streamvb
