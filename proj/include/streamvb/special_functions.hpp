#pragma once

// Scalar special functions and Inverse-Gamma facts used by the MFVB solvers.
//
// Inverse-Gamma(A, B) is parameterized by shape A and *rate* B throughout:
//   p(v) = B^A / Gamma(A) * v^(-A-1) * exp(-B / v),   E(1/v) = A / B.

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

namespace streamvb {

class InverseGammaParams {
 public:
  InverseGammaParams(double shape, double rate) : shape_(shape), rate_(rate) {
    if (!(shape > 0.0) || !(rate > 0.0) || !std::isfinite(shape) ||
        !std::isfinite(rate)) {
      throw std::invalid_argument("InverseGammaParams: shape and rate must be positive and finite (got shape=" +
                                  std::to_string(shape) + ", rate=" + std::to_string(rate) + ")");
    }
  }

  double shape() const { return shape_; }
  double rate() const { return rate_; }

 private:
  double shape_;
  double rate_;
};

inline double inv_gamma_mean_reciprocal(const InverseGammaParams& p) { return p.shape() / p.rate(); }

inline double inv_gamma_log_density(double v, const InverseGammaParams& p) {
  if (!(v > 0.0)) throw std::domain_error("inv_gamma_log_density: v must be positive");
  const double a = p.shape();
  const double b = p.rate();
  return a * std::log(b) - std::lgamma(a) - (a + 1.0) * std::log(v) - b / v;
}

/// Digamma for x > 0. Lifts x above 6 with the recurrence psi(x) = psi(x+1) - 1/x,
/// then applies the asymptotic expansion in 1/x^2.
inline double digamma(double x) {
  if (!(x > 0.0) || !std::isfinite(x)) throw std::domain_error("digamma: argument must be positive and finite");
  double acc = 0.0;
  while (x < 6.0) {
    acc -= 1.0 / x;
    x += 1.0;
  }
  const double inv = 1.0 / x;
  const double inv2 = inv * inv;
  // Bernoulli-number coefficients B_{2k} / (2k).
  const double series =
      inv2 * (1.0 / 12.0 -
              inv2 * (1.0 / 120.0 -
                      inv2 * (1.0 / 252.0 -
                              inv2 * (1.0 / 240.0 -
                                      inv2 * (1.0 / 132.0 -
                                              inv2 * (691.0 / 32760.0 -
                                                      inv2 * (1.0 / 12.0 - inv2 * (3617.0 / 8160.0))))))));
  return acc + std::log(x) - 0.5 * inv - series;
}

/// Jaakkola-Jordan weight tanh(xi/2) / (4 xi), even in xi, with limit 1/8 at zero.
inline double lambda_jj(double xi) {
  const double a = std::abs(xi);
  if (a < 1e-8) return 0.125;
  return std::tanh(0.5 * a) / (4.0 * a);
}

/// Numerically safe logistic function 1 / (1 + exp(-x)).
inline double logistic(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

inline double normal_pdf(double x) { return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi); }

/// Upper 97.5% point of the standard Normal.
inline constexpr double kZ975 = 1.959963984540054;

}  // namespace streamvb
