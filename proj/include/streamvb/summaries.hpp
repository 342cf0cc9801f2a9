#pragma once

// Posterior summaries of the q-densities: Normal for coefficient blocks and
// Inverse-Gamma (shape, rate) for variance parameters.

#include <boost/math/distributions/inverse_gamma.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "linalg.hpp"
#include "special_functions.hpp"

namespace streamvb {

/// A labelled univariate summary: mean, sd and central 95% interval.
struct ParamSummary {
  std::string label;
  double mean = 0.0;
  double sd = 0.0;
  double q025 = 0.0;
  double q975 = 0.0;
};

inline ParamSummary normal_summary(std::string label, double mean, double variance) {
  const double sd = std::sqrt(std::max(variance, 0.0));
  return {std::move(label), mean, sd, mean - kZ975 * sd, mean + kZ975 * sd};
}

/// Summary of c' theta under theta ~ N(mu, Sigma).
inline ParamSummary linear_functional_summary(std::string label, const Vec& c, const Vec& mu, const Mat& sigma) {
  return normal_summary(std::move(label), c.dot(mu), c.dot(sigma * c));
}

inline double inv_gamma_quantile(const InverseGammaParams& p, double prob) {
  boost::math::inverse_gamma_distribution<double> d(p.shape(), p.rate());
  return boost::math::quantile(d, prob);
}

inline double inv_gamma_mean(const InverseGammaParams& p) {
  return p.shape() > 1.0 ? p.rate() / (p.shape() - 1.0) : std::numeric_limits<double>::infinity();
}

inline double inv_gamma_sd(const InverseGammaParams& p) {
  const double a = p.shape();
  if (a <= 2.0) return std::numeric_limits<double>::infinity();
  return p.rate() / ((a - 1.0) * std::sqrt(a - 2.0));
}

/// Summary of a variance parameter from its Inverse-Gamma q-density.
inline ParamSummary inv_gamma_summary(std::string label, const InverseGammaParams& p) {
  return {std::move(label), inv_gamma_mean(p), inv_gamma_sd(p), inv_gamma_quantile(p, 0.025),
          inv_gamma_quantile(p, 0.975)};
}

/// Summary of log(v) for v ~ Inverse-Gamma(A, B): E log v = log B - digamma(A),
/// Var log v = trigamma(A); interval endpoints are logs of the v quantiles.
inline ParamSummary log_inv_gamma_summary(std::string label, const InverseGammaParams& p) {
  const double a = p.shape();
  // trigamma via asymptotic lift, enough for a standard deviation
  double x = a, tri = 0.0;
  while (x < 6.0) {
    tri += 1.0 / (x * x);
    x += 1.0;
  }
  const double ix = 1.0 / x, ix2 = ix * ix;
  tri += ix + 0.5 * ix2 + ix * ix2 * (1.0 / 6.0 - ix2 * (1.0 / 30.0 - ix2 * (1.0 / 42.0 - ix2 / 30.0)));
  return {std::move(label), std::log(p.rate()) - digamma(a), std::sqrt(tri), std::log(inv_gamma_quantile(p, 0.025)),
          std::log(inv_gamma_quantile(p, 0.975))};
}

/// Inverse-Gamma q-density of a variance parameter reconstructed from its
/// reciprocal moment: shape A, rate A / mu_recip.
inline InverseGammaParams inv_gamma_from_recip(double shape, double mu_recip) {
  return InverseGammaParams(shape, shape / mu_recip);
}

struct DensityPoint {
  double x;
  double density;
};

/// 201-point grid over mean +/- 4 sd of a Normal.
inline std::vector<DensityPoint> normal_density_grid(double mean, double sd, int points = 201) {
  std::vector<DensityPoint> out;
  out.reserve(points);
  for (int i = 0; i < points; ++i) {
    const double x = mean - 4.0 * sd + 8.0 * sd * i / (points - 1);
    out.push_back({x, sd > 0 ? normal_pdf((x - mean) / sd) / sd : 0.0});
  }
  return out;
}

/// Grid over mean +/- 4 sd (clipped to positive values) when the moments
/// exist, otherwise over the 0.001 to 0.999 quantile range.
inline std::vector<DensityPoint> inv_gamma_density_grid(const InverseGammaParams& p, int points = 201) {
  double lo, hi;
  const double m = inv_gamma_mean(p), s = inv_gamma_sd(p);
  if (std::isfinite(m) && std::isfinite(s)) {
    lo = std::max(m - 4.0 * s, 1e-3 * inv_gamma_quantile(p, 0.001));
    hi = m + 4.0 * s;
  } else {
    lo = inv_gamma_quantile(p, 0.001);
    hi = inv_gamma_quantile(p, 0.999);
  }
  std::vector<DensityPoint> out;
  out.reserve(points);
  for (int i = 0; i < points; ++i) {
    const double x = lo + (hi - lo) * i / (points - 1);
    out.push_back({x, std::exp(inv_gamma_log_density(x, p))});
  }
  return out;
}

}  // namespace streamvb
