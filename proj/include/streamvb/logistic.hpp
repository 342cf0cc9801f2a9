#pragma once

// Bernoulli-logit mixed model y ~ Bernoulli(logit^-1(X beta + Z u)) fitted with
// the Jaakkola-Jordan quadratic bound on the log-likelihood.

#include <cmath>
#include <stdexcept>
#include <utility>
#include <vector>

#include "fit_result.hpp"
#include "linalg.hpp"
#include "lmm.hpp"
#include "special_functions.hpp"
#include "splines.hpp"
#include "suffstats.hpp"

namespace streamvb {

struct LogisticState {
  Vec mu_bu;
  Mat Sigma_bu;
  std::vector<double> mu_recip_sigsq_u;
  std::vector<double> mu_recip_a_u;

  static LogisticState initial(const BlockSpec& spec) {
    const auto dim = spec.total_dim();
    const auto r = static_cast<std::size_t>(spec.num_blocks());
    return {Vec::Zero(dim), Mat::Identity(dim, dim), std::vector<double>(r, 1.0), std::vector<double>(r, 1.0)};
  }

  Eigen::Index dim() const { return mu_bu.size(); }
};

/// sqrt(c' (Sigma + mu mu') c); round-off negatives down to -1e-12 are clamped to zero.
inline double xi_for_row(const LogisticState& state, const Vec& c_new) {
  detail::check_dim(c_new.size(), state.dim(), "xi_for_row");
  const double m = c_new.dot(state.mu_bu);
  const double q = c_new.dot(state.Sigma_bu * c_new) + m * m;
  if (q < -1e-12) throw NumericalError("xi_for_row: negative quadratic form " + std::to_string(q));
  return std::sqrt(std::max(q, 0.0));
}

/// Sigma = [2 C' diag(lambda) C + blockdiag prior]^-1 and mu = Sigma C'(y - 1/2).
inline void update_coefficients(LogisticState& state, const LogisticMoments& stats, const BlockSpec& spec) {
  detail::check_dim(stats.dim(), spec.total_dim(), "logistic coefficients");
  Mat precision = 2.0 * stats.ct_lam_c;
  precision.diagonal() += block_prior_precision(spec, state.mu_recip_sigsq_u);
  state.Sigma_bu = spd_inverse(precision, "logistic coefficients");
  state.mu_bu = state.Sigma_bu * stats.cty_half;
}

/// One online arrival: xi from the current state (then frozen), accumulate,
/// refresh the Normal q-density, sweep block variances.
inline void step_online_logistic(LogisticState& state, LogisticMoments& stats, int y_new, const Vec& c_new,
                                 const BlockSpec& spec) {
  const double xi = xi_for_row(state, c_new);
  update_logistic(stats, y_new, c_new, xi);
  update_coefficients(state, stats, spec);
  sweep_block_variances(spec, state.mu_bu, state.Sigma_bu, state.mu_recip_sigsq_u, state.mu_recip_a_u);
}

inline double max_relative_change(const LogisticState& a, const LogisticState& b) {
  double m = std::max(block_relative_change(a.mu_bu, b.mu_bu), block_relative_change(a.Sigma_bu, b.Sigma_bu));
  for (std::size_t l = 0; l < a.mu_recip_sigsq_u.size(); ++l)
    m = std::max({m, scalar_relative_change(a.mu_recip_sigsq_u[l], b.mu_recip_sigsq_u[l]),
                  scalar_relative_change(a.mu_recip_a_u[l], b.mu_recip_a_u[l])});
  return m;
}

struct LogisticFit : FitResult<LogisticState> {
  Vec xi;
  /// C'(y - 1/2) and C' diag(lambda(xi)) C at the returned xi, for online seeding.
  LogisticMoments stats;
};

/// One batch sweep: coefficients from the current xi, then the optimal xi
/// vector, then the block variance pairs. Updates `xi` in place.
inline LogisticState cycle_logistic_batch(const LogisticState& state, Vec& xi, const Vec& y, const Mat& c,
                                          const BlockSpec& spec) {
  LogisticState next = state;
  update_coefficients(next, logistic_from_batch(y, c, xi), spec);
  const Mat second = next.Sigma_bu + next.mu_bu * next.mu_bu.transpose();
  xi = (c * second).cwiseProduct(c).rowwise().sum().cwiseMax(0.0).cwiseSqrt();
  sweep_block_variances(spec, next.mu_bu, next.Sigma_bu, next.mu_recip_sigsq_u, next.mu_recip_a_u);
  return next;
}

inline LogisticFit fit_batch_logistic(const Vec& y, const Mat& c, const BlockSpec& spec, const FitOptions& opts = {}) {
  spec.validate();
  detail::check_dim(c.rows(), y.size(), "fit_batch_logistic rows");
  detail::check_dim(c.cols(), spec.total_dim(), "fit_batch_logistic columns");
  for (Eigen::Index i = 0; i < y.size(); ++i)
    if (y(i) != 0.0 && y(i) != 1.0) throw std::invalid_argument("fit_batch_logistic: responses must be 0 or 1");
  LogisticFit fit;
  fit.state = LogisticState::initial(spec);
  // xi from the initial state (mu = 0, Sigma = I).
  fit.xi = c.rowwise().norm();
  for (int it = 1; it <= opts.max_iter; ++it) {
    const Vec xi_old = fit.xi;
    LogisticState next = cycle_logistic_batch(fit.state, fit.xi, y, c, spec);
    fit.last_change = std::max(max_relative_change(fit.state, next), block_relative_change(xi_old, fit.xi));
    fit.state = std::move(next);
    fit.iterations = it;
    if (it > 1 && fit.last_change < opts.tol) {
      fit.converged = true;
      break;
    }
  }
  fit.stats = logistic_from_batch(y, c, fit.xi);
  return fit;
}

struct CurvePoint {
  double x;
  double fit;
  double lo;
  double hi;
};

/// Logit-scale mean and 95% band at each grid point for the single-smooth
/// model with coefficients [intercept, slope, u_1..u_K].
inline std::vector<CurvePoint> posterior_curve(const Vec& mu, const Mat& sigma, const SplineBasis& basis,
                                               const std::vector<double>& grid) {
  const auto k = static_cast<Eigen::Index>(basis.size());
  detail::check_dim(mu.size(), 2 + k, "posterior_curve");
  std::vector<CurvePoint> out;
  out.reserve(grid.size());
  Vec c(2 + k);
  for (double x : grid) {
    c(0) = 1.0;
    c(1) = x;
    basis.eval_into(x, c.segment(2, k));
    const double m = c.dot(mu);
    const double sd = std::sqrt(std::max(c.dot(sigma * c), 0.0));
    out.push_back({x, m, m - kZ975 * sd, m + kZ975 * sd});
  }
  return out;
}

inline std::vector<CurvePoint> posterior_curve(const LogisticState& state, const SplineBasis& basis,
                                               const std::vector<double>& grid) {
  return posterior_curve(state.mu_bu, state.Sigma_bu, basis, grid);
}

}  // namespace streamvb
