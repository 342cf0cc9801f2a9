#pragma once

// Gaussian linear mixed model y ~ N(X beta + Z u, sigma_eps^2 I) with
// u = [u_1 | ... | u_r], u_l ~ N(0, sigma_ul^2 I_{K_l}) and Half-Cauchy priors
// on sigma_eps and each sigma_ul. Coefficients are ordered [beta | u_1 | ... | u_r].

#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "fit_result.hpp"
#include "linalg.hpp"
#include "splines.hpp"
#include "summaries.hpp"
#include "suffstats.hpp"

namespace streamvb {

struct BlockSpec {
  int p = 1;
  std::vector<int> block_sizes;
  double sigsq_beta = 1e10;
  double A_eps = 1e5;
  std::vector<double> A_u;

  BlockSpec() = default;
  BlockSpec(int p_, std::vector<int> blocks, double sigsq_beta_ = 1e10, double a_eps = 1e5, std::vector<double> a_u = {})
      : p(p_), block_sizes(std::move(blocks)), sigsq_beta(sigsq_beta_), A_eps(a_eps), A_u(std::move(a_u)) {
    if (A_u.empty()) A_u.assign(block_sizes.size(), 1e5);
    validate();
  }

  int num_blocks() const { return static_cast<int>(block_sizes.size()); }
  int total_dim() const { return p + std::accumulate(block_sizes.begin(), block_sizes.end(), 0); }

  /// Offset of block l within the coefficient vector.
  int block_offset(int l) const {
    int off = p;
    for (int i = 0; i < l; ++i) off += block_sizes[static_cast<std::size_t>(i)];
    return off;
  }

  void validate() const {
    if (p < 1) throw std::invalid_argument("BlockSpec: p must be at least 1");
    for (int k : block_sizes)
      if (k < 1) throw std::invalid_argument("BlockSpec: block sizes must be at least 1");
    if (A_u.size() != block_sizes.size()) throw std::invalid_argument("BlockSpec: one A_u per block required");
    if (!(sigsq_beta > 0.0) || !(A_eps > 0.0)) throw std::invalid_argument("BlockSpec: hyperparameters must be positive");
    for (double a : A_u)
      if (!(a > 0.0)) throw std::invalid_argument("BlockSpec: hyperparameters must be positive");
  }
};

/// blockdiag{sigsq_beta^-1 I_p, mu_recip_sigsq_u[0] I_K1, ...} as a diagonal vector.
inline Vec block_prior_precision(const BlockSpec& spec, const std::vector<double>& mu_recip_sigsq_u) {
  Vec d(spec.total_dim());
  d.head(spec.p).setConstant(1.0 / spec.sigsq_beta);
  for (int l = 0; l < spec.num_blocks(); ++l)
    d.segment(spec.block_offset(l), spec.block_sizes[static_cast<std::size_t>(l)])
        .setConstant(mu_recip_sigsq_u[static_cast<std::size_t>(l)]);
  return d;
}

/// Per-block Half-Cauchy variance sweep shared by the Gaussian and logistic
/// mixed models: mu_q(1/a_ul), then mu_q(1/sigma_ul^2) with numerator K_l + 1.
inline void sweep_block_variances(const BlockSpec& spec, const Vec& mu, const Mat& sigma,
                                  std::vector<double>& mu_recip_sigsq_u, std::vector<double>& mu_recip_a_u) {
  for (int l = 0; l < spec.num_blocks(); ++l) {
    const auto li = static_cast<std::size_t>(l);
    const int off = spec.block_offset(l);
    const int k = spec.block_sizes[li];
    const double a_u = spec.A_u[li];
    mu_recip_a_u[li] = 1.0 / (mu_recip_sigsq_u[li] + 1.0 / (a_u * a_u));
    const double denom =
        2.0 * mu_recip_a_u[li] + mu.segment(off, k).squaredNorm() + sigma.block(off, off, k, k).trace();
    mu_recip_sigsq_u[li] = (static_cast<double>(k) + 1.0) / denom;
  }
}

struct LMMState {
  Vec mu_bu;
  Mat Sigma_bu;
  double mu_recip_sigsq_eps = 1.0;
  double mu_recip_a_eps = 1.0;
  std::vector<double> mu_recip_sigsq_u;
  std::vector<double> mu_recip_a_u;

  /// All reciprocal moments set to one, zero mean, identity covariance.
  static LMMState initial(const BlockSpec& spec) {
    const auto dim = spec.total_dim();
    const auto r = static_cast<std::size_t>(spec.num_blocks());
    return {Vec::Zero(dim), Mat::Identity(dim, dim), 1.0, 1.0, std::vector<double>(r, 1.0), std::vector<double>(r, 1.0)};
  }

  Vec block_mean(const BlockSpec& spec, int l) const {
    return mu_bu.segment(spec.block_offset(l), spec.block_sizes[static_cast<std::size_t>(l)]);
  }
  Mat block_cov(const BlockSpec& spec, int l) const {
    const int off = spec.block_offset(l), k = spec.block_sizes[static_cast<std::size_t>(l)];
    return Sigma_bu.block(off, off, k, k);
  }
};

inline LMMState cycle_lmm(const LMMState& state, const StreamingMoments& stats, const BlockSpec& spec) {
  detail::check_dim(stats.dim(), spec.total_dim(), "cycle_lmm");
  LMMState next = state;
  Mat precision = state.mu_recip_sigsq_eps * stats.ctc;
  precision.diagonal() += block_prior_precision(spec, state.mu_recip_sigsq_u);
  next.Sigma_bu = spd_inverse(precision, "cycle_lmm");
  next.mu_bu = state.mu_recip_sigsq_eps * (next.Sigma_bu * stats.cty);
  next.mu_recip_a_eps = 1.0 / (state.mu_recip_sigsq_eps + 1.0 / (spec.A_eps * spec.A_eps));
  const double trace_term = stats.ctc.cwiseProduct(next.Sigma_bu).sum() + next.mu_bu.dot(stats.ctc * next.mu_bu);
  const double denom = 2.0 * next.mu_recip_a_eps + stats.yty - 2.0 * next.mu_bu.dot(stats.cty) + trace_term;
  next.mu_recip_sigsq_eps = (static_cast<double>(stats.n) + 1.0) / denom;
  sweep_block_variances(spec, next.mu_bu, next.Sigma_bu, next.mu_recip_sigsq_u, next.mu_recip_a_u);
  return next;
}

/// Largest block-relative change across every q-density parameter.
inline double max_relative_change(const LMMState& a, const LMMState& b) {
  double m = std::max(block_relative_change(a.mu_bu, b.mu_bu), block_relative_change(a.Sigma_bu, b.Sigma_bu));
  m = std::max({m, scalar_relative_change(a.mu_recip_sigsq_eps, b.mu_recip_sigsq_eps),
                scalar_relative_change(a.mu_recip_a_eps, b.mu_recip_a_eps)});
  for (std::size_t l = 0; l < a.mu_recip_sigsq_u.size(); ++l) {
    m = std::max({m, scalar_relative_change(a.mu_recip_sigsq_u[l], b.mu_recip_sigsq_u[l]),
                  scalar_relative_change(a.mu_recip_a_u[l], b.mu_recip_a_u[l])});
  }
  return m;
}

inline FitResult<LMMState> fit_batch_lmm(const StreamingMoments& stats, const BlockSpec& spec, const FitOptions& opts = {},
                                         const LMMState* start = nullptr) {
  spec.validate();
  if (!(opts.tol > 0.0)) throw std::invalid_argument("fit_batch_lmm: tol must be positive");
  FitResult<LMMState> fit{start ? *start : LMMState::initial(spec)};
  for (int it = 1; it <= opts.max_iter; ++it) {
    LMMState next = cycle_lmm(fit.state, stats, spec);
    fit.last_change = max_relative_change(fit.state, next);
    fit.state = std::move(next);
    fit.iterations = it;
    if (it > 1 && fit.last_change < opts.tol) {
      fit.converged = true;
      break;
    }
  }
  return fit;
}

inline FitResult<LMMState> fit_batch_lmm(const Vec& y, const Mat& c, const BlockSpec& spec, const FitOptions& opts = {}) {
  return fit_batch_lmm(from_batch(y, c), spec, opts);
}

inline void step_online_lmm(LMMState& state, StreamingMoments& stats, double y_new, const Vec& c_new,
                            const BlockSpec& spec) {
  update_gaussian(stats, y_new, c_new);
  state = cycle_lmm(state, stats, spec);
}

inline InverseGammaParams sigma2_eps_posterior(const LMMState& state, const StreamingMoments& stats) {
  return inv_gamma_from_recip(0.5 * (static_cast<double>(stats.n) + 1.0), state.mu_recip_sigsq_eps);
}

/// q*(sigma_ul^2) = Inverse-Gamma((K_l+1)/2, rate) with the rate rebuilt from the reciprocal moment.
inline InverseGammaParams sigma2_u_posterior(double mu_recip_sigsq_u, int block_size) {
  return inv_gamma_from_recip(0.5 * (static_cast<double>(block_size) + 1.0), mu_recip_sigsq_u);
}

/// [1, x, e] with e the m-length indicator of `group` (1-based).
inline Vec build_row_random_intercept(double x_new, int group, int m) {
  if (m < 1 || group < 1 || group > m)
    throw std::out_of_range("build_row_random_intercept: group " + std::to_string(group) + " outside 1.." +
                            std::to_string(m) + " (group set is frozen at warm-up)");
  Vec c = Vec::Zero(2 + m);
  c(0) = 1.0;
  c(1) = x_new;
  c(1 + group) = 1.0;
  return c;
}

/// [1, s, t, z^s(s), z^t(t)], matching block_sizes = {K_s, K_t}.
inline Vec build_row_additive(double s_new, double t_new, const SplineBasis& basis_s, const SplineBasis& basis_t) {
  const auto ks = static_cast<Eigen::Index>(basis_s.size());
  const auto kt = static_cast<Eigen::Index>(basis_t.size());
  Vec c(3 + ks + kt);
  c(0) = 1.0;
  c(1) = s_new;
  c(2) = t_new;
  basis_s.eval_into(s_new, c.segment(3, ks));
  basis_t.eval_into(t_new, c.segment(3 + ks, kt));
  return c;
}

}  // namespace streamvb
