#pragma once

// Laplace-Zero sparse signal regression
//   y ~ N(1 beta + Z (gamma . v), sigma_eps^2 I),  v ~ N(0, sigma_u^2 diag(b)^-1),
//   b_k ~ IG(1, 1/2),  gamma_k | rho ~ Bernoulli(rho),  rho ~ Beta(A_rho, B_rho),
// with Half-Cauchy priors on sigma_u and sigma_eps.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <utility>

#include "fit_result.hpp"
#include "linalg.hpp"
#include "special_functions.hpp"
#include "summaries.hpp"
#include "suffstats.hpp"

namespace streamvb {

struct SparseHyper {
  double sigsq_beta = 1e10;
  double A_u = 1e5;
  double A_eps = 1e5;
  double A_rho = 1.0;
  double B_rho = 1.0;

  void validate() const {
    if (!(sigsq_beta > 0.0) || !(A_u > 0.0) || !(A_eps > 0.0) || !(A_rho > 0.0) || !(B_rho > 0.0))
      throw std::invalid_argument("SparseHyper: all hyperparameters must be positive");
  }
};

inline constexpr double kGammaClamp = 1e-12;

struct SparseState {
  Vec mu_bv;
  Mat Sigma_bv;
  Vec mu_b;
  Vec mu_gamma;
  Vec mu_w;
  Mat Omega_w;
  double mu_gamma_sum = 0.0;
  double mu_recip_sigsq_u = 1.0;
  double mu_recip_sigsq_eps = 1.0;
  double mu_recip_a_u = 1.0;
  double mu_recip_a_eps = 1.0;
  // Rates of q(sigma_u^2) and q(sigma_eps^2) from the latest sweep.
  double B_sigsq_u = 1.0;
  double B_sigsq_eps = 1.0;
  // Number of inclusion probabilities clamped away from 0 or 1 so far.
  std::int64_t gamma_clamps = 0;

  Eigen::Index num_basis() const { return mu_gamma.size(); }

  /// mu_q(gamma) = 0.5, mu_q(b) = 1, reciprocal moments 1, mu_q(beta,v) = 0.
  static SparseState initial(Eigen::Index k) {
    SparseState s;
    s.mu_bv = Vec::Zero(k + 1);
    s.Sigma_bv = Mat::Identity(k + 1, k + 1);
    s.mu_b = Vec::Ones(k);
    s.set_inclusion(Vec::Constant(k, 0.5));
    return s;
  }

  /// Sets mu_q(gamma) and rebuilds mu_q(w_gamma), mu_q(gamma_.) and Omega_q(w_gamma).
  void set_inclusion(const Vec& gamma) {
    mu_gamma = gamma;
    const auto k = gamma.size();
    mu_w.resize(k + 1);
    mu_w(0) = 1.0;
    mu_w.tail(k) = gamma;
    mu_gamma_sum = gamma.sum();
    Omega_w = omega_from_w(mu_w);
  }

  static Mat omega_from_w(const Vec& w) {
    Mat omega = w * w.transpose();
    omega.diagonal().array() += w.array() * (1.0 - w.array());
    return omega;
  }
};

inline SparseState cycle_sparse(const SparseState& state, const SparseMoments& stats, const SparseHyper& hyper) {
  const auto k = state.num_basis();
  detail::check_dim(stats.num_basis(), k, "cycle_sparse");
  const double kd = static_cast<double>(k);
  SparseState next = state;

  Mat precision = state.mu_recip_sigsq_eps * stats.ctc.cwiseProduct(state.Omega_w);
  precision(0, 0) += 1.0 / hyper.sigsq_beta;
  precision.diagonal().tail(k) += state.mu_recip_sigsq_u * state.mu_b;
  next.Sigma_bv = spd_inverse(precision, "cycle_sparse");
  next.mu_bv = state.mu_recip_sigsq_eps * (next.Sigma_bv * state.mu_w.cwiseProduct(stats.cty));

  const Vec mu_v = next.mu_bv.tail(k);
  const Mat sigma_v = next.Sigma_bv.bottomRightCorner(k, k);
  const Vec var_v = sigma_v.diagonal();
  const Vec second_v = var_v + mu_v.cwiseAbs2();
  const double mu_beta = next.mu_bv(0);

  next.mu_b = (state.mu_recip_sigsq_u * second_v).cwiseInverse().cwiseSqrt();

  const Vec& g = state.mu_gamma;
  const Vec diag_ztz = stats.ztz.diagonal();
  const Vec cross = next.Sigma_bv.row(0).tail(k).transpose() + mu_beta * mu_v;
  // diagonal{Z'Z diag(g) Sigma_v}_k = sum_j (Z'Z)_kj g_j (Sigma_v)_jk
  const Vec diag_ztz_g_sigma = (stats.ztz * g.asDiagonal()).cwiseProduct(sigma_v).rowwise().sum();
  const Vec ztz_gmu = stats.ztz * g.cwiseProduct(mu_v);
  const Vec bracket = diag_ztz.cwiseProduct(second_v) - 2.0 * stats.zty.cwiseProduct(mu_v) +
                      2.0 * stats.zt1.cwiseProduct(cross) + 2.0 * diag_ztz_g_sigma -
                      2.0 * diag_ztz.cwiseProduct(g).cwiseProduct(var_v) +
                      2.0 * mu_v.cwiseProduct(ztz_gmu - diag_ztz.cwiseProduct(g).cwiseProduct(mu_v));
  const double prior_logit = digamma(hyper.A_rho + state.mu_gamma_sum) - digamma(hyper.B_rho + kd - state.mu_gamma_sum);
  const Vec eta = (-0.5 * state.mu_recip_sigsq_eps * bracket).array() + prior_logit;

  Vec gamma(k);
  for (Eigen::Index j = 0; j < k; ++j) {
    double v = logistic(eta(j));
    if (v < kGammaClamp || v > 1.0 - kGammaClamp) {
      v = std::clamp(v, kGammaClamp, 1.0 - kGammaClamp);
      ++next.gamma_clamps;
    }
    gamma(j) = v;
  }
  next.set_inclusion(gamma);

  next.mu_recip_a_eps = 1.0 / (state.mu_recip_sigsq_eps + 1.0 / (hyper.A_eps * hyper.A_eps));
  next.mu_recip_a_u = 1.0 / (state.mu_recip_sigsq_u + 1.0 / (hyper.A_u * hyper.A_u));

  const Mat second_bv = next.Sigma_bv + next.mu_bv * next.mu_bv.transpose();
  next.B_sigsq_eps = next.mu_recip_a_eps + 0.5 * stats.yty - next.mu_w.cwiseProduct(next.mu_bv).dot(stats.cty) +
                     0.5 * stats.ctc.cwiseProduct(next.Omega_w).cwiseProduct(second_bv).sum();
  next.B_sigsq_u = next.mu_recip_a_u + 0.5 * next.mu_b.dot(second_v);
  next.mu_recip_sigsq_u = 0.5 * (kd + 1.0) / next.B_sigsq_u;
  next.mu_recip_sigsq_eps = 0.5 * (static_cast<double>(stats.n) + 1.0) / next.B_sigsq_eps;
  return next;
}

inline double max_relative_change(const SparseState& a, const SparseState& b) {
  return std::max({block_relative_change(a.mu_bv, b.mu_bv), block_relative_change(a.Sigma_bv, b.Sigma_bv),
                   block_relative_change(a.mu_b, b.mu_b), block_relative_change(a.mu_gamma, b.mu_gamma),
                   scalar_relative_change(a.mu_recip_sigsq_u, b.mu_recip_sigsq_u),
                   scalar_relative_change(a.mu_recip_sigsq_eps, b.mu_recip_sigsq_eps),
                   scalar_relative_change(a.mu_recip_a_u, b.mu_recip_a_u),
                   scalar_relative_change(a.mu_recip_a_eps, b.mu_recip_a_eps)});
}

inline FitResult<SparseState> fit_batch_sparse(const SparseMoments& stats, const SparseHyper& hyper,
                                               const FitOptions& opts = {}, const SparseState* start = nullptr) {
  hyper.validate();
  if (!(opts.tol > 0.0)) throw std::invalid_argument("fit_batch_sparse: tol must be positive");
  FitResult<SparseState> fit{start ? *start : SparseState::initial(stats.num_basis())};
  for (int it = 1; it <= opts.max_iter; ++it) {
    SparseState next = cycle_sparse(fit.state, stats, hyper);
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

inline FitResult<SparseState> fit_batch_sparse(const Vec& y, const Mat& z, const SparseHyper& hyper,
                                               const FitOptions& opts = {}) {
  return fit_batch_sparse(sparse_from_batch(y, z), hyper, opts);
}

inline void step_online_sparse(SparseState& state, SparseMoments& stats, double y_new, const Vec& z_new,
                               const SparseHyper& hyper) {
  update_sparse(stats, y_new, z_new);
  state = cycle_sparse(state, stats, hyper);
}

inline InverseGammaParams sparse_sigma2_eps_posterior(const SparseState& s, const SparseMoments& stats) {
  return InverseGammaParams(0.5 * (static_cast<double>(stats.n) + 1.0), s.B_sigsq_eps);
}

inline InverseGammaParams sparse_sigma2_u_posterior(const SparseState& s) {
  return InverseGammaParams(0.5 * (static_cast<double>(s.num_basis()) + 1.0), s.B_sigsq_u);
}

}  // namespace streamvb
