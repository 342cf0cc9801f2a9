#pragma once

// Batch and online mean field variational Bayes for Gaussian linear regression
//   y | beta, sigma^2 ~ N(X beta, sigma^2 I),  beta ~ N(0, sigsq_beta I),
//   sigma ~ Half-Cauchy(A)  (via sigma^2 | a ~ IG(1/2, 1/a), a ~ IG(1/2, 1/A^2)).

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "fit_result.hpp"
#include "linalg.hpp"
#include "summaries.hpp"
#include "suffstats.hpp"

namespace streamvb {

struct LinRegHyper {
  double sigsq_beta = 1e10;
  double A = 1e5;

  void validate() const {
    if (!(sigsq_beta > 0.0) || !(A > 0.0)) throw std::invalid_argument("LinRegHyper: sigsq_beta and A must be positive");
  }
};

struct LinRegState {
  Vec mu_beta;
  Mat Sigma_beta;
  double mu_recip_sigsq = 1.0;
  double mu_recip_a = 1.0;

  /// Starting point before any sweep: zero mean, identity covariance.
  static LinRegState initial(Eigen::Index p, double mu_recip_sigsq = 1.0) {
    if (!(mu_recip_sigsq > 0.0)) throw std::invalid_argument("LinRegState: initial mu_recip_sigsq must be positive");
    return {Vec::Zero(p), Mat::Identity(p, p), mu_recip_sigsq, 1.0};
  }

  Eigen::Index dim() const { return mu_beta.size(); }
};

/// One coordinate-ascent sweep: Sigma, mu, mu_q(1/a), mu_q(1/sigma^2).
inline LinRegState cycle(const LinRegState& state, const StreamingMoments& stats, const LinRegHyper& hyper) {
  const auto p = state.dim();
  detail::check_dim(stats.dim(), p, "linreg cycle");
  LinRegState next;
  Mat precision = state.mu_recip_sigsq * stats.ctc;
  precision.diagonal().array() += 1.0 / hyper.sigsq_beta;
  next.Sigma_beta = spd_inverse(precision, "linreg cycle");
  next.mu_beta = state.mu_recip_sigsq * (next.Sigma_beta * stats.cty);
  next.mu_recip_a = 1.0 / (state.mu_recip_sigsq + 1.0 / (hyper.A * hyper.A));
  const double trace_term = (stats.ctc.cwiseProduct(next.Sigma_beta)).sum() + next.mu_beta.dot(stats.ctc * next.mu_beta);
  const double denom = 2.0 * next.mu_recip_a + stats.yty - 2.0 * next.mu_beta.dot(stats.cty) + trace_term;
  next.mu_recip_sigsq = (static_cast<double>(stats.n) + 1.0) / denom;
  return next;
}

/// Marginal log-likelihood lower bound evaluated at `state`.
inline double elbo(const LinRegState& state, const StreamingMoments& stats, const LinRegHyper& hyper) {
  const double p = static_cast<double>(state.dim());
  const double n = static_cast<double>(stats.n);
  const double pi = std::numbers::pi;
  const double mu_s = state.mu_recip_sigsq;
  const double log_det = state.dim() > 0 ? spd_log_det(state.Sigma_beta) : 0.0;
  return 0.5 * p - 0.5 * n * std::log(2.0 * pi) - 2.0 * std::log(pi) + std::lgamma(0.5 * (n + 1.0)) -
         0.5 * p * std::log(hyper.sigsq_beta) - std::log(hyper.A) -
         (state.mu_beta.squaredNorm() + state.Sigma_beta.trace()) / (2.0 * hyper.sigsq_beta) + 0.5 * log_det -
         0.5 * (n + 1.0) * std::log((n + 1.0) / (2.0 * mu_s)) - std::log(mu_s + 1.0 / (hyper.A * hyper.A)) +
         mu_s * state.mu_recip_a;
}

struct LinRegFit : FitResult<LinRegState> {
  double final_elbo = 0.0;
  std::vector<double> elbo_trace;
};

inline double max_relative_change(const LinRegState& a, const LinRegState& b) {
  return std::max({block_relative_change(a.mu_beta, b.mu_beta), block_relative_change(a.Sigma_beta, b.Sigma_beta),
                   scalar_relative_change(a.mu_recip_sigsq, b.mu_recip_sigsq),
                   scalar_relative_change(a.mu_recip_a, b.mu_recip_a)});
}

/// Iterates `cycle` on fixed statistics until both the relative ELBO increase
/// and the largest relative parameter change drop below opts.tol.
inline LinRegFit fit_batch(const StreamingMoments& stats, const LinRegHyper& hyper, const FitOptions& opts = {},
                           double init_recip_sigsq = 1.0) {
  hyper.validate();
  if (!(opts.tol > 0.0)) throw std::invalid_argument("fit_batch: tol must be positive");
  LinRegFit fit;
  fit.state = LinRegState::initial(stats.dim(), init_recip_sigsq);
  double previous = -std::numeric_limits<double>::infinity();
  for (int it = 1; it <= opts.max_iter; ++it) {
    LinRegState next = cycle(fit.state, stats, hyper);
    const double moved = max_relative_change(fit.state, next);
    fit.state = std::move(next);
    const double current = elbo(fit.state, stats, hyper);
    fit.elbo_trace.push_back(current);
    fit.iterations = it;
    fit.final_elbo = current;
    if (std::isfinite(previous)) {
      fit.last_change = moved;
      if (current - previous < opts.tol * std::abs(current) && moved < opts.tol) {
        fit.converged = true;
        break;
      }
    }
    previous = current;
  }
  return fit;
}

inline LinRegFit fit_batch(const Vec& y, const Mat& x, const LinRegHyper& hyper, const FitOptions& opts = {},
                           double init_recip_sigsq = 1.0) {
  return fit_batch(from_batch(y, x), hyper, opts, init_recip_sigsq);
}

/// One arrival: accumulate the new row, then exactly one sweep.
inline void step_online(LinRegState& state, StreamingMoments& stats, double y_new, const Vec& x_new,
                        const LinRegHyper& hyper) {
  update_gaussian(stats, y_new, x_new);
  state = cycle(state, stats, hyper);
}

inline std::pair<LinRegState, StreamingMoments> stepped_online(LinRegState state, StreamingMoments stats, double y_new,
                                                               const Vec& x_new, const LinRegHyper& hyper) {
  step_online(state, stats, y_new, x_new, hyper);
  return {std::move(state), std::move(stats)};
}

/// q*(sigma^2) = Inverse-Gamma((n+1)/2, (n+1) / (2 mu_q(1/sigma^2))).
inline InverseGammaParams sigma2_posterior(const LinRegState& state, const StreamingMoments& stats) {
  return inv_gamma_from_recip(0.5 * (static_cast<double>(stats.n) + 1.0), state.mu_recip_sigsq);
}

struct LinRegSummary {
  std::vector<ParamSummary> coefficients;
  ParamSummary sigma2;
  ParamSummary log_sigma2;
  InverseGammaParams sigma2_q{1.0, 1.0};
};

inline LinRegSummary posterior_summary(const LinRegState& state, const StreamingMoments& stats,
                                       const std::vector<std::string>& labels = {}) {
  LinRegSummary out;
  for (Eigen::Index j = 0; j < state.dim(); ++j) {
    std::string label = j < static_cast<Eigen::Index>(labels.size()) ? labels[j] : "beta" + std::to_string(j);
    out.coefficients.push_back(normal_summary(std::move(label), state.mu_beta(j), state.Sigma_beta(j, j)));
  }
  out.sigma2_q = sigma2_posterior(state, stats);
  out.sigma2 = inv_gamma_summary("sigma2", out.sigma2_q);
  out.log_sigma2 = log_inv_gamma_summary("log_sigma2", out.sigma2_q);
  return out;
}

/// Affine maps of predictor columns (and optionally the response) onto the
/// unit interval, frozen from warm-up data. Column `intercept` is left as is.
class UnitIntervalScaling {
 public:
  UnitIntervalScaling() = default;

  /// Fits min/max maps to the columns of `x` (and to `y` if `scale_response`).
  static UnitIntervalScaling fit(const Vec& y, const Mat& x, int intercept_column, bool scale_response = true) {
    UnitIntervalScaling s;
    s.intercept_ = intercept_column;
    s.offset_ = Vec::Zero(x.cols());
    s.scale_ = Vec::Ones(x.cols());
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
      if (j == intercept_column || x.rows() == 0) continue;
      const double lo = x.col(j).minCoeff(), hi = x.col(j).maxCoeff();
      s.offset_(j) = lo;
      s.scale_(j) = hi > lo ? hi - lo : 1.0;
    }
    if (scale_response && y.size() > 0) {
      const double lo = y.minCoeff(), hi = y.maxCoeff();
      s.y_offset_ = lo;
      s.y_scale_ = hi > lo ? hi - lo : 1.0;
    }
    return s;
  }

  static UnitIntervalScaling from_maps(Vec offset, Vec scale, double y_offset, double y_scale, int intercept) {
    UnitIntervalScaling s;
    s.offset_ = std::move(offset);
    s.scale_ = std::move(scale);
    s.y_offset_ = y_offset;
    s.y_scale_ = y_scale;
    s.intercept_ = intercept;
    return s;
  }

  Vec transform_row(const Vec& x) const { return ((x - offset_).array() / scale_.array()).matrix(); }
  double transform_response(double y) const { return (y - y_offset_) / y_scale_; }

  /// Maps N(mu, Sigma) of the scaled-model coefficients onto the original units.
  std::pair<Vec, Mat> back_transform(const Vec& mu, const Mat& sigma) const {
    const auto p = mu.size();
    Mat t = Mat::Zero(p, p);
    Vec shift = Vec::Zero(p);
    for (Eigen::Index j = 0; j < p; ++j) {
      if (j == intercept_) continue;
      t(j, j) = y_scale_ / scale_(j);
    }
    if (intercept_ >= 0) {
      t(intercept_, intercept_) = y_scale_;
      for (Eigen::Index j = 0; j < p; ++j)
        if (j != intercept_) t(intercept_, j) = -y_scale_ * offset_(j) / scale_(j);
      shift(intercept_) = y_offset_;
    }
    return {t * mu + shift, t * sigma * t.transpose()};
  }

  /// Variance parameters scale with the squared response factor.
  double variance_factor() const { return y_scale_ * y_scale_; }

  const Vec& offset() const { return offset_; }
  const Vec& scale() const { return scale_; }
  double y_offset() const { return y_offset_; }
  double y_scale() const { return y_scale_; }
  int intercept() const { return intercept_; }

 private:
  Vec offset_;
  Vec scale_;
  double y_offset_ = 0.0;
  double y_scale_ = 1.0;
  int intercept_ = -1;
};

}  // namespace streamvb
