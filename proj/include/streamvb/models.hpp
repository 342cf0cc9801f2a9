#pragma once

// Uniform adapters over the four solvers so the warm-up protocol and the
// CLI can drive any of them: batch-fit a prefix, seed an online fitter from
// it, step one observation at a time, and report labelled summaries.

#include <concepts>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "linreg.hpp"
#include "lmm.hpp"
#include "logistic.hpp"
#include "sparse.hpp"
#include "summaries.hpp"

namespace streamvb {

/// One response with its design row. For the sparse model the row is z
/// (the intercept column is added internally).
struct Observation {
  double y = 0.0;
  Vec c;
};

/// A labelled linear functional c' theta of the coefficient vector.
struct Probe {
  std::string label;
  Vec c;
};

template <typename M>
concept OnlineModel = requires(const M& m, typename M::Fitted& f, std::span<const Observation> rows,
                               const Observation& obs) {
  { m.fit_batch(rows) } -> std::same_as<typename M::Fitted>;
  { m.step(f, obs) };
  { m.summarize(std::as_const(f)) } -> std::same_as<std::vector<ParamSummary>>;
  { std::as_const(f).converged } -> std::convertible_to<bool>;
};

namespace detail {
inline std::pair<Vec, Mat> stack_rows(std::span<const Observation> rows, Eigen::Index dim) {
  Vec y(static_cast<Eigen::Index>(rows.size()));
  Mat c(static_cast<Eigen::Index>(rows.size()), dim);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto ii = static_cast<Eigen::Index>(i);
    check_dim(rows[i].c.size(), dim, "design row");
    y(ii) = rows[i].y;
    c.row(ii) = rows[i].c.transpose();
  }
  return {std::move(y), std::move(c)};
}

inline void append_probe_summaries(std::vector<ParamSummary>& out, const std::vector<Probe>& probes, const Vec& mu,
                                   const Mat& sigma, int p) {
  if (probes.empty()) {
    for (int j = 0; j < p; ++j) out.push_back(normal_summary("beta" + std::to_string(j), mu(j), sigma(j, j)));
  } else {
    for (const auto& pr : probes) out.push_back(linear_functional_summary(pr.label, pr.c, mu, sigma));
  }
}
}  // namespace detail

class LinRegModel {
 public:
  struct Fitted {
    LinRegState state;
    StreamingMoments stats;
    bool converged = true;
    int iterations = 0;
  };

  LinRegModel(Eigen::Index p, LinRegHyper hyper = {}, FitOptions opts = {}, std::vector<std::string> labels = {})
      : p_(p), hyper_(hyper), opts_(opts), labels_(std::move(labels)) {}

  Fitted fit_batch(std::span<const Observation> rows) const {
    auto [y, c] = detail::stack_rows(rows, p_);
    auto fit = streamvb::fit_batch(y, c, hyper_, opts_);
    return {std::move(fit.state), from_batch(y, c), fit.converged, fit.iterations};
  }

  void step(Fitted& f, const Observation& obs) const { step_online(f.state, f.stats, obs.y, obs.c, hyper_); }

  std::vector<ParamSummary> summarize(const Fitted& f) const {
    std::vector<ParamSummary> out;
    for (Eigen::Index j = 0; j < p_; ++j) {
      std::string label = j < static_cast<Eigen::Index>(labels_.size()) ? labels_[j] : "beta" + std::to_string(j);
      out.push_back(normal_summary(std::move(label), f.state.mu_beta(j), f.state.Sigma_beta(j, j)));
    }
    out.push_back(log_inv_gamma_summary("log_sigma2", sigma2_posterior(f.state, f.stats)));
    return out;
  }

  const LinRegHyper& hyper() const { return hyper_; }
  Eigen::Index dim() const { return p_; }

 private:
  Eigen::Index p_;
  LinRegHyper hyper_;
  FitOptions opts_;
  std::vector<std::string> labels_;
};

class LmmModel {
 public:
  struct Fitted {
    LMMState state;
    StreamingMoments stats;
    bool converged = true;
    int iterations = 0;
  };

  explicit LmmModel(BlockSpec spec, FitOptions opts = {}, std::vector<Probe> probes = {},
                    std::vector<std::string> block_labels = {})
      : spec_(std::move(spec)), opts_(opts), probes_(std::move(probes)), block_labels_(std::move(block_labels)) {}

  Fitted fit_batch(std::span<const Observation> rows) const {
    auto [y, c] = detail::stack_rows(rows, spec_.total_dim());
    auto stats = from_batch(y, c);
    auto fit = fit_batch_lmm(stats, spec_, opts_);
    return {std::move(fit.state), std::move(stats), fit.converged, fit.iterations};
  }

  void step(Fitted& f, const Observation& obs) const { step_online_lmm(f.state, f.stats, obs.y, obs.c, spec_); }

  std::vector<ParamSummary> summarize(const Fitted& f) const {
    std::vector<ParamSummary> out;
    detail::append_probe_summaries(out, probes_, f.state.mu_bu, f.state.Sigma_bu, spec_.p);
    out.push_back(log_inv_gamma_summary("log_sigma2_eps", sigma2_eps_posterior(f.state, f.stats)));
    for (int l = 0; l < spec_.num_blocks(); ++l) {
      const auto li = static_cast<std::size_t>(l);
      out.push_back(log_inv_gamma_summary("log_sigma2_u[" + block_label(l) + "]",
                                          sigma2_u_posterior(f.state.mu_recip_sigsq_u[li], spec_.block_sizes[li])));
    }
    return out;
  }

  const BlockSpec& spec() const { return spec_; }

 private:
  std::string block_label(int l) const {
    return l < static_cast<int>(block_labels_.size()) ? block_labels_[static_cast<std::size_t>(l)] : std::to_string(l + 1);
  }

  BlockSpec spec_;
  FitOptions opts_;
  std::vector<Probe> probes_;
  std::vector<std::string> block_labels_;
};

class LogisticModel {
 public:
  struct Fitted {
    LogisticState state;
    LogisticMoments stats;
    bool converged = true;
    int iterations = 0;
  };

  explicit LogisticModel(BlockSpec spec, FitOptions opts = {}, std::vector<Probe> probes = {},
                         std::vector<std::string> block_labels = {})
      : spec_(std::move(spec)), opts_(opts), probes_(std::move(probes)), block_labels_(std::move(block_labels)) {}

  Fitted fit_batch(std::span<const Observation> rows) const {
    auto [y, c] = detail::stack_rows(rows, spec_.total_dim());
    auto fit = fit_batch_logistic(y, c, spec_, opts_);
    return {std::move(fit.state), std::move(fit.stats), fit.converged, fit.iterations};
  }

  void step(Fitted& f, const Observation& obs) const {
    if (obs.y != 0.0 && obs.y != 1.0) throw std::invalid_argument("logistic model: response must be 0 or 1");
    step_online_logistic(f.state, f.stats, static_cast<int>(obs.y), obs.c, spec_);
  }

  std::vector<ParamSummary> summarize(const Fitted& f) const {
    std::vector<ParamSummary> out;
    detail::append_probe_summaries(out, probes_, f.state.mu_bu, f.state.Sigma_bu, spec_.p);
    for (int l = 0; l < spec_.num_blocks(); ++l) {
      const auto li = static_cast<std::size_t>(l);
      const std::string label =
          l < static_cast<int>(block_labels_.size()) ? block_labels_[li] : std::to_string(l + 1);
      out.push_back(log_inv_gamma_summary("log_sigma2_u[" + label + "]",
                                          sigma2_u_posterior(f.state.mu_recip_sigsq_u[li], spec_.block_sizes[li])));
    }
    return out;
  }

  const BlockSpec& spec() const { return spec_; }

 private:
  BlockSpec spec_;
  FitOptions opts_;
  std::vector<Probe> probes_;
  std::vector<std::string> block_labels_;
};

class SparseModel {
 public:
  struct Fitted {
    SparseState state;
    SparseMoments stats;
    bool converged = true;
    int iterations = 0;
  };

  SparseModel(Eigen::Index k, SparseHyper hyper = {}, FitOptions opts = {}) : k_(k), hyper_(hyper), opts_(opts) {}

  Fitted fit_batch(std::span<const Observation> rows) const {
    auto [y, z] = detail::stack_rows(rows, k_);
    auto stats = sparse_from_batch(y, z);
    auto fit = fit_batch_sparse(stats, hyper_, opts_);
    return {std::move(fit.state), std::move(stats), fit.converged, fit.iterations};
  }

  void step(Fitted& f, const Observation& obs) const { step_online_sparse(f.state, f.stats, obs.y, obs.c, hyper_); }

  std::vector<ParamSummary> summarize(const Fitted& f) const {
    std::vector<ParamSummary> out;
    out.push_back(normal_summary("intercept", f.state.mu_bv(0), f.state.Sigma_bv(0, 0)));
    for (Eigen::Index k = 0; k < k_; ++k)
      out.push_back(normal_summary("v" + std::to_string(k + 1), f.state.mu_bv(k + 1), f.state.Sigma_bv(k + 1, k + 1)));
    out.push_back(log_inv_gamma_summary("log_sigma2_eps", sparse_sigma2_eps_posterior(f.state, f.stats)));
    return out;
  }

  const SparseHyper& hyper() const { return hyper_; }

 private:
  Eigen::Index k_;
  SparseHyper hyper_;
  FitOptions opts_;
};

static_assert(OnlineModel<LinRegModel>);
static_assert(OnlineModel<LmmModel>);
static_assert(OnlineModel<LogisticModel>);
static_assert(OnlineModel<SparseModel>);

}  // namespace streamvb
