#include <gtest/gtest.h>

#include <random>

#include <streamvb/simdata.hpp>
#include <streamvb/sparse.hpp>

#include "oracle.hpp"

using namespace streamvb;

namespace {

struct OracleSparse {
  std::vector<double> mu;
  oracle::Matrix sigma;
  std::vector<double> b, g;
  double re = 1.0, ru = 1.0, ae = 1.0, au = 1.0;
};

// Element-wise transcription of one Laplace-Zero sweep.
OracleSparse oracle_sweep(const OracleSparse& s, const SparseMoments& st, const SparseHyper& h) {
  const std::size_t K = s.g.size(), d = K + 1;
  auto C = [&](std::size_t i, std::size_t j) { return st.ctc(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)); };
  auto ZZ = [&](std::size_t i, std::size_t j) { return st.ztz(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)); };
  std::vector<double> w{1.0};
  w.insert(w.end(), s.g.begin(), s.g.end());
  auto omega = [&](const std::vector<double>& ww, std::size_t i, std::size_t j) {
    return i == j ? ww[i] : ww[i] * ww[j];
  };
  oracle::Matrix prec = oracle::zeros(d, d);
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < d; ++j) prec[i][j] = s.re * C(i, j) * omega(w, i, j);
  prec[0][0] += 1.0 / h.sigsq_beta;
  for (std::size_t k = 0; k < K; ++k) prec[k + 1][k + 1] += s.ru * s.b[k];
  OracleSparse o = s;
  o.sigma = oracle::inverse(prec);
  std::vector<double> wcy(d);
  for (std::size_t i = 0; i < d; ++i) wcy[i] = w[i] * st.cty(static_cast<Eigen::Index>(i));
  o.mu = oracle::matvec(o.sigma, wcy);
  for (auto& m : o.mu) m *= s.re;

  std::vector<double> v(K), sv(K);
  for (std::size_t k = 0; k < K; ++k) {
    v[k] = o.mu[k + 1];
    sv[k] = o.sigma[k + 1][k + 1];
    o.b[k] = 1.0 / std::sqrt(s.ru * (sv[k] + v[k] * v[k]));
  }
  double gsum = 0.0;
  for (double x : s.g) gsum += x;
  const double prior = static_cast<double>(oracle::digamma_ld(h.A_rho + gsum) - oracle::digamma_ld(h.B_rho + K - gsum));
  for (std::size_t k = 0; k < K; ++k) {
    double t = ZZ(k, k) * (sv[k] + v[k] * v[k]) - 2.0 * st.zty(static_cast<Eigen::Index>(k)) * v[k] +
               2.0 * st.zt1(static_cast<Eigen::Index>(k)) * (o.sigma[0][k + 1] + o.mu[0] * v[k]);
    double s1 = 0.0, s2 = 0.0;
    for (std::size_t j = 0; j < K; ++j) {
      s1 += ZZ(k, j) * s.g[j] * o.sigma[j + 1][k + 1];
      s2 += ZZ(k, j) * s.g[j] * v[j];
    }
    t += 2.0 * s1 - 2.0 * ZZ(k, k) * s.g[k] * sv[k] + 2.0 * v[k] * (s2 - ZZ(k, k) * s.g[k] * v[k]);
    const double eta = -0.5 * s.re * t + prior;
    o.g[k] = 1.0 / (1.0 + std::exp(-eta));
  }
  std::vector<double> wn{1.0};
  wn.insert(wn.end(), o.g.begin(), o.g.end());
  o.ae = 1.0 / (s.re + 1.0 / (h.A_eps * h.A_eps));
  o.au = 1.0 / (s.ru + 1.0 / (h.A_u * h.A_u));
  double be = o.ae + 0.5 * st.yty;
  for (std::size_t i = 0; i < d; ++i) be -= wn[i] * o.mu[i] * st.cty(static_cast<Eigen::Index>(i));
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < d; ++j) be += 0.5 * C(i, j) * omega(wn, i, j) * (o.sigma[i][j] + o.mu[i] * o.mu[j]);
  double bu = o.au;
  for (std::size_t k = 0; k < K; ++k) bu += 0.5 * o.b[k] * (sv[k] + v[k] * v[k]);
  o.ru = 0.5 * (K + 1.0) / bu;
  o.re = 0.5 * (static_cast<double>(st.n) + 1.0) / be;
  return o;
}

SparseMoments planted(int n, int K, int active, unsigned seed, std::vector<double>* coef = nullptr) {
  sim::SimConfig cfg;
  cfg.seed = seed;
  cfg.n = n;
  cfg.scenario = sim::Scenario::sparse_signal;
  cfg.basis_size = K;
  cfg.active = active;
  const sim::Generator g(cfg);
  if (coef) *coef = g.coefficients();
  SparseMoments st(K);
  for (int i = 0; i < n; ++i) {
    const auto r = g.record(i);
    update_sparse(st, r.y, Eigen::Map<const Vec>(r.x.data(), K));
  }
  return st;
}

}  // namespace

TEST(Sparse, SweepMatchesElementwiseTranscription) {
  const auto st = planted(120, 5, 2, 1);
  const SparseHyper h{100.0, 20.0, 30.0, 1.5, 2.0};
  auto lib = SparseState::initial(5);
  OracleSparse orc{std::vector<double>(6, 0.0), oracle::zeros(6, 6), std::vector<double>(5, 1.0),
                   std::vector<double>(5, 0.5)};
  for (int it = 0; it < 10; ++it) {
    lib = cycle_sparse(lib, st, h);
    orc = oracle_sweep(orc, st, h);
    for (int j = 0; j < 6; ++j) EXPECT_NEAR(lib.mu_bv(j), orc.mu[static_cast<std::size_t>(j)], 1e-8) << it;
    for (int k = 0; k < 5; ++k) {
      EXPECT_NEAR(lib.mu_gamma(k), orc.g[static_cast<std::size_t>(k)], 1e-8) << it;
      EXPECT_NEAR(lib.mu_b(k), orc.b[static_cast<std::size_t>(k)], 1e-8 * orc.b[static_cast<std::size_t>(k)]);
    }
    EXPECT_NEAR(lib.mu_recip_sigsq_eps, orc.re, 1e-9 * orc.re);
    EXPECT_NEAR(lib.mu_recip_sigsq_u, orc.ru, 1e-9 * orc.ru);
  }
}

TEST(Sparse, SeparatesActiveFromInactive) {
  std::vector<double> coef;
  const auto st = planted(400, 12, 3, 2, &coef);
  const auto fit = fit_batch_sparse(st, SparseHyper{}, FitOptions{1e-8, 1000});
  for (int k = 0; k < 12; ++k) {
    if (coef[static_cast<std::size_t>(k)] != 0.0)
      EXPECT_GT(fit.state.mu_gamma(k), 0.5) << k;
    else
      EXPECT_LT(fit.state.mu_gamma(k), 0.5) << k;
  }
}

TEST(Sparse, FixedPointIsIdempotent) {
  const auto st = planted(300, 8, 2, 3);
  const auto fit = fit_batch_sparse(st, SparseHyper{}, FitOptions{1e-12, 5000});
  ASSERT_TRUE(fit.converged);
  EXPECT_LT(max_relative_change(fit.state, cycle_sparse(fit.state, st, SparseHyper{})), 1e-8);
}

TEST(Sparse, InitialStateOmega) {
  const auto s = SparseState::initial(3);
  EXPECT_DOUBLE_EQ(s.Omega_w(0, 0), 1.0);
  EXPECT_DOUBLE_EQ(s.Omega_w(1, 1), 0.5);
  EXPECT_DOUBLE_EQ(s.Omega_w(1, 2), 0.25);
  EXPECT_DOUBLE_EQ(s.Omega_w(0, 2), 0.5);
  EXPECT_DOUBLE_EQ(s.mu_gamma_sum, 1.5);
}

TEST(Sparse, InclusionStaysInsideUnitInterval) {
  const auto st = planted(500, 6, 6, 4);
  const auto fit = fit_batch_sparse(st, SparseHyper{}, FitOptions{1e-8, 300});
  EXPECT_GT(fit.state.mu_gamma.minCoeff(), 0.0);
  EXPECT_LT(fit.state.mu_gamma.maxCoeff(), 1.0);
}

TEST(Sparse, OnlineStepIsAccumulateThenOneSweep) {
  const auto st = planted(100, 4, 1, 5);
  const auto fit = fit_batch_sparse(st, SparseHyper{});
  auto state = fit.state;
  auto stats = st;
  const Vec z = Vec::LinSpaced(4, -1.0, 1.0);
  auto copy = st;
  update_sparse(copy, 0.3, z);
  const auto expected = cycle_sparse(state, copy, SparseHyper{});
  step_online_sparse(state, stats, 0.3, z, SparseHyper{});
  EXPECT_TRUE(state.mu_bv.isApprox(expected.mu_bv, 1e-14));
  EXPECT_EQ(stats.n, 101);
}

TEST(Sparse, HyperValidation) {
  EXPECT_THROW(fit_batch_sparse(planted(20, 2, 1, 6), SparseHyper{1e10, 1e5, 1e5, 0.0, 1.0}), std::invalid_argument);
}
