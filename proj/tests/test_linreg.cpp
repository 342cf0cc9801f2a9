#include <gtest/gtest.h>

#include <random>

#include <streamvb/linreg.hpp>

#include "oracle.hpp"

using namespace streamvb;

namespace {

struct Sim {
  Vec y;
  Mat x;
};

Sim simulate(int n, int p, unsigned seed, double sigma = 1.5) {
  std::mt19937_64 eng(seed);
  std::normal_distribution<double> nd;
  Sim s{Vec(n), Mat(n, p)};
  for (int i = 0; i < n; ++i) {
    s.x(i, 0) = 1.0;
    for (int j = 1; j < p; ++j) s.x(i, j) = nd(eng);
    double mean = 0.0;
    for (int j = 0; j < p; ++j) mean += (0.5 * j - 1.0) * s.x(i, j);
    s.y(i) = mean + sigma * nd(eng);
  }
  return s;
}

// Element-wise transcription of one sweep.
struct OracleState {
  std::vector<double> mu;
  oracle::Matrix sigma;
  double recip_sigsq;
  double recip_a;
};

OracleState oracle_cycle(const OracleState& s, const oracle::Matrix& xtx, const std::vector<double>& xty, double yty,
                         double n, double sigsq_beta, double A) {
  const std::size_t p = xty.size();
  oracle::Matrix prec = oracle::zeros(p, p);
  for (std::size_t i = 0; i < p; ++i)
    for (std::size_t j = 0; j < p; ++j) prec[i][j] = s.recip_sigsq * xtx[i][j] + (i == j ? 1.0 / sigsq_beta : 0.0);
  OracleState out;
  out.sigma = oracle::inverse(prec);
  out.mu = oracle::matvec(out.sigma, xty);
  for (auto& m : out.mu) m *= s.recip_sigsq;
  out.recip_a = 1.0 / (s.recip_sigsq + 1.0 / (A * A));
  double tr = 0.0;
  for (std::size_t i = 0; i < p; ++i)
    for (std::size_t j = 0; j < p; ++j) tr += xtx[i][j] * (out.sigma[j][i] + out.mu[i] * out.mu[j]);
  const double b = out.recip_a + 0.5 * (yty - 2.0 * oracle::dot(out.mu, xty) + tr);
  out.recip_sigsq = 0.5 * (n + 1.0) / b;
  return out;
}

}  // namespace

TEST(LinReg, SweepMatchesElementwiseTranscription) {
  const auto d = simulate(60, 3, 1);
  const auto stats = from_batch(d.y, d.x);
  oracle::Matrix xtx = oracle::zeros(3, 3);
  std::vector<double> xty(3);
  for (int i = 0; i < 3; ++i) {
    xty[static_cast<std::size_t>(i)] = stats.cty(i);
    for (int j = 0; j < 3; ++j) xtx[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = stats.ctc(i, j);
  }
  const LinRegHyper hyper{100.0, 25.0};
  auto lib = LinRegState::initial(3);
  OracleState orc{{0, 0, 0}, oracle::zeros(3, 3), 1.0, 1.0};
  for (int it = 0; it < 6; ++it) {
    lib = cycle(lib, stats, hyper);
    orc = oracle_cycle(orc, xtx, xty, stats.yty, 60.0, 100.0, 25.0);
    for (int j = 0; j < 3; ++j) {
      EXPECT_NEAR(lib.mu_beta(j), orc.mu[static_cast<std::size_t>(j)], 1e-10);
      for (int k = 0; k < 3; ++k)
        EXPECT_NEAR(lib.Sigma_beta(j, k), orc.sigma[static_cast<std::size_t>(j)][static_cast<std::size_t>(k)], 1e-12);
    }
    EXPECT_NEAR(lib.mu_recip_sigsq, orc.recip_sigsq, 1e-12 * orc.recip_sigsq);
    EXPECT_NEAR(lib.mu_recip_a, orc.recip_a, 1e-12 * orc.recip_a);
  }
}

TEST(LinReg, ElboNonDecreasingAndConverges) {
  const auto d = simulate(200, 4, 2);
  const auto fit = fit_batch(d.y, d.x, LinRegHyper{});
  ASSERT_TRUE(fit.converged);
  EXPECT_LT(fit.iterations, 100);
  for (std::size_t i = 1; i < fit.elbo_trace.size(); ++i)
    EXPECT_GE(fit.elbo_trace[i] - fit.elbo_trace[i - 1], -1e-8) << "iteration " << i;
}

TEST(LinReg, ElboNonDecreasingFromPoorStart) {
  const auto d = simulate(200, 4, 3, 10.0);
  const auto fit = fit_batch(d.y, d.x, LinRegHyper{}, FitOptions{1e-14, 200}, 1e-4);
  for (std::size_t i = 1; i < fit.elbo_trace.size(); ++i) EXPECT_GE(fit.elbo_trace[i] - fit.elbo_trace[i - 1], -1e-8);
}

TEST(LinReg, RecoversCoefficients) {
  const auto d = simulate(2000, 3, 4, 0.5);
  const auto fit = fit_batch(d.y, d.x, LinRegHyper{});
  const auto s = posterior_summary(fit.state, from_batch(d.y, d.x));
  const double truth[] = {-1.0, -0.5, 0.0};
  for (int j = 0; j < 3; ++j) EXPECT_NEAR(s.coefficients[static_cast<std::size_t>(j)].mean, truth[j], 4.0 * s.coefficients[static_cast<std::size_t>(j)].sd);
  EXPECT_NEAR(s.sigma2.mean, 0.25, 0.03);
}

TEST(LinReg, OnlineStepIsAccumulateThenOneSweep) {
  const auto d = simulate(30, 3, 5);
  const LinRegHyper hyper{};
  auto fit = fit_batch(d.y.head(20), d.x.topRows(20), hyper);
  auto stats = from_batch(d.y.head(20), d.x.topRows(20));
  auto state = fit.state;
  const auto expected = cycle(state, updated_gaussian(stats, d.y(20), d.x.row(20).transpose()), hyper);
  step_online(state, stats, d.y(20), d.x.row(20).transpose(), hyper);
  EXPECT_EQ(stats.n, 21);
  EXPECT_TRUE(state.mu_beta.isApprox(expected.mu_beta, 1e-14));
  EXPECT_DOUBLE_EQ(state.mu_recip_sigsq, expected.mu_recip_sigsq);
}

TEST(LinReg, SigmaPosteriorShapeAndRate) {
  LinRegState s = LinRegState::initial(2, 4.0);
  StreamingMoments st(2);
  st.n = 9;
  const auto q = sigma2_posterior(s, st);
  EXPECT_DOUBLE_EQ(q.shape(), 5.0);
  EXPECT_DOUBLE_EQ(q.rate(), 10.0 / 8.0);
  EXPECT_DOUBLE_EQ(inv_gamma_mean_reciprocal(q), 4.0);
}

TEST(LinReg, RejectsInvalidHyperparameters) {
  const auto d = simulate(10, 2, 6);
  EXPECT_THROW(fit_batch(d.y, d.x, LinRegHyper{-1.0, 1e5}), std::invalid_argument);
  EXPECT_THROW(fit_batch(d.y, d.x, LinRegHyper{1e10, 0.0}), std::invalid_argument);
}

TEST(UnitIntervalScaling, BackTransformMatchesUnscaledFit) {
  auto d = simulate(400, 3, 7, 0.8);
  d.x.col(1) = d.x.col(1) * 40.0 + Vec::Constant(400, 100.0);
  d.x.col(2) = d.x.col(2) * 0.01 - Vec::Constant(400, 3.0);
  d.y = d.y * 7.0 + Vec::Constant(400, 20.0);
  const auto scaling = UnitIntervalScaling::fit(d.y, d.x, 0);
  Mat xs(400, 3);
  Vec ys(400);
  for (int i = 0; i < 400; ++i) {
    xs.row(i) = scaling.transform_row(d.x.row(i).transpose()).transpose();
    ys(i) = scaling.transform_response(d.y(i));
  }
  EXPECT_NEAR(xs.col(1).minCoeff(), 0.0, 1e-12);
  EXPECT_NEAR(xs.col(1).maxCoeff(), 1.0, 1e-12);
  const auto raw = fit_batch(d.y, d.x, LinRegHyper{});
  const auto scaled = fit_batch(ys, xs, LinRegHyper{});
  const auto [mu, sigma] = scaling.back_transform(scaled.state.mu_beta, scaled.state.Sigma_beta);
  for (int j = 0; j < 3; ++j) {
    EXPECT_NEAR(mu(j), raw.state.mu_beta(j), 1e-6 * std::sqrt(raw.state.Sigma_beta(j, j)) + 1e-9);
    EXPECT_NEAR(sigma(j, j), raw.state.Sigma_beta(j, j), 1e-5 * raw.state.Sigma_beta(j, j));
  }
  EXPECT_NEAR(scaling.variance_factor() / scaled.state.mu_recip_sigsq, 1.0 / raw.state.mu_recip_sigsq,
              1e-5 / raw.state.mu_recip_sigsq);
}
