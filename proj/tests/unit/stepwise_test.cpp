#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "htc/error.hpp"
#include "htc/simulate.hpp"
#include "htc/stepwise.hpp"

using namespace htc;

namespace {

HtSimSpec gaussian_spec(double alpha, double beta, std::size_t n) {
  HtSimSpec s;
  s.alpha = alpha;
  s.beta = beta;
  s.u = 2.0;
  s.n = n;
  s.residual_mix = {{1.0, 0.0, 1.0, ResidualFamily::gaussian}};
  return s;
}

}  // namespace

TEST(Profile, ClosedFormNuisanceAtBetaZero) {
  const LagData d = to_lag_data(sim_ht(gaussian_spec(0.5, 0.0, 300), 1), 2.0);
  const StepwiseFit fit = fit_stepwise(d);
  // At any (alpha, 0) the profiled mu, psi are the residual sample moments.
  const Eigen::VectorXd z = residuals(d, HtParams{{fit.params.alpha[0]}, {fit.params.beta[0]}}).col(0);
  const double mean = z.mean();
  const double sd = std::sqrt((z.array() - mean).square().mean());
  EXPECT_NEAR(fit.mu[0], mean, 1e-12);
  EXPECT_NEAR(fit.psi[0], sd, 1e-12);
  EXPECT_TRUE(fit.lags[0].converged);
}

TEST(FitStepwise, ResidualCloudMatchesParams) {
  const LagData d = to_lag_data(sim_ht(gaussian_spec(0.7, 0.3, 400), 2), 2.0);
  const StepwiseFit fit = fit_stepwise(d);
  EXPECT_TRUE((fit.residual_cloud - residuals(d, fit.params)).cwiseAbs().maxCoeff() == 0.0);
  EXPECT_GT(fit.psi[0], 0.0);
}

TEST(FitStepwise, RecoversParametersAcrossReplicates) {
  std::vector<double> a, b;
  for (std::uint64_t s = 0; s < 20; ++s) {
    const StepwiseFit fit = fit_stepwise(to_lag_data(sim_ht(gaussian_spec(0.7, 0.3, 400), 100 + s), 2.0));
    a.push_back(fit.params.alpha[0]);
    b.push_back(fit.params.beta[0]);
  }
  auto check = [](const std::vector<double>& v, double truth) {
    const double n = static_cast<double>(v.size());
    const double mean = std::accumulate(v.begin(), v.end(), 0.0) / n;
    double ss = 0.0;
    for (double x : v) ss += (x - mean) * (x - mean);
    const double se = std::sqrt(ss / (n - 1.0) / n);
    EXPECT_LT(std::abs(mean - truth), 3.0 * se + 1e-3) << "mean " << mean << " se " << se;
  };
  check(a, 0.7);
  check(b, 0.3);
}

TEST(FitStepwise, BeatsRandomRestarts) {
  const LagData d = to_lag_data(sim_ht(gaussian_spec(0.6, 0.4, 300), 9), 2.0);
  const StepwiseFit fit = fit_stepwise(d);
  const KptSettings kpt{true, kpt_reference_level(d)};
  Rng rng = make_stream(3);
  for (int r = 0; r < 200; ++r) {
    const double ll = profile_log_likelihood(d, 0, draw_uniform(rng), draw_uniform(rng), kpt);
    EXPECT_LE(ll, fit.lags[0].log_likelihood + 1e-9);
  }
}

TEST(FitStepwise, UnconstrainedStillReturns) {
  const LagData d = to_lag_data(sim_ht(gaussian_spec(0.95, 0.05, 300), 4), 2.0);
  StepwiseOptions o;
  o.constraints = false;
  const StepwiseFit fit = fit_stepwise(d, o);
  EXPECT_TRUE(std::isfinite(fit.lags[0].log_likelihood));
}

TEST(FitStepwise, TooFewPoints) {
  const LagData d = to_lag_data(sim_ht(gaussian_spec(0.5, 0.5, 5), 1), 2.0);
  try {
    fit_stepwise(d);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::too_few_points);
  }
}

TEST(SampleConditional, SingleRowCloud) {
  StepwiseFit fit;
  fit.params = HtParams{{0.3, 0.4}, {0.5, 0.2}};
  fit.residual_cloud = Eigen::MatrixXd(1, 2);
  fit.residual_cloud << 0.7, -0.2;
  Rng rng = make_stream(1);
  const auto s = sample_conditional(fit, nullptr, 3.0, 50, rng);
  for (Eigen::Index r = 0; r < 50; ++r) {
    const double y = s.laplace(r, 0);
    EXPECT_GT(y, 3.0);
    EXPECT_NEAR(s.laplace(r, 1), 0.3 * y + std::pow(y, 0.5) * 0.7, 1e-12);
    EXPECT_NEAR(s.laplace(r, 2), 0.4 * y + std::pow(y, 0.2) * -0.2, 1e-12);
  }
}

TEST(SampleConditional, PerfectDependence) {
  StepwiseFit fit;
  fit.params = HtParams{{1.0, 1.0}, {0.0, 0.0}};
  fit.residual_cloud = Eigen::MatrixXd::Zero(10, 2);
  Rng rng = make_stream(2);
  const auto s = sample_conditional(fit, nullptr, 2.0, 100, rng);
  for (Eigen::Index r = 0; r < 100; ++r) {
    EXPECT_EQ(s.laplace(r, 1), s.laplace(r, 0));
    EXPECT_EQ(s.laplace(r, 2), s.laplace(r, 0));
  }
}

TEST(SampleConditional, PreservesCrossLagCorrelation) {
  Rng rng = make_stream(5);
  StepwiseFit fit;
  fit.params = HtParams{{0.0, 0.0}, {0.0, 0.0}};
  fit.residual_cloud.resize(300, 2);
  for (Eigen::Index i = 0; i < 300; ++i) {
    const double a = draw_normal(rng);
    fit.residual_cloud(i, 0) = a;
    fit.residual_cloud(i, 1) = 0.8 * a + 0.6 * draw_normal(rng);
  }
  auto corr = [](const Eigen::VectorXd& x, const Eigen::VectorXd& y) {
    const Eigen::ArrayXd a = x.array() - x.mean(), b = y.array() - y.mean();
    return (a * b).sum() / std::sqrt(a.square().sum() * b.square().sum());
  };
  const double target = corr(fit.residual_cloud.col(0), fit.residual_cloud.col(1));
  const auto s = sample_conditional(fit, nullptr, 2.0, 200000, rng);
  EXPECT_NEAR(corr(s.laplace.col(1), s.laplace.col(2)), target, 0.01);
}
