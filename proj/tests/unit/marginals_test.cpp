#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "htc/error.hpp"
#include "htc/marginals.hpp"
#include "htc/rng.hpp"

using namespace htc;

namespace {

std::vector<double> exponential_sample(std::size_t n, std::uint64_t seed) {
  Rng rng = make_stream(seed);
  std::vector<double> v(n);
  for (double& x : v) x = draw_exponential(rng);
  return v;
}

}  // namespace

TEST(GpdSurvivor, ClosedForms) {
  EXPECT_NEAR(gpd_survivor({1.0, 0.5, 0.0}, 1.0), std::pow(1.5, -2.0), 1e-15);
  EXPECT_NEAR(gpd_survivor({1.0, 0.0, 0.0}, 1.0), std::exp(-1.0), 1e-15);
  EXPECT_EQ(gpd_survivor({1.0, -0.5, 0.0}, 3.0), 0.0);
  EXPECT_NEAR(gpd_survivor({1.0, 1e-9, 0.0}, 1.0), std::exp(-1.0), 1e-8);
}

TEST(GpdSurvivor, QuantileInvertsLogSurvivor) {
  for (double xi : {-0.4, 0.0, 0.3}) {
    const GpdParams p{2.0, xi, 1.0};
    for (double x : {1.0, 1.5, 3.0, 4.5}) {
      EXPECT_NEAR(gpd_quantile_from_log_survivor(p, gpd_log_survivor(p, x)), x, 1e-10);
    }
  }
}

TEST(FitGpd, ExponentialSample) {
  const auto v = exponential_sample(20000, 3);
  const GpdParams p = fit_gpd(v, 0.0);
  EXPECT_NEAR(p.scale, 1.0, 0.05);
  EXPECT_NEAR(p.shape, 0.0, 0.03);
}

TEST(FitGpd, RecoversHeavyTail) {
  // Inverse-CDF draws from GPD(2, 0.3).
  Rng rng = make_stream(11);
  const double sigma = 2.0, xi = 0.3;
  const std::size_t n = 50000;
  std::vector<double> v(n);
  for (double& x : v) x = sigma / xi * (std::pow(draw_uniform(rng), -xi) - 1.0);
  const GpdParams p = fit_gpd(v, 0.0);
  // Asymptotic standard errors of the GPD MLE.
  const double se_xi = (1.0 + xi) / std::sqrt(static_cast<double>(n));
  const double se_sigma = sigma * std::sqrt(2.0 * (1.0 + xi) / static_cast<double>(n));
  EXPECT_LT(std::abs(p.shape - xi), 3.0 * se_xi);
  EXPECT_LT(std::abs(p.scale - sigma), 3.0 * se_sigma);
}

TEST(FitGpd, StationaryAtOptimum) {
  const auto v = exponential_sample(5000, 5);
  const GpdParams p = fit_gpd(v, 0.0);
  // Central differences of the log-likelihood itself.
  const double h = 1e-6;
  const double ds = (gpd_log_likelihood({p.scale + h, p.shape, 0.0}, v) -
                     gpd_log_likelihood({p.scale - h, p.shape, 0.0}, v)) / (2 * h);
  const double dx = (gpd_log_likelihood({p.scale, p.shape + h, 0.0}, v) -
                     gpd_log_likelihood({p.scale, p.shape - h, 0.0}, v)) / (2 * h);
  EXPECT_LT(std::hypot(ds, dx) / v.size(), 1e-6);
}

TEST(FitGpd, TooFewExceedances) {
  const std::vector<double> v{1.0};
  try {
    fit_gpd(v, 0.0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::too_few_points);
  }
}

TEST(Laplace, BranchFormulas) {
  EXPECT_DOUBLE_EQ(laplace_quantile(0.5), 0.0);
  EXPECT_NEAR(laplace_quantile(0.75), -std::log(0.5), 1e-15);
  EXPECT_NEAR(laplace_quantile(0.25), std::log(0.5), 1e-15);
  // The upper branch inverts 1 - F, so the round trip loses about eps * e^y.
  for (double y : {-5.0, -0.3, 0.0, 0.7, 12.0}) {
    EXPECT_NEAR(laplace_quantile(laplace_cdf(y)), y, 1e-12 + 1e-15 * std::exp(std::abs(y)));
  }
}

class MarginalFixture : public ::testing::Test {
 protected:
  MarginalFixture() : series(make_series(exponential_sample(8000, 7))), model(fit_marginal(series, 0.95)) {}
  TimeSeries series;
  MarginalModel model;
};

TEST_F(MarginalFixture, GlueIsContinuous) {
  const double u = model.threshold();
  EXPECT_NEAR(model.cdf(u), model.empirical_cdf(u), 1e-15);
  EXPECT_NEAR(model.tail_fraction(), 1.0 - model.empirical_cdf(u), 1e-15);
  for (double x : {u, u + 0.5, u + 3.0}) {
    EXPECT_NEAR(model.cdf(x), 1.0 - model.tail_fraction() * gpd_survivor(model.gpd(), x), 1e-15);
  }
}

TEST_F(MarginalFixture, TailMatchesExponential) {
  EXPECT_NEAR(model.cdf(-std::log(0.01)), 0.99, 0.005);
}

TEST_F(MarginalFixture, LaplaceTransformIsMonotone) {
  double prev = -INFINITY;
  for (double x = 0.001; x < 12.0; x += 0.01) {
    const double y = model.to_laplace(x);
    EXPECT_GE(y, prev);
    prev = y;
  }
}

TEST_F(MarginalFixture, RoundTripOnGpdBranch) {
  for (double x = model.threshold() + 0.01; x < 20.0; x += 0.37) {
    EXPECT_LT(std::abs(model.from_laplace(model.to_laplace(x)) - x), 1e-9 * (1.0 + std::abs(x)));
  }
}

TEST_F(MarginalFixture, RoundTripOnEmpiricalBranch) {
  const auto& s = model.sorted_sample();
  // Order statistics sit exactly on the interpolation nodes.
  for (std::size_t i = 10; i < s.size() / 2; i += 97) {
    if (s[i] == s[i + 1]) continue;
    EXPECT_NEAR(model.from_laplace(model.to_laplace(s[i])), s[i], 1e-9);
  }
}

TEST_F(MarginalFixture, MedianMapsToZero) {
  // The empirical CDF takes the value 0.5 only at rank (n+1)/2; test via the inverse.
  EXPECT_NEAR(model.to_laplace(model.from_laplace(0.0)), 0.0, 2.0 / 8001.0);
}

TEST(FitMarginal, RejectsShortSeries) {
  EXPECT_THROW(fit_marginal(make_series(exponential_sample(50, 1)), 0.95), Error);
  EXPECT_THROW(fit_marginal(make_series(exponential_sample(500, 1)), 0.4), Error);
}
