#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "htc/error.hpp"
#include "htc/mvn.hpp"
#include "htc/simulate.hpp"
#include "oracles.hpp"

using namespace htc;

namespace {

double gaussian_quantile(double p) {
  // Bisection on the erfc-based CDF; only used to set test levels.
  double lo = -10.0, hi = 10.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (normal_cdf(mid) < p ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace

TEST(Mvn, IndependentBoxFactorises) {
  const Eigen::MatrixXd cov = Eigen::MatrixXd::Identity(3, 3);
  const std::vector<double> lo{-1.0, -std::numeric_limits<double>::infinity(), 0.5};
  const std::vector<double> hi{2.0, 0.3, std::numeric_limits<double>::infinity()};
  const MvnResult r = mvn_probability(cov, lo, hi);
  const double exact = (normal_cdf(2.0) - normal_cdf(-1.0)) * normal_cdf(0.3) * normal_survivor(0.5);
  EXPECT_NEAR(r.value, exact, 1e-12);
}

TEST(Mvn, BivariateMatchesQuadrature) {
  for (double rho : {-0.6, 0.3, 0.9}) {
    Eigen::MatrixXd cov(2, 2);
    cov << 1.0, rho, rho, 1.0;
    const double inf = std::numeric_limits<double>::infinity();
    const std::vector<double> lo{1.2, 1.2}, hi{inf, inf};
    MvnOptions o;
    o.target_se = 1e-8;
    const MvnResult r = mvn_probability(cov, lo, hi, o);
    EXPECT_NEAR(r.value, oracle::bivariate_upper(1.2, rho), 5.0 * r.se + 1e-10);
  }
}

TEST(TrueTheta, RunLengthOneMatchesBivariateOracle) {
  for (double rho : {0.2, 0.5, 0.8}) {
    for (double p : {0.95, 0.99}) {
      const double x = gaussian_quantile(p);
      const double exact = 1.0 - oracle::bivariate_upper(x, rho) / normal_survivor(x);
      const MvnResult r = true_theta_ar1(rho, p, 1);
      EXPECT_NEAR(r.value, exact, 4.0 * r.se + 1e-9) << rho << " " << p;
    }
  }
}

TEST(TrueTheta, IndependentSeriesIsPowerOfCdf) {
  for (std::size_t m : {1u, 3u, 6u}) {
    const MvnResult r = true_theta_ar1(0.0, 0.97, m);
    EXPECT_NEAR(r.value, std::pow(0.97, static_cast<double>(m)), 1e-8);
  }
}

TEST(TrueTheta, DecreasesWithCorrelationAndRunLength) {
  double prev = 1.0;
  for (double rho : {0.1, 0.4, 0.7, 0.9}) {
    const double v = true_theta_ar1(rho, 0.98, 2).value;
    EXPECT_LT(v, prev);
    prev = v;
  }
  EXPECT_GT(true_theta_ar1(0.6, 0.98, 1).value, true_theta_ar1(0.6, 0.98, 4).value);
}

TEST(TrueTheta, AgreesWithPlainMonteCarlo) {
  const double rho = 0.6, p = 0.9;
  const std::size_t m = 3;
  const double x = gaussian_quantile(p);
  Rng rng = make_stream(31);
  const double sd = std::sqrt(1.0 - rho * rho);
  std::size_t exceed = 0, quiet = 0;
  for (int i = 0; i < 2000000; ++i) {
    double v = draw_normal(rng);
    const bool up = v > x;
    bool below = true;
    for (std::size_t j = 0; j < m; ++j) {
      v = rho * v + sd * draw_normal(rng);
      below = below && v <= x;
    }
    if (up) {
      ++exceed;
      quiet += below ? 1 : 0;
    }
  }
  const double mc = static_cast<double>(quiet) / static_cast<double>(exceed);
  const double se = std::sqrt(mc * (1.0 - mc) / static_cast<double>(exceed));
  const MvnResult r = true_theta_ar1(rho, p, m);
  EXPECT_NEAR(r.value, mc, 4.0 * std::hypot(se, r.se));
}

TEST(TrueTheta, RejectsBadArguments) {
  EXPECT_THROW(true_theta_ar1(1.0, 0.9, 1), Error);
  EXPECT_THROW(true_theta_ar1(0.5, 1.0, 1), Error);
  EXPECT_THROW(true_theta_ar1(0.5, 0.9, 0), Error);
  EXPECT_THROW(true_theta_ar1(0.5, 0.9, 11), Error);
}

TEST(SimAr1, AutocorrelationAndGaussianMargin) {
  const TimeSeries s = sim_ar1({0.5, 40000, Margins::gaussian}, 3);
  const auto& v = s.values;
  const double n = static_cast<double>(v.size());
  const double mean = std::accumulate(v.begin(), v.end(), 0.0) / n;
  double c0 = 0.0, c1 = 0.0;
  for (std::size_t t = 0; t < v.size(); ++t) {
    c0 += (v[t] - mean) * (v[t] - mean);
    if (t + 1 < v.size()) c1 += (v[t] - mean) * (v[t + 1] - mean);
  }
  EXPECT_NEAR(c1 / c0, 0.5, 0.02);
  EXPECT_NEAR(c0 / n, 1.0, 0.03);
  EXPECT_NEAR(mean, 0.0, 0.03);
}

TEST(SimAr1, ExponentialMarginPassesKs) {
  const TimeSeries s = sim_ar1({0.5, 40000, Margins::exponential}, 4);
  std::vector<double> v = s.values;
  std::sort(v.begin(), v.end());
  double d = 0.0;
  const double n = static_cast<double>(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double f = 1.0 - std::exp(-v[i]);
    d = std::max({d, std::abs(f - static_cast<double>(i) / n), std::abs(f - static_cast<double>(i + 1) / n)});
  }
  // Serial dependence inflates the iid critical value; a factor of two is ample at rho = 0.5.
  EXPECT_LT(d * std::sqrt(n), 2.0 * 1.36);
}

TEST(SimAr1, DeterministicPerSeed) {
  EXPECT_EQ(sim_ar1({0.3, 100, Margins::exponential}, 9).values, sim_ar1({0.3, 100, Margins::exponential}, 9).values);
  EXPECT_NE(sim_ar1({0.3, 100, Margins::exponential}, 9).values, sim_ar1({0.3, 100, Margins::exponential}, 10).values);
  EXPECT_THROW(sim_ar1({1.0, 100, Margins::gaussian}, 1), Error);
}

TEST(SimHt, ForwardModelHolds) {
  HtSimSpec spec;
  spec.alpha = 0.7;
  spec.beta = 0.2;
  spec.n = 5000;
  spec.residual_mix = {{0.5, -1.0, 0.2, ResidualFamily::laplace}, {0.5, 1.0, 0.2, ResidualFamily::laplace}};
  const HtSample s = sim_ht(spec, 5);
  double excess = 0.0, zbar = 0.0;
  std::size_t first = 0;
  for (Eigen::Index i = 0; i < s.x.size(); ++i) {
    ASSERT_GT(s.x[i], spec.u);
    EXPECT_NEAR((s.y[i] - spec.alpha * s.x[i]) / std::pow(s.x[i], spec.beta), s.z[i], 1e-12);
    excess += s.x[i] - spec.u;
    zbar += s.z[i];
    first += s.component[static_cast<std::size_t>(i)] == 0 ? 1 : 0;
  }
  EXPECT_NEAR(excess / 5000.0, 1.0, 0.05);
  EXPECT_NEAR(zbar / 5000.0, 0.0, 0.05);
  EXPECT_NEAR(static_cast<double>(first) / 5000.0, 0.5, 0.03);
  const LagData d = to_lag_data(s, spec.u);
  EXPECT_EQ(d.rows(), 5000u);
}

TEST(SimHt, ValidatesSpec) {
  HtSimSpec spec;
  spec.residual_mix = {{0.6, 0.0, 1.0, ResidualFamily::gaussian}};
  EXPECT_THROW(sim_ht(spec, 1), Error);
  spec.residual_mix = {{1.0, 0.0, 1.0, ResidualFamily::gaussian}};
  spec.alpha = 1.5;
  EXPECT_THROW(sim_ht(spec, 1), Error);
}

TEST(GaussianTruth, Parameters) {
  const auto [a, b] = ht_truth_gaussian(0.5, 1);
  EXPECT_DOUBLE_EQ(a, 0.25);
  EXPECT_DOUBLE_EQ(b, 0.5);
  EXPECT_DOUBLE_EQ(ht_truth_gaussian(-0.5, 2).first, -0.0625);
}

TEST(GaussianResidualLaw, Ar1Margins) {
  const double rho = 0.5;
  const auto law = ar1_residual_law(rho, 3);
  ASSERT_EQ(law.dimension(), 3u);
  for (std::size_t j = 0; j < 3; ++j) {
    const double r2 = std::pow(rho, 2.0 * static_cast<double>(j + 1));
    const double sd = std::sqrt(2.0 * r2 * (1.0 - r2));
    EXPECT_NEAR(law.marginal_survivor(j, 0.3), normal_survivor(0.3 / sd), 1e-15);
  }
  const std::vector<double> z{0.2, 0.1, 0.4};
  const std::vector<std::size_t> prefixes{1, 2, 3};
  std::vector<double> out(3);
  law.prefix_cdf(z, prefixes, out);
  EXPECT_NEAR(out[0], 1.0 - law.marginal_survivor(0, 0.2), 1e-15);
  EXPECT_GE(out[0], out[1]);
  EXPECT_GE(out[1], out[2]);
}

// With Y_0 = X_0^2 / 2 and Y_j = sign(rho^j) X_j^2 / 2, the limit is Z_j = sqrt(2) |rho|^j (X_j - rho^j X_0),
// so Cov(Z_i, Z_j) = 2 |rho|^{i+j} Cov(X_i, X_j | X_0).
TEST(GaussianResidualLaw, Ar1CovarianceMatchesGaussianConditional) {
  for (double rho : {0.5, -0.7, 0.9}) {
    const std::size_t m = 4;
    const Eigen::MatrixXd r = ar1_correlation(rho, m + 1);
    const Eigen::MatrixXd cond =
        r.bottomRightCorner(m, m) - r.bottomLeftCorner(m, 1) * r.topRightCorner(1, m);
    const Eigen::MatrixXd cov = ar1_residual_law(rho, m).covariance();
    for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(m); ++i) {
      for (Eigen::Index j = 0; j < static_cast<Eigen::Index>(m); ++j) {
        const double expected = 2.0 * std::pow(std::abs(rho), static_cast<double>(i + j + 2)) * cond(i, j);
        EXPECT_NEAR(cov(i, j), expected, 1e-14) << rho << " " << i << " " << j;
      }
    }
  }
}

TEST(GaussianResidualLaw, DiagonalPrefixFactorises) {
  Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(2, 2);
  cov(0, 0) = 0.5;
  cov(1, 1) = 2.0;
  const GaussianResidualLaw law(cov);
  const std::vector<double> z{0.3, -0.2};
  const std::vector<std::size_t> prefixes{2};
  std::vector<double> out(1);
  law.prefix_cdf(z, prefixes, out);
  EXPECT_NEAR(out[0], normal_cdf(0.3 / std::sqrt(0.5)) * normal_cdf(-0.2 / std::sqrt(2.0)), 1e-10);
}
