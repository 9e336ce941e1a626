#include <gtest/gtest.h>

#include <cmath>

#include "htc/error.hpp"
#include "htc/ht_core.hpp"
#include "htc/rng.hpp"

using namespace htc;

namespace {

LagData make_random_lags(std::size_t n, std::size_t m, std::uint64_t seed) {
  Rng rng = make_stream(seed);
  Eigen::VectorXd y0(static_cast<Eigen::Index>(n));
  Eigen::MatrixXd lags(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(m));
  for (Eigen::Index i = 0; i < y0.size(); ++i) {
    y0[i] = 1.0 + draw_exponential(rng);
    for (Eigen::Index j = 0; j < lags.cols(); ++j) lags(i, j) = 0.5 * y0[i] + draw_normal(rng);
  }
  return make_lag_data(y0, lags, 1.0);
}

// Direct curve-crossing check: conditional quantile curve against the dependent curve on a grid of x >= v.
bool crossing_free(double a, double b, double z, double zd, double v) {
  for (double x = v; x < v + 1e4; x *= 1.01) {
    if (a * x + std::pow(x, b) * z > x + zd + 1e-9) return false;
  }
  return true;
}

}  // namespace

TEST(Residuals, ExactCancellation) {
  Eigen::VectorXd y0(1);
  y0 << 4.0;
  Eigen::MatrixXd lags(1, 1);
  lags << 2.0;
  const LagData d = make_lag_data(y0, lags, 1.0);
  EXPECT_DOUBLE_EQ(residuals(d, HtParams{{0.5}, {0.5}})(0, 0), 0.0);
  EXPECT_DOUBLE_EQ(residuals(d, HtParams{{0.0}, {0.0}})(0, 0), 2.0);
}

TEST(Residuals, ForwardModelInverts) {
  const LagData d = make_random_lags(200, 3, 4);
  const HtParams p{{0.2, 0.5, 0.9}, {0.1, 0.6, 0.3}};
  const Eigen::MatrixXd z = residuals(d, p);
  for (Eigen::Index i = 0; i < z.rows(); ++i) {
    for (Eigen::Index j = 0; j < z.cols(); ++j) {
      const auto jj = static_cast<std::size_t>(j);
      const double back = p.alpha[jj] * d.y0[i] + std::pow(d.y0[i], p.beta[jj]) * z(i, j);
      EXPECT_NEAR(back, d.lags(i, j), 1e-12 * (1.0 + std::abs(d.lags(i, j))));
    }
  }
}

TEST(ZOfLevel, ClosedForms) {
  EXPECT_DOUBLE_EQ(z_of_level(3.0, 3.0, HtParams{{1.0, 1.0}, {0.0, 0.0}}).cwiseAbs().maxCoeff(), 0.0);
  EXPECT_DOUBLE_EQ(z_of_level(2.0, 4.0, HtParams{{0.25}, {0.5}})[0], 0.5);
}

TEST(ZOfLevel, MatchesResiduals) {
  const LagData d = make_random_lags(20, 2, 8);
  const HtParams p{{0.3, 0.6}, {0.4, 0.2}};
  const Eigen::MatrixXd z = residuals(d, p);
  for (Eigen::Index i = 0; i < d.y0.size(); ++i) {
    for (Eigen::Index j = 0; j < 2; ++j) {
      EXPECT_NEAR(z_of_level(d.lags(i, j), d.y0[i], p)[j], z(i, j), 1e-12);
    }
  }
}

TEST(LagData, DropsIncompleteRows) {
  Eigen::VectorXd y0(3);
  y0 << 2.0, 0.5, 3.0;
  Eigen::MatrixXd lags(3, 1);
  lags << 1.0, 1.0, NAN;
  const LagData d = make_lag_data(y0, lags, 1.0);
  EXPECT_EQ(d.rows(), 1u);
  EXPECT_THROW(make_lag_data(y0.tail(1), lags.bottomRows(1), 1.0), Error);
}

TEST(Tie, ExpandCollapseRoundTrip) {
  const TieStructure geo{TieKind::markov_geometric, 4};
  const HtParams p = geo.expand(std::vector<double>{0.6, 0.3});
  EXPECT_NEAR(p.alpha[3], std::pow(0.6, 4), 1e-15);
  EXPECT_EQ(p.beta[2], 0.3);
  EXPECT_EQ(geo.collapse(p), (std::vector<double>{0.6, 0.3}));

  const TieStructure pow{TieKind::markov_beta_power, 3};
  const HtParams q = pow.expand(std::vector<double>{0.5});
  EXPECT_EQ(q.alpha, (std::vector<double>{0.0, 0.0, 0.0}));
  EXPECT_NEAR(q.beta[2], 0.125, 1e-15);
  EXPECT_EQ(pow.free_count(), 1u);

  const TieStructure freed{TieKind::free, 2};
  EXPECT_EQ(freed.free_count(), 4u);
  const std::vector<double> f{0.1, 0.2, 0.3, 0.4};
  EXPECT_EQ(freed.collapse(freed.expand(f)), f);
  EXPECT_EQ(parse_tie_kind("markov_geometric"), TieKind::markov_geometric);
  EXPECT_THROW(parse_tie_kind("bogus"), Error);
}

TEST(Kpt, DependentBoundaryIsFeasible) {
  for (double z : {-3.0, 0.0, 2.5}) EXPECT_TRUE(kpt_lag_feasible(1.0, 0.0, z, z, 5.0));
}

TEST(Kpt, LargeResidualWithStrongDependenceIsInfeasible) {
  EXPECT_FALSE(kpt_lag_feasible(0.99, 0.9, 50.0, 0.0, 20.0));
  EXPECT_FALSE(crossing_free(0.99, 0.9, 50.0, 0.0, 20.0));
}

TEST(Kpt, AgreesWithGridCrossingCheck) {
  Rng rng = make_stream(17);
  int agree = 0, total = 0;
  for (int t = 0; t < 2000; ++t) {
    const double a = draw_uniform(rng), b = draw_uniform(rng);
    const double z = 4.0 * draw_normal(rng), zd = 2.0 * draw_normal(rng);
    const double v = 2.0 + 8.0 * draw_uniform(rng);
    ++total;
    agree += kpt_lag_feasible(a, b, z, zd, v) == crossing_free(a, b, z, zd, v);
  }
  // The grid can miss crossings in a sliver near tangency, nothing else.
  EXPECT_GE(agree, total - 5);
}

TEST(Kpt, LoweringResidualExtremesKeepsFeasibility) {
  const LagData d = make_random_lags(100, 2, 21);
  Rng rng = make_stream(23);
  for (int t = 0; t < 500; ++t) {
    const HtParams p{{draw_uniform(rng), draw_uniform(rng)}, {draw_uniform(rng), draw_uniform(rng)}};
    ResidualEnvelope env = residual_envelope(d, residuals(d, p));
    const KptSettings k{true, kpt_reference_level(d)};
    if (!kpt_feasible(p, env, k)) continue;
    for (auto& z : env.z_max) z -= draw_exponential(rng);
    for (auto& z : env.z_min) z -= draw_exponential(rng);
    EXPECT_TRUE(kpt_feasible(p, env, k));
  }
}

TEST(Kpt, DisabledAlwaysFeasible) {
  const LagData d = make_random_lags(50, 1, 2);
  EXPECT_TRUE(kpt_feasible(HtParams{{0.99}, {0.99}}, d, KptSettings{false, 0.0}));
}
