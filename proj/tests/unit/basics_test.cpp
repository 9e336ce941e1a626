#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "htc/error.hpp"
#include "htc/optim.hpp"
#include "htc/rng.hpp"
#include "htc/series.hpp"

using namespace htc;

TEST(Series, SegmentsFromLabels) {
  const TimeSeries s = make_series({1, 2, 3, 4, 5}, {"w", "w", "s", "s", "w"});
  EXPECT_EQ(s.segment_count(), 3u);
  const auto r = segment_ranges(s);
  ASSERT_EQ(r.size(), 3u);
  EXPECT_EQ(r[1], (std::pair<std::size_t, std::size_t>{2, 4}));
  EXPECT_TRUE(s.window_within(0, 1));
  EXPECT_FALSE(s.window_within(1, 1));
  EXPECT_FALSE(s.window_within(4, 1));
  EXPECT_THROW(make_series({1, 2}, {"a"}), Error);
}

TEST(Series, UnlabelledIsOneSegment) {
  const TimeSeries s = make_series({1, 2, 3});
  EXPECT_FALSE(s.segmented());
  EXPECT_EQ(s.segment_count(), 1u);
  EXPECT_TRUE(s.window_within(0, 2));
  EXPECT_FALSE(s.window_within(1, 2));
}

TEST(Rng, StreamsAreReproducibleAndDistinct) {
  Rng a = make_stream(5, 0), b = make_stream(5, 0), c = make_stream(5, 1), d = make_stream(6, 0);
  const auto x = a();
  EXPECT_EQ(x, b());
  EXPECT_NE(x, c());
  EXPECT_NE(x, d());
}

TEST(Rng, DrawMoments) {
  Rng rng = make_stream(1);
  const int n = 200000;
  double u = 0, e = 0, z = 0, z2 = 0, g = 0;
  for (int i = 0; i < n; ++i) {
    u += draw_uniform(rng);
    e += draw_exponential(rng);
    const double v = draw_normal(rng);
    z += v;
    z2 += v * v;
    g += draw_gamma(rng, 0.3, 2.0);
  }
  EXPECT_NEAR(u / n, 0.5, 0.005);
  EXPECT_NEAR(e / n, 1.0, 0.01);
  EXPECT_NEAR(z / n, 0.0, 0.01);
  EXPECT_NEAR(z2 / n, 1.0, 0.01);
  EXPECT_NEAR(g / n, 0.6, 0.01);
}

TEST(Rng, BetaLogsAreConsistent) {
  Rng rng = make_stream(2);
  double mean = 0.0;
  for (int i = 0; i < 50000; ++i) {
    const BetaDraw d = draw_beta(rng, 1.0, 200.0);
    ASSERT_GT(d.value, 0.0);
    ASSERT_LT(d.value, 1.0);
    EXPECT_NEAR(d.log_value, std::log(d.value), 1e-12 * std::abs(d.log_value) + 1e-300);
    EXPECT_NEAR(d.log_complement, std::log1p(-d.value), 1e-12);
    mean += d.value;
  }
  EXPECT_NEAR(mean / 50000.0, 1.0 / 201.0, 1e-4);
}

TEST(NelderMead, FindsQuadraticMaximum) {
  auto f = [](std::span<const double> x) { return -(x[0] - 0.3) * (x[0] - 0.3) - 2.0 * (x[1] + 0.7) * (x[1] + 0.7); };
  const OptimResult r = nelder_mead_maximize(f, {0.0, 0.0});
  EXPECT_TRUE(r.converged);
  EXPECT_NEAR(r.point[0], 0.3, 1e-4);
  EXPECT_NEAR(r.point[1], -0.7, 1e-4);
}

TEST(NelderMead, RespectsInfeasibleRegion) {
  auto f = [](std::span<const double> x) {
    if (x[0] < 0.0 || x[0] > 1.0) return -std::numeric_limits<double>::infinity();
    return -(x[0] - 2.0) * (x[0] - 2.0);
  };
  const OptimResult r = nelder_mead_maximize(f, {0.5});
  EXPECT_LE(r.point[0], 1.0);
  EXPECT_NEAR(r.point[0], 1.0, 1e-4);
}

TEST(Errors, KindNames) {
  EXPECT_EQ(to_string(ErrorKind::beyond_data), "level-beyond-sample");
  const ConvergenceError e("stuck", {1.0, 2.0}, 0.5);
  EXPECT_EQ(e.kind(), ErrorKind::non_convergence);
  EXPECT_EQ(e.last_iterate().size(), 2u);
}
