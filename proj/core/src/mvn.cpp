#include "htc/mvn.hpp"

#include <algorithm>
#include <boost/math/special_functions/erf.hpp>
#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

#include "htc/error.hpp"
#include "htc/residual_law.hpp"
#include "htc/rng.hpp"

namespace htc {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Probability mass in (a, b) and the point splitting it at fraction w, taken
// from whichever tail keeps precision.
struct Slice {
  double mass;
  double point;
};

Slice slice(double a, double b, double w) {
  const bool upper = a > 0.0;
  if (upper) {
    const double ta = normal_survivor(a);
    const double tb = normal_survivor(b);
    const double mass = ta - tb;
    const double q = std::clamp(ta - w * mass, std::numeric_limits<double>::min(), 1.0);
    return {mass, std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * q)};
  }
  const double ca = normal_cdf(a);
  const double cb = normal_cdf(b);
  const double mass = cb - ca;
  const double p = std::clamp(ca + w * mass, std::numeric_limits<double>::min(), 1.0);
  return {mass, -std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * p)};
}

double normal_mass(double a, double b) {
  return a > 0.0 ? normal_survivor(a) - normal_survivor(b) : normal_cdf(b) - normal_cdf(a);
}

bool is_prime(unsigned v) {
  if (v < 2) return false;
  for (unsigned d = 2; d * d <= v; ++d) {
    if (v % d == 0) return false;
  }
  return true;
}

std::vector<double> richtmyer_generators(std::size_t dim) {
  std::vector<double> out;
  for (unsigned v = 2; out.size() < dim; ++v) {
    if (is_prime(v)) {
      const double r = std::sqrt(static_cast<double>(v));
      out.push_back(r - std::floor(r));
    }
  }
  return out;
}

class Integrand {
 public:
  Integrand(const Eigen::MatrixXd& cov, std::span<const double> lower, std::span<const double> upper)
      : chol_(cov.llt().matrixL()), lower_(lower.begin(), lower.end()), upper_(upper.begin(), upper.end()),
        y_(lower.size()) {
    if (cov.llt().info() != Eigen::Success) throw Error(ErrorKind::invalid_argument, "covariance is not positive definite");
  }

  std::size_t free_dims() const { return lower_.size() - 1; }

  double operator()(std::span<const double> w) {
    const auto d = lower_.size();
    double f = 1.0;
    for (std::size_t i = 0; i < d; ++i) {
      const auto ii = static_cast<Eigen::Index>(i);
      double s = 0.0;
      for (std::size_t j = 0; j < i; ++j) s += chol_(ii, static_cast<Eigen::Index>(j)) * y_[j];
      const double l = chol_(ii, ii);
      const double a = (lower_[i] - s) / l;
      const double b = (upper_[i] - s) / l;
      if (i + 1 == d) return f * normal_mass(a, b);
      const Slice sl = slice(a, b, w[i]);
      f *= sl.mass;
      if (!(f > 0.0)) return 0.0;
      y_[i] = sl.point;
    }
    return f;
  }

 private:
  Eigen::MatrixXd chol_;
  std::vector<double> lower_, upper_;
  std::vector<double> y_;
};

}  // namespace

MvnResult mvn_probability(const Eigen::MatrixXd& cov, std::span<const double> lower, std::span<const double> upper,
                          const MvnOptions& options) {
  const auto d = static_cast<std::size_t>(cov.rows());
  if (cov.cols() != cov.rows() || lower.size() != d || upper.size() != d || d == 0) {
    throw Error(ErrorKind::invalid_argument, "covariance and bound dimensions disagree");
  }
  Integrand f(cov, lower, upper);
  if (d == 1) return {f(std::span<const double>()), 0.0};

  const std::size_t dims = f.free_dims();
  const auto gens = richtmyer_generators(dims);
  Rng rng = make_stream(options.seed, d);
  std::vector<double> w(dims), w_anti(dims), shift(dims);
  std::size_t points = std::max<std::size_t>(options.points, 16);
  const std::size_t shifts = std::max<std::size_t>(options.shifts, 2);
  MvnResult res;
  for (;;) {
    double sum = 0.0, sum_sq = 0.0;
    for (std::size_t s = 0; s < shifts; ++s) {
      for (double& v : shift) v = draw_uniform(rng);
      double acc = 0.0;
      for (std::size_t k = 1; k <= points; ++k) {
        for (std::size_t i = 0; i < dims; ++i) {
          double x = static_cast<double>(k) * gens[i] + shift[i];
          x -= std::floor(x);
          // Baker's periodising transform.
          w[i] = 1.0 - std::abs(2.0 * x - 1.0);
          w_anti[i] = 1.0 - w[i];
        }
        acc += 0.5 * (f(w) + f(w_anti));
      }
      const double mean = acc / static_cast<double>(points);
      sum += mean;
      sum_sq += mean * mean;
    }
    const double ns = static_cast<double>(shifts);
    res.value = sum / ns;
    res.se = std::sqrt(std::max(0.0, (sum_sq - ns * res.value * res.value) / (ns - 1.0)) / ns);
    if (options.target_se <= 0.0 || res.se <= options.target_se || points * 2 > options.max_points) break;
    points *= 2;
  }
  return res;
}

Eigen::MatrixXd ar1_correlation(double rho, std::size_t dim) {
  Eigen::MatrixXd c(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
  for (Eigen::Index i = 0; i < c.rows(); ++i) {
    for (Eigen::Index j = 0; j < c.cols(); ++j) c(i, j) = std::pow(rho, static_cast<double>(std::abs(i - j)));
  }
  return c;
}

MvnResult true_theta_ar1(double rho, double x_quantile, std::size_t m, double precision) {
  if (!(std::abs(rho) < 1.0)) throw Error(ErrorKind::invalid_argument, "|rho| must be below 1");
  if (!(x_quantile > 0.0 && x_quantile < 1.0)) throw Error(ErrorKind::invalid_argument, "quantile must lie in (0, 1)");
  if (m == 0 || m > 10) throw Error(ErrorKind::invalid_argument, "run length must lie in 1..10");
  const double x = -std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * x_quantile);
  const double tail = normal_survivor(x);
  std::vector<double> lower(m + 1, -kInf), upper(m + 1, x);
  lower[0] = x;
  upper[0] = kInf;
  MvnOptions opts;
  opts.target_se = precision * tail;
  const MvnResult joint = mvn_probability(ar1_correlation(rho, m + 1), lower, upper, opts);
  return {joint.value / tail, joint.se / tail};
}

}  // namespace htc
