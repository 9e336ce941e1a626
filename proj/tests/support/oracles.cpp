#include "oracles.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/beta.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <cmath>
#include <limits>
#include <numbers>

namespace htc::oracle {

double normal_pdf(double x, double mean, double variance) {
  return std::exp(-0.5 * (x - mean) * (x - mean) / variance) / std::sqrt(2.0 * std::numbers::pi * variance);
}

double gamma_pdf(double x, double shape, double scale) {
  if (x <= 0.0) return 0.0;
  return std::exp((shape - 1.0) * std::log(x) - x / scale - std::lgamma(shape) - shape * std::log(scale));
}

double inv_gamma_pdf(double x, double shape, double scale) {
  if (x <= 0.0) return 0.0;
  return std::exp(shape * std::log(scale) - std::lgamma(shape) - (shape + 1.0) * std::log(x) - scale / x);
}

double beta_pdf(double x, double a, double b) {
  if (x <= 0.0 || x >= 1.0) return 0.0;
  return std::exp((a - 1.0) * std::log(x) + (b - 1.0) * std::log1p(-x) - std::log(boost::math::beta(a, b)));
}

double joint_log_density(const LagData& data, const MixtureState& s, const Priors& priors) {
  const std::size_t n_comp = s.breaks.size() + 1;
  // Weights rebuilt directly from the breaks.
  std::vector<double> w(n_comp);
  double rest = 1.0;
  for (std::size_t k = 0; k + 1 < n_comp; ++k) {
    w[k] = s.breaks[k] * rest;
    rest *= 1.0 - s.breaks[k];
  }
  w[n_comp - 1] = rest;

  double lp = 0.0;
  for (Eigen::Index i = 0; i < data.y0.size(); ++i) {
    const auto k = static_cast<Eigen::Index>(s.c[static_cast<std::size_t>(i)]);
    lp += std::log(w[static_cast<std::size_t>(k)]);
    for (Eigen::Index j = 0; j < data.lags.cols(); ++j) {
      const auto jj = static_cast<std::size_t>(j);
      const double y = data.y0[i];
      const double scale = std::pow(y, s.ht.beta[jj]);
      // Density of the lagged value itself: mean alpha y + y^beta mu, sd y^beta psi.
      const double mean = s.ht.alpha[jj] * y + scale * s.mu(k, j);
      const double var = scale * scale * s.psi_sq(k, j);
      lp += std::log(normal_pdf(data.lags(i, j), mean, var));
    }
  }
  for (Eigen::Index k = 0; k < s.mu.rows(); ++k) {
    for (Eigen::Index j = 0; j < s.mu.cols(); ++j) {
      const auto jj = static_cast<std::size_t>(j);
      lp += std::log(normal_pdf(s.mu(k, j), 0.0, priors.psi_mu_sq[jj]));
      lp += std::log(inv_gamma_pdf(s.psi_sq(k, j), priors.nu1[jj], priors.nu2[jj]));
    }
  }
  for (double v : s.breaks) lp += std::log(beta_pdf(v, 1.0, s.gamma));
  lp += std::log(gamma_pdf(s.gamma, priors.eta1, priors.eta2));
  if (s.gamma < priors.gamma_floor) lp = -std::numeric_limits<double>::infinity();
  return lp;
}

std::function<double(double)> normalised_density(const std::function<double(double)>& log_f, double lo, double hi,
                                                 double ref) {
  const double top = log_f(ref);
  auto f = [=](double x) { return std::exp(log_f(x) - top); };
  const double z = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, lo, hi, 30, 1e-14);
  return [=](double x) { return f(x) / z; };
}

double bivariate_upper(double x, double rho) {
  const double s = std::sqrt(1.0 - rho * rho);
  auto f = [=](double t) {
    return normal_pdf(t, 0.0, 1.0) * 0.5 * std::erfc((x - rho * t) / (s * std::numbers::sqrt2));
  };
  return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
      f, x, std::numeric_limits<double>::infinity(), 25, 1e-15);
}

double runs_brute_force(const std::vector<double>& values, double x, std::size_t m) {
  double num = 0.0, den = 0.0;
  for (std::size_t t = 0; t + m < values.size(); ++t) {
    if (!(values[t] > x)) continue;
    den += 1.0;
    std::size_t below = 0;
    for (std::size_t j = 1; j <= m; ++j) below += values[t + j] <= x ? 1 : 0;
    if (below == m) num += 1.0;
  }
  return num / den;
}

}  // namespace htc::oracle
