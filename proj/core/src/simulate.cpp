#include "htc/simulate.hpp"

#include <cmath>
#include <limits>
#include <numeric>

#include "htc/error.hpp"
#include "htc/rng.hpp"

namespace htc {

TimeSeries sim_ar1(const Ar1Spec& spec, std::uint64_t seed) {
  if (!(std::abs(spec.rho) < 1.0)) throw Error(ErrorKind::invalid_argument, "|rho| must be below 1");
  if (spec.n == 0) throw Error(ErrorKind::invalid_argument, "series length must be positive");
  Rng rng = make_stream(seed, 0);
  const double sd = std::sqrt(1.0 - spec.rho * spec.rho);
  std::vector<double> v(spec.n);
  v[0] = draw_normal(rng);
  for (std::size_t t = 1; t < spec.n; ++t) v[t] = spec.rho * v[t - 1] + sd * draw_normal(rng);
  if (spec.margins == Margins::exponential) {
    for (double& x : v) x = -std::log(normal_survivor(x));
  }
  return make_series(std::move(v));
}

void HtSimSpec::validate() const {
  if (!(alpha >= 0.0 && alpha <= 1.0 && beta >= 0.0 && beta <= 1.0)) {
    throw Error(ErrorKind::invalid_argument, "alpha and beta must lie in [0, 1]");
  }
  if (!(u > 0.0)) throw Error(ErrorKind::invalid_argument, "threshold must be positive");
  if (residual_mix.empty()) throw Error(ErrorKind::invalid_argument, "residual mixture is empty");
  double total = 0.0;
  for (const auto& c : residual_mix) {
    if (!(c.weight >= 0.0) || !(c.scale > 0.0)) throw Error(ErrorKind::invalid_argument, "bad mixture component");
    total += c.weight;
  }
  if (std::abs(total - 1.0) > 1e-9) throw Error(ErrorKind::invalid_argument, "mixture weights must sum to 1");
  if (n == 0) throw Error(ErrorKind::invalid_argument, "sample size must be positive");
}

HtSample sim_ht(const HtSimSpec& spec, std::uint64_t seed) {
  spec.validate();
  Rng rng = make_stream(seed, 0);
  const auto n = static_cast<Eigen::Index>(spec.n);
  HtSample s;
  s.x.resize(n);
  s.y.resize(n);
  s.z.resize(n);
  s.component.resize(spec.n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double x = spec.u + draw_exponential(rng);
    double pick = draw_uniform(rng);
    std::size_t k = 0;
    while (k + 1 < spec.residual_mix.size() && pick >= spec.residual_mix[k].weight) {
      pick -= spec.residual_mix[k].weight;
      ++k;
    }
    const auto& c = spec.residual_mix[k];
    const double e = c.family == ResidualFamily::gaussian ? draw_normal(rng)
                                                          : draw_exponential(rng) - draw_exponential(rng);
    const double z = c.location + c.scale * e;
    s.x[i] = x;
    s.z[i] = z;
    s.y[i] = spec.alpha * x + std::pow(x, spec.beta) * z;
    s.component[static_cast<std::size_t>(i)] = k;
  }
  return s;
}

LagData to_lag_data(const HtSample& sample, double u) {
  return make_lag_data(sample.x, Eigen::MatrixXd(sample.y), u);
}

std::pair<double, double> ht_truth_gaussian(double rho, std::size_t j) {
  if (!(std::abs(rho) < 1.0)) throw Error(ErrorKind::invalid_argument, "|rho| must be below 1");
  const double a = std::pow(rho, 2.0 * static_cast<double>(j));
  return {rho < 0.0 ? -a : a, 0.5};
}

GaussianResidualLaw::GaussianResidualLaw(Eigen::MatrixXd covariance) : cov_(std::move(covariance)) {
  if (cov_.rows() != cov_.cols() || cov_.rows() == 0) throw Error(ErrorKind::invalid_argument, "covariance must be square");
}

void GaussianResidualLaw::prefix_cdf(std::span<const double> z, std::span<const std::size_t> prefixes,
                                     std::span<double> out) const {
  for (std::size_t p = 0; p < prefixes.size(); ++p) {
    const std::size_t len = prefixes[p];
    if (len == 0) {
      out[p] = 1.0;
    } else if (len == 1) {
      out[p] = normal_cdf(z[0] / std::sqrt(cov_(0, 0)));
    } else {
      const auto l = static_cast<Eigen::Index>(len);
      std::vector<double> lower(len, -std::numeric_limits<double>::infinity());
      out[p] = mvn_probability(cov_.topLeftCorner(l, l), lower, z.first(len)).value;
    }
  }
}

double GaussianResidualLaw::marginal_survivor(std::size_t j, double z) const {
  const auto jj = static_cast<Eigen::Index>(j);
  return normal_survivor(z / std::sqrt(cov_(jj, jj)));
}

GaussianResidualLaw ar1_residual_law(double rho, std::size_t m) {
  const auto d = static_cast<Eigen::Index>(m);
  Eigen::MatrixXd cov(d, d);
  auto r2 = [&](Eigen::Index j) { return std::pow(rho, 2.0 * static_cast<double>(j + 1)); };
  for (Eigen::Index i = 0; i < d; ++i) {
    for (Eigen::Index j = i; j < d; ++j) {
      double corr = 1.0;
      if (j > i) {
        const double sign = std::pow(rho, static_cast<double>(i + j + 2)) < 0.0 ? -1.0 : 1.0;
        corr = sign * std::pow(std::abs(rho), static_cast<double>(j - i)) * std::sqrt((1.0 - r2(i)) / (1.0 - r2(j)));
      }
      cov(i, j) = cov(j, i) = 2.0 * corr * std::sqrt(r2(i) * (1.0 - r2(i)) * r2(j) * (1.0 - r2(j)));
    }
  }
  return GaussianResidualLaw(cov);
}

}  // namespace htc
