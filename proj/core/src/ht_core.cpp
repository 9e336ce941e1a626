#include "htc/ht_core.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "htc/error.hpp"

namespace htc {

bool HtParams::in_bounds() const {
  if (alpha.size() != beta.size()) return false;
  for (std::size_t j = 0; j < alpha.size(); ++j) {
    if (!(alpha[j] >= 0.0 && alpha[j] <= 1.0 && beta[j] >= 0.0 && beta[j] <= 1.0)) return false;
  }
  return true;
}

std::string to_string(TieKind kind) {
  switch (kind) {
    case TieKind::free: return "free";
    case TieKind::markov_geometric: return "markov_geometric";
    case TieKind::markov_beta_power: return "markov_beta_power";
  }
  return "free";
}

TieKind parse_tie_kind(const std::string& text) {
  if (text == "free") return TieKind::free;
  if (text == "markov_geometric") return TieKind::markov_geometric;
  if (text == "markov_beta_power") return TieKind::markov_beta_power;
  throw Error(ErrorKind::config, "unknown tie structure '" + text + "'");
}

std::size_t TieStructure::free_count() const {
  switch (kind) {
    case TieKind::free: return 2 * lags;
    case TieKind::markov_geometric: return 2;
    case TieKind::markov_beta_power: return 1;
  }
  return 0;
}

HtParams TieStructure::expand(std::span<const double> free) const {
  if (free.size() != free_count()) throw Error(ErrorKind::invalid_argument, "wrong number of free parameters");
  HtParams p;
  p.alpha.resize(lags);
  p.beta.resize(lags);
  for (std::size_t j = 0; j < lags; ++j) {
    const double power = static_cast<double>(j + 1);
    switch (kind) {
      case TieKind::free:
        p.alpha[j] = free[j];
        p.beta[j] = free[lags + j];
        break;
      case TieKind::markov_geometric:
        p.alpha[j] = std::pow(free[0], power);
        p.beta[j] = free[1];
        break;
      case TieKind::markov_beta_power:
        p.alpha[j] = 0.0;
        p.beta[j] = std::pow(free[0], power);
        break;
    }
  }
  return p;
}

std::vector<double> TieStructure::collapse(const HtParams& params) const {
  if (params.lags() != lags) throw Error(ErrorKind::invalid_argument, "parameter vector has the wrong lag count");
  switch (kind) {
    case TieKind::free: {
      std::vector<double> out(params.alpha);
      out.insert(out.end(), params.beta.begin(), params.beta.end());
      return out;
    }
    case TieKind::markov_geometric: return {params.alpha[0], params.beta[0]};
    case TieKind::markov_beta_power: return {params.beta[0]};
  }
  return {};
}

std::string TieStructure::parameter_name(std::size_t index) const {
  switch (kind) {
    case TieKind::free:
      return (index < lags ? "alpha_" + std::to_string(index + 1) : "beta_" + std::to_string(index - lags + 1));
    case TieKind::markov_geometric: return index == 0 ? "alpha" : "beta";
    case TieKind::markov_beta_power: return "beta";
  }
  return "p" + std::to_string(index);
}

LagData make_lag_data(const Eigen::VectorXd& y0, const Eigen::MatrixXd& lags, double u) {
  if (y0.size() != lags.rows()) throw Error(ErrorKind::invalid_argument, "y0 and lag matrix row counts differ");
  std::vector<Eigen::Index> keep;
  for (Eigen::Index i = 0; i < y0.size(); ++i) {
    if (!(y0[i] > u) || !lags.row(i).allFinite()) continue;
    keep.push_back(i);
  }
  if (keep.empty()) throw Error(ErrorKind::no_exceedances, "no complete exceedance rows above the threshold");
  LagData d;
  d.u = u;
  d.y0.resize(static_cast<Eigen::Index>(keep.size()));
  d.lags.resize(static_cast<Eigen::Index>(keep.size()), lags.cols());
  for (std::size_t r = 0; r < keep.size(); ++r) {
    d.y0[static_cast<Eigen::Index>(r)] = y0[keep[r]];
    d.lags.row(static_cast<Eigen::Index>(r)) = lags.row(keep[r]);
  }
  return d;
}

LagData make_lag_data(const TimeSeries& series, const MarginalModel& marginal, double dependence_quantile,
                      std::size_t m) {
  if (m == 0) throw Error(ErrorKind::invalid_argument, "need at least one lag");
  std::vector<double> sorted = series.values;
  std::sort(sorted.begin(), sorted.end());
  const double threshold = empirical_quantile(sorted, dependence_quantile);
  const double u = marginal.to_laplace(threshold);
  if (!(u > 0.0)) throw Error(ErrorKind::invalid_argument, "dependence threshold must lie above the median");

  std::vector<double> laplace(series.size());
  for (std::size_t t = 0; t < series.size(); ++t) laplace[t] = marginal.to_laplace(series.values[t]);

  std::vector<std::size_t> rows;
  for (std::size_t t = 0; t < series.size(); ++t) {
    if (laplace[t] > u && series.window_within(t, m)) rows.push_back(t);
  }
  Eigen::VectorXd y0(static_cast<Eigen::Index>(rows.size()));
  Eigen::MatrixXd lags(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(m));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const auto i = static_cast<Eigen::Index>(r);
    y0[i] = laplace[rows[r]];
    for (std::size_t j = 0; j < m; ++j) lags(i, static_cast<Eigen::Index>(j)) = laplace[rows[r] + j + 1];
  }
  return make_lag_data(y0, lags, u);
}

Eigen::MatrixXd residuals(const LagData& data, const HtParams& params) {
  const auto n = data.lags.rows();
  const auto m = data.lags.cols();
  Eigen::MatrixXd z(n, m);
  for (Eigen::Index j = 0; j < m; ++j) {
    const double a = params.alpha[static_cast<std::size_t>(j)];
    const double b = params.beta[static_cast<std::size_t>(j)];
    for (Eigen::Index i = 0; i < n; ++i) {
      const double y = data.y0[i];
      z(i, j) = (data.lags(i, j) - a * y) / std::pow(y, b);
    }
  }
  return z;
}

Eigen::VectorXd z_of_level(double x, double y, const HtParams& params) {
  Eigen::VectorXd z(static_cast<Eigen::Index>(params.lags()));
  for (std::size_t j = 0; j < params.lags(); ++j) {
    z[static_cast<Eigen::Index>(j)] = (x - params.alpha[j] * y) / std::pow(y, params.beta[j]);
  }
  return z;
}

ResidualEnvelope residual_envelope(const LagData& data, const Eigen::MatrixXd& fitted_residuals) {
  const auto m = static_cast<std::size_t>(data.lags.cols());
  ResidualEnvelope env;
  env.z_min.resize(m);
  env.z_max.resize(m);
  env.dependent_min.resize(m);
  env.dependent_max.resize(m);
  for (std::size_t j = 0; j < m; ++j) {
    const auto col = static_cast<Eigen::Index>(j);
    env.z_min[j] = fitted_residuals.col(col).minCoeff();
    env.z_max[j] = fitted_residuals.col(col).maxCoeff();
    const Eigen::VectorXd dep = data.lags.col(col) - data.y0;
    env.dependent_min[j] = dep.minCoeff();
    env.dependent_max[j] = dep.maxCoeff();
  }
  return env;
}

double kpt_reference_level(const LagData& data) { return data.y0.maxCoeff() + 1.0; }

bool kpt_lag_feasible(double a, double b, double z, double dep, double v) {
  // D(x) = x + dep - (a x + x^b z) must stay >= 0 on [v, inf).
  constexpr double kTol = 1e-12;
  const double vb1 = std::pow(v, b - 1.0);
  const double slope_limit = 1.0 - b * z * vb1;  // D'(v) >= 0  <=>  a <= slope_limit
  const double level_limit = 1.0 - vb1 * z + dep / v;  // D(v) >= 0  <=>  a <= level_limit
  const double scale = 1.0 + std::abs(z) + std::abs(dep) / v;
  if (a > 1.0 + kTol) return false;
  const bool increasing = a <= std::min(slope_limit, level_limit) + kTol * scale;
  if (increasing) return true;
  // D decreasing at v: it has a single interior minimum, which must be nonnegative.
  if (!(a > slope_limit) || b <= 0.0 || z <= 0.0 || a >= 1.0 || b >= 1.0) return false;
  const double expo = 1.0 / (1.0 - b);
  const double minimum = (1.0 - 1.0 / b) * std::pow(b * z, expo) * std::pow(1.0 - a, -b * expo) + dep;
  return std::isfinite(minimum) && minimum > 0.0;
}

bool kpt_feasible(const HtParams& params, const ResidualEnvelope& envelope, const KptSettings& settings) {
  if (!settings.enabled) return true;
  for (std::size_t j = 0; j < params.lags(); ++j) {
    if (!kpt_lag_feasible(params.alpha[j], params.beta[j], envelope.z_min[j], envelope.dependent_min[j], settings.v))
      return false;
    if (!kpt_lag_feasible(params.alpha[j], params.beta[j], envelope.z_max[j], envelope.dependent_max[j], settings.v))
      return false;
  }
  return true;
}

bool kpt_feasible(const HtParams& params, const LagData& data, const KptSettings& settings) {
  if (!settings.enabled) return true;
  return kpt_feasible(params, residual_envelope(data, residuals(data, params)), settings);
}

}  // namespace htc
