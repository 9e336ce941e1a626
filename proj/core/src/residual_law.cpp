#include "htc/residual_law.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "htc/error.hpp"

namespace htc {

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }
double normal_survivor(double x) { return 0.5 * std::erfc(x / std::numbers::sqrt2); }

double ResidualLaw::cdf(std::span<const double> z) const {
  const std::size_t p = dimension();
  double out = 0.0;
  prefix_cdf(z, std::span<const std::size_t>(&p, 1), std::span<double>(&out, 1));
  return out;
}

MixtureResidualLaw::MixtureResidualLaw(std::vector<double> weights, Eigen::MatrixXd means, Eigen::MatrixXd variances)
    : weights_(std::move(weights)), means_(std::move(means)) {
  if (static_cast<Eigen::Index>(weights_.size()) != means_.rows() || variances.rows() != means_.rows() ||
      variances.cols() != means_.cols()) {
    throw Error(ErrorKind::invalid_argument, "mixture weights, means and variances disagree in shape");
  }
  inv_sd_ = variances.cwiseMax(1e-12).cwiseSqrt().cwiseInverse();
  for (Eigen::Index k = 0; k < means_.rows(); ++k) {
    if (weights_[static_cast<std::size_t>(k)] > 0.0) active_.push_back(k);
  }
}

void MixtureResidualLaw::prefix_cdf(std::span<const double> z, std::span<const std::size_t> prefixes,
                                    std::span<double> out) const {
  std::fill(out.begin(), out.end(), 0.0);
  if (prefixes.empty()) return;
  const std::size_t deepest = prefixes.back();
  for (Eigen::Index k : active_) {
    const double w = weights_[static_cast<std::size_t>(k)];
    double prod = 1.0;
    std::size_t next = 0;
    for (std::size_t j = 0; j <= deepest; ++j) {
      while (next < prefixes.size() && prefixes[next] == j) {
        out[next] += w * prod;
        ++next;
      }
      if (j == deepest) break;
      const auto jj = static_cast<Eigen::Index>(j);
      prod *= normal_cdf((z[j] - means_(k, jj)) * inv_sd_(k, jj));
    }
  }
}

double MixtureResidualLaw::marginal_survivor(std::size_t j, double z) const {
  const auto jj = static_cast<Eigen::Index>(j);
  double s = 0.0;
  for (Eigen::Index k : active_) {
    s += weights_[static_cast<std::size_t>(k)] * normal_survivor((z - means_(k, jj)) * inv_sd_(k, jj));
  }
  return s;
}

EmpiricalResidualLaw::EmpiricalResidualLaw(Eigen::MatrixXd cloud) : cloud_(std::move(cloud)) {
  if (cloud_.rows() == 0) throw Error(ErrorKind::invalid_argument, "empty residual cloud");
  sorted_columns_.resize(static_cast<std::size_t>(cloud_.cols()));
  for (Eigen::Index j = 0; j < cloud_.cols(); ++j) {
    auto& col = sorted_columns_[static_cast<std::size_t>(j)];
    col.assign(cloud_.col(j).data(), cloud_.col(j).data() + cloud_.rows());
    std::sort(col.begin(), col.end());
  }
}

void EmpiricalResidualLaw::prefix_cdf(std::span<const double> z, std::span<const std::size_t> prefixes,
                                      std::span<double> out) const {
  const auto n = static_cast<double>(cloud_.rows());
  if (prefixes.size() == 1 && prefixes[0] <= 1) {
    if (prefixes[0] == 0) {
      out[0] = 1.0;
      return;
    }
    const auto& col = sorted_columns_[0];
    out[0] = static_cast<double>(std::upper_bound(col.begin(), col.end(), z[0]) - col.begin()) / n;
    return;
  }
  std::vector<std::size_t> counts(prefixes.size(), 0);
  const std::size_t deepest = prefixes.empty() ? 0 : prefixes.back();
  for (Eigen::Index i = 0; i < cloud_.rows(); ++i) {
    // Length of the leading run of coordinates with cloud <= z.
    std::size_t run = 0;
    while (run < deepest && cloud_(i, static_cast<Eigen::Index>(run)) <= z[run]) ++run;
    for (std::size_t p = 0; p < prefixes.size(); ++p) {
      if (prefixes[p] <= run) ++counts[p];
    }
  }
  for (std::size_t p = 0; p < prefixes.size(); ++p) out[p] = static_cast<double>(counts[p]) / n;
}

double EmpiricalResidualLaw::marginal_survivor(std::size_t j, double z) const {
  const auto& col = sorted_columns_[j];
  const auto above = col.end() - std::upper_bound(col.begin(), col.end(), z);
  return static_cast<double>(above) / static_cast<double>(col.size());
}

}  // namespace htc
