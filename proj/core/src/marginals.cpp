#include "htc/marginals.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "htc/error.hpp"

namespace htc {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// log1p(s)/s and its derivative, with series near s = 0.
long double log1p_ratio(long double s) {
  if (std::fabs(s) < 1e-4L) return 1.0L - s / 2.0L + s * s / 3.0L - s * s * s / 4.0L;
  return std::log1p(s) / s;
}

long double log1p_ratio_derivative(long double s) {
  if (std::fabs(s) < 1e-4L) return -0.5L + 2.0L * s / 3.0L - 0.75L * s * s + 0.8L * s * s * s;
  return (s / (1.0L + s) - std::log1p(s)) / (s * s);
}

struct GpdEval {
  double log_lik = -kInf;
  double d_scale = 0.0;
  double d_shape = 0.0;
};

GpdEval evaluate(double scale, double shape, std::span<const double> excess) {
  GpdEval out;
  if (!(scale > 0.0)) return out;
  long double ll = 0.0L, ds = 0.0L, dx = 0.0L;
  const long double sigma = scale;
  const long double xi = shape;
  for (double y : excess) {
    const long double t = y / sigma;
    const long double s = xi * t;
    if (s <= -1.0L) return out;
    ll += -std::log(sigma) - std::log1p(s) - t * log1p_ratio(s);
    ds += (t - 1.0L) / (sigma * (1.0L + s));
    dx += -t / (1.0L + s) - t * t * log1p_ratio_derivative(s);
  }
  out.log_lik = static_cast<double>(ll);
  out.d_scale = static_cast<double>(ds);
  out.d_shape = static_cast<double>(dx);
  return out;
}

std::vector<double> excesses_above(std::span<const double> sample, double threshold) {
  std::vector<double> out;
  for (double x : sample) {
    if (x > threshold) out.push_back(x - threshold);
  }
  return out;
}

}  // namespace

double gpd_log_survivor(const GpdParams& p, double x) {
  const double excess = x - p.threshold;
  if (excess <= 0.0) return 0.0;
  if (std::abs(p.shape) < kGpdShapeZero) return -excess / p.scale;
  const double arg = p.shape * excess / p.scale;
  if (arg <= -1.0) return -kInf;
  return -std::log1p(arg) / p.shape;
}

double gpd_survivor(const GpdParams& p, double x) { return std::exp(gpd_log_survivor(p, x)); }

double gpd_quantile_from_log_survivor(const GpdParams& p, double log_survivor) {
  if (std::abs(p.shape) < kGpdShapeZero) return p.threshold - p.scale * log_survivor;
  return p.threshold + p.scale * std::expm1(-p.shape * log_survivor) / p.shape;
}

double gpd_log_likelihood(const GpdParams& p, std::span<const double> sample) {
  const auto excess = excesses_above(sample, p.threshold);
  return evaluate(p.scale, p.shape, excess).log_lik;
}

std::array<double, 2> gpd_score(const GpdParams& p, std::span<const double> sample) {
  const auto excess = excesses_above(sample, p.threshold);
  const auto e = evaluate(p.scale, p.shape, excess);
  return {e.d_scale, e.d_shape};
}

GpdParams gpd_pwm(std::span<const double> sample, double threshold) {
  auto excess = excesses_above(sample, threshold);
  std::sort(excess.begin(), excess.end());
  const auto n = static_cast<double>(excess.size());
  double a0 = 0.0, a1 = 0.0;
  for (std::size_t i = 0; i < excess.size(); ++i) {
    const double p = (static_cast<double>(i) + 0.65) / n;
    a0 += excess[i];
    a1 += (1.0 - p) * excess[i];
  }
  a0 /= n;
  a1 /= n;
  GpdParams out;
  out.threshold = threshold;
  out.scale = 2.0 * a0 * a1 / (a0 - 2.0 * a1);
  out.shape = 2.0 - a0 / (a0 - 2.0 * a1);
  if (!std::isfinite(out.scale) || out.scale <= 0.0) out.scale = a0;
  out.shape = std::clamp(out.shape, -0.5, 0.5);
  if (out.shape < 0.0) {
    const double ymax = excess.back();
    out.scale = std::max(out.scale, -out.shape * ymax * 1.05);
  }
  return out;
}

GpdParams fit_gpd(std::span<const double> sample, double threshold, const GpdFitOptions& options) {
  const auto excess = excesses_above(sample, threshold);
  if (excess.size() < options.min_exceedances) {
    throw Error(ErrorKind::too_few_points, "fit_gpd needs at least " + std::to_string(options.min_exceedances) +
                                               " exceedances, got " + std::to_string(excess.size()));
  }
  const GpdParams start = gpd_pwm(sample, threshold);
  constexpr double kShapeBound = 1.0 - 1e-9;

  // Damped Newton on (log scale, shape); Hessian by central differences of the analytic score.
  double log_scale = std::log(start.scale);
  double shape = start.shape;
  auto eval_at = [&](double ls, double xi) { return evaluate(std::exp(ls), xi, excess); };
  GpdEval cur = eval_at(log_scale, shape);
  if (!std::isfinite(cur.log_lik)) {
    shape = 0.0;
    cur = eval_at(log_scale, shape);
  }
  auto grad_norm = [](const GpdEval& e) { return std::hypot(e.d_scale, e.d_shape); };

  for (int iter = 0; iter < options.max_iterations; ++iter) {
    const double scale = std::exp(log_scale);
    const double g0 = scale * cur.d_scale;
    const double g1 = cur.d_shape;
    if (grad_norm(cur) < options.gradient_tolerance) break;

    const double h = 1e-5;
    const auto ep = eval_at(log_scale + h, shape);
    const auto em = eval_at(log_scale - h, shape);
    const auto fp = eval_at(log_scale, std::min(shape + h, kShapeBound));
    const auto fm = eval_at(log_scale, std::max(shape - h, -kShapeBound));
    double h00 = (std::exp(log_scale + h) * ep.d_scale - std::exp(log_scale - h) * em.d_scale) / (2 * h);
    double h11 = (fp.d_shape - fm.d_shape) / (std::min(shape + h, kShapeBound) - std::max(shape - h, -kShapeBound));
    double h01 = 0.5 * ((fp.d_scale - fm.d_scale) * scale /
                            (std::min(shape + h, kShapeBound) - std::max(shape - h, -kShapeBound)) +
                        (ep.d_shape - em.d_shape) / (2 * h));

    double step0, step1;
    const double det = h00 * h11 - h01 * h01;
    const bool finite_hessian = std::isfinite(h00) && std::isfinite(h11) && std::isfinite(h01);
    if (finite_hessian && h00 < 0.0 && det > 0.0) {
      step0 = -(h11 * g0 - h01 * g1) / det;
      step1 = -(-h01 * g0 + h00 * g1) / det;
    } else {
      const double scale_step = 0.1 / std::max(1.0, std::hypot(g0, g1));
      step0 = scale_step * g0;
      step1 = scale_step * g1;
    }

    double t = 1.0;
    bool moved = false;
    for (int ls = 0; ls < 60; ++ls, t *= 0.5) {
      const double nl = log_scale + t * step0;
      const double nx = std::clamp(shape + t * step1, -kShapeBound, kShapeBound);
      const auto cand = eval_at(nl, nx);
      if (std::isfinite(cand.log_lik) && cand.log_lik >= cur.log_lik) {
        const bool progress = cand.log_lik > cur.log_lik || grad_norm(cand) < grad_norm(cur);
        if (!progress) continue;
        log_scale = nl;
        shape = nx;
        cur = cand;
        moved = true;
        break;
      }
    }
    if (!moved) break;
  }

  GpdParams fit{std::exp(log_scale), shape, threshold};
  const double norm = grad_norm(cur);
  const bool at_bound = std::abs(shape) >= kShapeBound - 1e-12;
  // Rounding in the summed score grows with the sample size.
  const double accept = 1e-6 * std::max(1.0, std::sqrt(static_cast<double>(excess.size())) / 10.0);
  if (!(norm < accept) && !at_bound) {
    throw ConvergenceError("GPD likelihood maximisation did not converge", {fit.scale, fit.shape}, norm);
  }
  return fit;
}

double laplace_cdf(double y) { return y < 0.0 ? 0.5 * std::exp(y) : 1.0 - 0.5 * std::exp(-y); }

double laplace_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) throw Error(ErrorKind::out_of_support, "Laplace quantile needs p in (0,1)");
  return p < 0.5 ? std::log(2.0 * p) : -std::log(2.0 * (1.0 - p));
}

double empirical_quantile(std::span<const double> sorted, double p) {
  if (sorted.empty()) throw Error(ErrorKind::invalid_argument, "empirical quantile of an empty sample");
  const double pos = p * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

MarginalModel::MarginalModel(std::vector<double> sample, GpdParams gpd) : sorted_(std::move(sample)), gpd_(gpd) {
  if (sorted_.empty()) throw Error(ErrorKind::invalid_argument, "marginal model needs a sample");
  std::sort(sorted_.begin(), sorted_.end());
  tail_fraction_ = 1.0 - empirical_cdf(gpd_.threshold);
  log_tail_fraction_ = std::log(tail_fraction_);
}

double MarginalModel::empirical_cdf(double x) const {
  const auto rank = std::upper_bound(sorted_.begin(), sorted_.end(), x) - sorted_.begin();
  return static_cast<double>(rank) / static_cast<double>(sorted_.size() + 1);
}

double MarginalModel::cdf(double x) const {
  if (x < gpd_.threshold) return empirical_cdf(x);
  return 1.0 - tail_fraction_ * gpd_survivor(gpd_, x);
}

double MarginalModel::laplace_threshold() const { return -std::numbers::ln2 - log_tail_fraction_; }

double MarginalModel::to_laplace(double x) const {
  if (x >= gpd_.threshold) {
    const double log_surv = gpd_log_survivor(gpd_, x);
    if (!std::isfinite(log_surv)) {
      throw Error(ErrorKind::out_of_support, "value beyond the upper endpoint of the fitted tail");
    }
    return -std::numbers::ln2 - log_tail_fraction_ - log_surv;
  }
  const double p = empirical_cdf(x);
  if (p <= 0.0) throw Error(ErrorKind::out_of_support, "value below the sample minimum has CDF 0");
  return laplace_quantile(p);
}

double MarginalModel::from_laplace(double y) const {
  if (y >= laplace_threshold()) {
    const double log_surv = -y - std::numbers::ln2 - log_tail_fraction_;
    return gpd_quantile_from_log_survivor(gpd_, std::min(log_surv, 0.0));
  }
  const double p = laplace_cdf(y);
  const double pos = p * static_cast<double>(sorted_.size() + 1);  // 1-based rank position
  if (pos <= 1.0) return sorted_.front();
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  if (lo >= sorted_.size()) return sorted_.back();
  const double frac = pos - static_cast<double>(lo);
  return sorted_[lo - 1] + frac * (sorted_[lo] - sorted_[lo - 1]);
}

double MarginalModel::quantile(double p) const { return from_laplace(laplace_quantile(p)); }

MarginalModel fit_marginal(const TimeSeries& series, double threshold_quantile) {
  if (series.size() < 100) {
    throw Error(ErrorKind::too_few_points, "fit_marginal needs at least 100 observations");
  }
  if (!(threshold_quantile > 0.5 && threshold_quantile < 1.0)) {
    throw Error(ErrorKind::invalid_argument, "threshold quantile must lie in (0.5, 1)");
  }
  std::vector<double> sorted = series.values;
  std::sort(sorted.begin(), sorted.end());
  const double u = empirical_quantile(sorted, threshold_quantile);
  const GpdParams gpd = fit_gpd(sorted, u);
  return MarginalModel(std::move(sorted), gpd);
}

}  // namespace htc
