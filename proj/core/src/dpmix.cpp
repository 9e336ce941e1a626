#include "htc/dpmix.hpp"

#include <algorithm>
#include <boost/math/special_functions/gamma.hpp>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <spdlog/spdlog.h>

#include "htc/error.hpp"
#include "htc/stepwise.hpp"

namespace htc {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kVarianceFloor = 1e-12;
constexpr double kTargetAcceptance = 0.44;
const double kLog2Pi = std::log(2.0 * std::numbers::pi);

double draw_inv_gamma(Rng& rng, InvGammaParams p) { return p.scale / draw_gamma(rng, p.shape, 1.0); }

// x * log_y with the 0 * (-inf) = 0 convention.
double scaled_log(double x, double log_y) { return x == 0.0 ? 0.0 : x * log_y; }

std::size_t draw_categorical_log(std::span<double> log_w, Rng& rng) {
  const double top = *std::max_element(log_w.begin(), log_w.end());
  double total = 0.0;
  for (double& v : log_w) {
    v = std::exp(v - top);
    total += v;
  }
  const double target = draw_uniform(rng) * total;
  double acc = 0.0;
  for (std::size_t k = 0; k < log_w.size(); ++k) {
    acc += log_w[k];
    if (target < acc) return k;
  }
  // Rounding left target at the very top; take the last positive entry.
  for (std::size_t k = log_w.size(); k-- > 0;) {
    if (log_w[k] > 0.0) return k;
  }
  return 0;
}

// Per-component log w_k - 1/2 sum_j log psi_sq_jk and inverse variances, shared by all rows.
struct ComponentCache {
  std::vector<double> offset;
  Eigen::MatrixXd inv_var;

  explicit ComponentCache(const MixtureState& s) : offset(s.components()), inv_var(s.psi_sq.rows(), s.psi_sq.cols()) {
    for (Eigen::Index k = 0; k < s.psi_sq.rows(); ++k) {
      double o = s.log_w[static_cast<std::size_t>(k)];
      for (Eigen::Index j = 0; j < s.psi_sq.cols(); ++j) {
        const double v = std::max(s.psi_sq(k, j), kVarianceFloor);
        inv_var(k, j) = 1.0 / v;
        o -= 0.5 * std::log(v);
      }
      offset[static_cast<std::size_t>(k)] = o;
    }
  }

  void row_log_weights(const MixtureState& s, const Eigen::MatrixXd& resid, Eigen::Index i, std::span<double> out) const {
    for (Eigen::Index k = 0; k < s.mu.rows(); ++k) {
      const auto kk = static_cast<std::size_t>(k);
      if (offset[kk] == kNegInf) {
        out[kk] = kNegInf;
        continue;
      }
      double q = 0.0;
      for (Eigen::Index j = 0; j < s.mu.cols(); ++j) {
        const double d = resid(i, j) - s.mu(k, j);
        q += d * d * inv_var(k, j);
      }
      out[kk] = offset[kk] - 0.5 * q;
    }
  }
};

// Likelihood and KPT feasibility of a candidate (alpha, beta) given the
// current allocations and component parameters.
class HtEvaluator {
 public:
  HtEvaluator(const LagData& data, const KptSettings& kpt) : data_(data), kpt_(kpt) {
    const auto n = data.y0.size();
    const auto m = data.lags.cols();
    log_y_ = data.y0.array().log();
    dep_min_.assign(static_cast<std::size_t>(m), INFINITY);
    dep_max_.assign(static_cast<std::size_t>(m), -INFINITY);
    for (Eigen::Index j = 0; j < m; ++j) {
      for (Eigen::Index i = 0; i < n; ++i) {
        const double d = data.lags(i, j) - data.y0[i];
        dep_min_[static_cast<std::size_t>(j)] = std::min(dep_min_[static_cast<std::size_t>(j)], d);
        dep_max_[static_cast<std::size_t>(j)] = std::max(dep_max_[static_cast<std::size_t>(j)], d);
      }
    }
  }

  // -inf when out of bounds or infeasible.
  double log_likelihood(const MixtureState& s, const HtParams& ht) const {
    if (!ht.in_bounds()) return kNegInf;
    const auto n = data_.y0.size();
    const auto m = data_.lags.cols();
    double ll = 0.0;
    for (Eigen::Index j = 0; j < m; ++j) {
      const auto jj = static_cast<std::size_t>(j);
      const double a = ht.alpha[jj];
      const double b = ht.beta[jj];
      double z_min = INFINITY, z_max = -INFINITY;
      for (Eigen::Index i = 0; i < n; ++i) {
        const double y = data_.y0[i];
        const double z = (data_.lags(i, j) - a * y) * std::exp(-b * log_y_[i]);
        z_min = std::min(z_min, z);
        z_max = std::max(z_max, z);
        const auto k = static_cast<Eigen::Index>(s.c[static_cast<std::size_t>(i)]);
        const double v = std::max(s.psi_sq(k, j), kVarianceFloor);
        const double d = z - s.mu(k, j);
        ll += -b * log_y_[i] - 0.5 * (kLog2Pi + std::log(v) + d * d / v);
      }
      if (kpt_.enabled && (!kpt_lag_feasible(a, b, z_min, dep_min_[jj], kpt_.v) ||
                           !kpt_lag_feasible(a, b, z_max, dep_max_[jj], kpt_.v))) {
        return kNegInf;
      }
    }
    return ll;
  }

 private:
  const LagData& data_;
  KptSettings kpt_;
  Eigen::ArrayXd log_y_;
  std::vector<double> dep_min_, dep_max_;
};

double logit(double p) { return std::log(p) - std::log1p(-p); }
double inv_logit(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

Priors Priors::defaults(std::size_t lags) {
  Priors p;
  p.psi_mu_sq.assign(lags, 25.0);
  p.nu1.assign(lags, 2.0);
  p.nu2.assign(lags, 2.0);
  return p;
}

void Priors::validate(std::size_t lags) const {
  auto positive = [](const std::vector<double>& v) {
    return std::all_of(v.begin(), v.end(), [](double x) { return x > 0.0 && std::isfinite(x); });
  };
  if (!(eta1 > 0.0) || !(eta2 > 0.0)) throw Error(ErrorKind::config, "eta1 and eta2 must be positive");
  if (!(gamma_floor > 0.0)) throw Error(ErrorKind::config, "gamma floor must be positive");
  if (truncation < 2) throw Error(ErrorKind::config, "truncation level must be at least 2");
  if (psi_mu_sq.size() != lags || nu1.size() != lags || nu2.size() != lags) {
    throw Error(ErrorKind::config, "per-lag priors must have one entry per lag");
  }
  if (!positive(psi_mu_sq) || !positive(nu1) || !positive(nu2)) {
    throw Error(ErrorKind::config, "per-lag prior values must be positive");
  }
}

std::vector<std::size_t> MixtureState::counts() const {
  std::vector<std::size_t> n(components(), 0);
  for (auto k : c) ++n[k];
  return n;
}

std::size_t MixtureState::occupied() const {
  const auto n = counts();
  return static_cast<std::size_t>(std::count_if(n.begin(), n.end(), [](std::size_t x) { return x > 0; }));
}

void MixtureState::refresh_weights() {
  const std::size_t n_comp = breaks.size() + 1;
  log_w.resize(n_comp);
  w.resize(n_comp);
  double cum = 0.0;
  for (std::size_t k = 0; k + 1 < n_comp; ++k) {
    log_w[k] = log_breaks[k] + cum;
    cum += log1m_breaks[k];
  }
  log_w[n_comp - 1] = cum;
  for (std::size_t k = 0; k < n_comp; ++k) w[k] = std::exp(log_w[k]);
}

void check_state(const MixtureState& s, std::size_t rows, double gamma_floor) {
  const std::size_t n_comp = s.components();
  if (n_comp < 2) throw Error(ErrorKind::invalid_argument, "mixture needs at least two components");
  if (static_cast<std::size_t>(s.mu.rows()) != n_comp || s.psi_sq.rows() != s.mu.rows() ||
      s.psi_sq.cols() != s.mu.cols() || s.log_w.size() != n_comp) {
    throw Error(ErrorKind::invalid_argument, "mixture component arrays disagree in shape");
  }
  const double total = std::accumulate(s.w.begin(), s.w.end(), 0.0);
  if (std::abs(total - 1.0) > 1e-12) throw Error(ErrorKind::invalid_argument, "weights do not sum to one");
  if (!(s.psi_sq.array() > 0.0).all()) throw Error(ErrorKind::invalid_argument, "non-positive component variance");
  if (!s.mu.allFinite()) throw Error(ErrorKind::invalid_argument, "non-finite component mean");
  if (!(s.gamma >= gamma_floor)) throw Error(ErrorKind::invalid_argument, "gamma below its floor");
  if (s.c.size() != rows) throw Error(ErrorKind::invalid_argument, "allocation vector has the wrong length");
  for (auto k : s.c) {
    if (k >= n_comp) throw Error(ErrorKind::invalid_argument, "allocation outside the component range");
  }
  if (!s.ht.in_bounds()) throw Error(ErrorKind::invalid_argument, "alpha/beta out of bounds");
}

std::vector<double> stick_break(std::span<const double> breaks) {
  for (double v : breaks) {
    if (!(v >= 0.0 && v <= 1.0)) throw Error(ErrorKind::invalid_argument, "stick breaks must lie in [0, 1]");
  }
  std::vector<double> w(breaks.size() + 1);
  double rest = 1.0;
  for (std::size_t k = 0; k < breaks.size(); ++k) {
    w[k] = breaks[k] * rest;
    rest *= 1.0 - breaks[k];
  }
  w.back() = rest;
  return w;
}

double truncation_error_bound(double n, double gamma, double truncation) {
  return 4.0 * n * std::exp(-(truncation - 1.0) / gamma);
}

NormalParams mu_conditional(const MixtureState& s, const Eigen::MatrixXd& resid, const Priors& priors, std::size_t k,
                            std::size_t j) {
  const auto kk = static_cast<Eigen::Index>(k);
  const auto jj = static_cast<Eigen::Index>(j);
  double n_k = 0.0, sum = 0.0;
  for (std::size_t i = 0; i < s.c.size(); ++i) {
    if (s.c[i] != k) continue;
    n_k += 1.0;
    sum += resid(static_cast<Eigen::Index>(i), jj);
  }
  const double v = std::max(s.psi_sq(kk, jj), kVarianceFloor);
  const double var = 1.0 / (n_k / v + 1.0 / priors.psi_mu_sq[j]);
  return {var * sum / v, var};
}

InvGammaParams psi_sq_conditional(const MixtureState& s, const Eigen::MatrixXd& resid, const Priors& priors,
                                  std::size_t k, std::size_t j) {
  const auto kk = static_cast<Eigen::Index>(k);
  const auto jj = static_cast<Eigen::Index>(j);
  double n_k = 0.0, ss = 0.0;
  for (std::size_t i = 0; i < s.c.size(); ++i) {
    if (s.c[i] != k) continue;
    n_k += 1.0;
    const double d = resid(static_cast<Eigen::Index>(i), jj) - s.mu(kk, jj);
    ss += d * d;
  }
  return {0.5 * n_k + priors.nu1[j], 0.5 * ss + priors.nu2[j]};
}

std::vector<double> allocation_probabilities(const MixtureState& s, const Eigen::MatrixXd& resid, std::size_t i) {
  ComponentCache cache(s);
  std::vector<double> lw(s.components());
  cache.row_log_weights(s, resid, static_cast<Eigen::Index>(i), lw);
  const double top = *std::max_element(lw.begin(), lw.end());
  double total = 0.0;
  for (double& v : lw) {
    v = std::exp(v - top);
    total += v;
  }
  for (double& v : lw) v /= total;
  return lw;
}

std::vector<BetaParams> weight_conditional(std::span<const std::size_t> counts, double gamma) {
  std::vector<BetaParams> out(counts.size() - 1);
  double tail = 0.0;
  for (std::size_t k = counts.size() - 1; k-- > 0;) {
    tail += static_cast<double>(counts[k + 1]);
    out[k] = {1.0 + static_cast<double>(counts[k]), gamma + tail};
  }
  return out;
}

GammaParams gamma_conditional(const MixtureState& s, const Priors& priors) {
  const double n_comp = static_cast<double>(s.components());
  const double log_w_last = s.log_w.back();
  return {n_comp + priors.eta1 - 1.0, priors.eta2 / (1.0 - priors.eta2 * log_w_last)};
}

TruncatedDraw draw_truncated_gamma(Rng& rng, GammaParams p, double floor) {
  if (!(p.scale > 0.0)) return {floor, 0};
  const double x0 = floor / p.scale;
  const double survive = boost::math::gamma_q(p.shape, x0);
  if (survive >= 1e-3) {
    for (std::size_t attempts = 1;; ++attempts) {
      const double g = draw_gamma(rng, p.shape, p.scale);
      if (g >= floor) return {g, attempts};
    }
  }
  if (!(survive > 0.0)) return {floor, 0};
  const double q = draw_uniform(rng) * survive;
  return {std::max(floor, p.scale * boost::math::gamma_q_inv(p.shape, q)), 0};
}

void gibbs_mu(MixtureState& s, const LagData& data, const Priors& priors, Rng& rng) {
  const Eigen::MatrixXd resid = residuals(data, s.ht);
  const auto n_comp = s.mu.rows();
  const auto m = s.mu.cols();
  Eigen::VectorXd n_k = Eigen::VectorXd::Zero(n_comp);
  Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(n_comp, m);
  for (std::size_t i = 0; i < s.c.size(); ++i) {
    const auto k = static_cast<Eigen::Index>(s.c[i]);
    n_k[k] += 1.0;
    sums.row(k) += resid.row(static_cast<Eigen::Index>(i));
  }
  for (Eigen::Index k = 0; k < n_comp; ++k) {
    for (Eigen::Index j = 0; j < m; ++j) {
      const double v = std::max(s.psi_sq(k, j), kVarianceFloor);
      const double var = 1.0 / (n_k[k] / v + 1.0 / priors.psi_mu_sq[static_cast<std::size_t>(j)]);
      s.mu(k, j) = var * sums(k, j) / v + std::sqrt(var) * draw_normal(rng);
    }
  }
}

void gibbs_psi_sq(MixtureState& s, const LagData& data, const Priors& priors, Rng& rng) {
  const Eigen::MatrixXd resid = residuals(data, s.ht);
  const auto n_comp = s.mu.rows();
  const auto m = s.mu.cols();
  Eigen::VectorXd n_k = Eigen::VectorXd::Zero(n_comp);
  Eigen::MatrixXd ss = Eigen::MatrixXd::Zero(n_comp, m);
  for (std::size_t i = 0; i < s.c.size(); ++i) {
    const auto k = static_cast<Eigen::Index>(s.c[i]);
    n_k[k] += 1.0;
    ss.row(k) += (resid.row(static_cast<Eigen::Index>(i)) - s.mu.row(k)).array().square().matrix();
  }
  for (Eigen::Index k = 0; k < n_comp; ++k) {
    for (Eigen::Index j = 0; j < m; ++j) {
      const auto jj = static_cast<std::size_t>(j);
      const InvGammaParams p{0.5 * n_k[k] + priors.nu1[jj], 0.5 * ss(k, j) + priors.nu2[jj]};
      s.psi_sq(k, j) = std::max(draw_inv_gamma(rng, p), kVarianceFloor);
    }
  }
}

void gibbs_alloc(MixtureState& s, const LagData& data, Rng& rng) {
  const Eigen::MatrixXd resid = residuals(data, s.ht);
  ComponentCache cache(s);
  std::vector<double> lw(s.components());
  for (std::size_t i = 0; i < s.c.size(); ++i) {
    cache.row_log_weights(s, resid, static_cast<Eigen::Index>(i), lw);
    s.c[i] = static_cast<std::uint32_t>(draw_categorical_log(lw, rng));
  }
}

void gibbs_weights(MixtureState& s, Rng& rng) {
  const auto params = weight_conditional(s.counts(), s.gamma);
  for (std::size_t k = 0; k < params.size(); ++k) {
    const BetaDraw d = draw_beta(rng, params[k].a, params[k].b);
    s.breaks[k] = d.value;
    s.log_breaks[k] = d.log_value;
    s.log1m_breaks[k] = d.log_complement;
  }
  s.refresh_weights();
}

void gibbs_gamma(MixtureState& s, const Priors& priors, Rng& rng) {
  s.gamma = draw_truncated_gamma(rng, gamma_conditional(s, priors), priors.gamma_floor).value;
}

double ht_log_likelihood(const LagData& data, const MixtureState& s, const HtParams& ht) {
  return HtEvaluator(data, KptSettings{false, 0.0}).log_likelihood(s, ht);
}

AdaptState AdaptState::initial(std::size_t free_count, double scale) {
  AdaptState a;
  a.log_scale.assign(free_count, std::log(scale));
  a.proposed.assign(free_count, 0);
  a.accepted.assign(free_count, 0);
  return a;
}

void mh_alpha_beta(MixtureState& s, const LagData& data, const TieStructure& tie, const KptSettings& kpt,
                   AdaptState& adapt, Rng& rng) {
  const HtEvaluator eval(data, kpt);
  std::vector<double> free = tie.collapse(s.ht);
  double current = eval.log_likelihood(s, s.ht);
  ++adapt.step;
  const double gain = std::pow(static_cast<double>(adapt.step), -0.6);
  for (std::size_t p = 0; p < free.size(); ++p) {
    const double f = free[p];
    const double proposal = inv_logit(logit(f) + std::exp(adapt.log_scale[p]) * draw_normal(rng));
    ++adapt.proposed[p];
    double accept_prob = 0.0;
    HtParams next;
    double next_ll = kNegInf;
    if (proposal > 0.0 && proposal < 1.0) {
      std::vector<double> trial = free;
      trial[p] = proposal;
      next = tie.expand(trial);
      next_ll = eval.log_likelihood(s, next);
      if (std::isfinite(next_ll)) {
        const double log_ratio = next_ll - current + std::log(proposal) + std::log1p(-proposal) - std::log(f) -
                                 std::log1p(-f);
        accept_prob = log_ratio >= 0.0 ? 1.0 : std::exp(log_ratio);
      }
    }
    const bool accept = accept_prob > 0.0 && (accept_prob >= 1.0 || draw_uniform(rng) < accept_prob);
    if (accept) {
      free[p] = proposal;
      s.ht = std::move(next);
      current = next_ll;
      ++adapt.accepted[p];
    }
    if (!adapt.frozen) adapt.log_scale[p] += gain * (accept_prob - kTargetAcceptance);
  }
}

double label_swap_log_ratio(const MixtureState& s, LabelMove move, std::size_t k) {
  const auto n = s.counts();
  const double nk = static_cast<double>(n[k]);
  const double nk1 = static_cast<double>(n[k + 1]);
  if (move == LabelMove::swap_parameters) {
    const double diff = nk1 - nk;
    if (diff == 0.0) return 0.0;
    return diff * (s.log_w[k] - s.log_w[k + 1]);
  }
  return scaled_log(nk, s.log1m_breaks[k + 1]) - scaled_log(nk1, s.log1m_breaks[k]);
}

void apply_label_swap(MixtureState& s, LabelMove move, std::size_t k) {
  const auto a = static_cast<Eigen::Index>(k);
  s.mu.row(a).swap(s.mu.row(a + 1));
  s.psi_sq.row(a).swap(s.psi_sq.row(a + 1));
  const auto lo = static_cast<std::uint32_t>(k);
  for (auto& ci : s.c) {
    if (ci == lo) {
      ci = lo + 1;
    } else if (ci == lo + 1) {
      ci = lo;
    }
  }
  if (move == LabelMove::swap_with_breaks) {
    std::swap(s.breaks[k], s.breaks[k + 1]);
    std::swap(s.log_breaks[k], s.log_breaks[k + 1]);
    std::swap(s.log1m_breaks[k], s.log1m_breaks[k + 1]);
    s.refresh_weights();
  }
}

void label_switch(MixtureState& s, Rng& rng, LabelStats* stats) {
  const std::size_t n_comp = s.components();
  if (n_comp < 2) return;
  LabelMove move = LabelMove::swap_parameters;
  if (n_comp >= 3 && draw_uniform(rng) < 0.5) move = LabelMove::swap_with_breaks;
  const std::size_t pairs = move == LabelMove::swap_parameters ? n_comp - 1 : n_comp - 2;
  const std::size_t k = std::min(pairs - 1, static_cast<std::size_t>(draw_uniform(rng) * static_cast<double>(pairs)));
  const double log_ratio = label_swap_log_ratio(s, move, k);
  if (stats != nullptr) ++stats->proposed;
  if (log_ratio >= 0.0 || std::log(draw_uniform(rng)) < log_ratio) {
    apply_label_swap(s, move, k);
    if (stats != nullptr) ++stats->accepted;
  }
}

double log_posterior(const LagData& data, const MixtureState& s, const Priors& priors) {
  double lp = ht_log_likelihood(data, s, s.ht);
  for (auto k : s.c) lp += s.log_w[k];
  for (Eigen::Index k = 0; k < s.mu.rows(); ++k) {
    for (Eigen::Index j = 0; j < s.mu.cols(); ++j) {
      const auto jj = static_cast<std::size_t>(j);
      const double mu = s.mu(k, j);
      const double v = s.psi_sq(k, j);
      lp += -0.5 * (kLog2Pi + std::log(priors.psi_mu_sq[jj]) + mu * mu / priors.psi_mu_sq[jj]);
      lp += priors.nu1[jj] * std::log(priors.nu2[jj]) - std::lgamma(priors.nu1[jj]) -
            (priors.nu1[jj] + 1.0) * std::log(v) - priors.nu2[jj] / v;
    }
  }
  for (double l1m : s.log1m_breaks) lp += std::log(s.gamma) + scaled_log(s.gamma - 1.0, l1m);
  lp += (priors.eta1 - 1.0) * std::log(s.gamma) - s.gamma / priors.eta2 - std::lgamma(priors.eta1) -
        priors.eta1 * std::log(priors.eta2);
  return lp;
}

void gibbs_sweep(MixtureState& s, const LagData& data, const Priors& priors, const TieStructure& tie,
                 const KptSettings& kpt, AdaptState& adapt, Rng& rng, LabelStats* labels) {
  gibbs_alloc(s, data, rng);
  gibbs_weights(s, rng);
  gibbs_mu(s, data, priors, rng);
  gibbs_psi_sq(s, data, priors, rng);
  gibbs_gamma(s, priors, rng);
  mh_alpha_beta(s, data, tie, kpt, adapt, rng);
  label_switch(s, rng, labels);
}

MixtureState prior_state(const HtParams& ht, std::size_t rows, const Priors& priors, Rng& rng) {
  const std::size_t m = ht.lags();
  priors.validate(m);
  const std::size_t n_comp = priors.truncation;
  MixtureState s;
  s.ht = ht;
  s.gamma = draw_truncated_gamma(rng, {priors.eta1, priors.eta2}, priors.gamma_floor).value;
  s.breaks.resize(n_comp - 1);
  s.log_breaks.resize(n_comp - 1);
  s.log1m_breaks.resize(n_comp - 1);
  for (std::size_t k = 0; k + 1 < n_comp; ++k) {
    const BetaDraw d = draw_beta(rng, 1.0, s.gamma);
    s.breaks[k] = d.value;
    s.log_breaks[k] = d.log_value;
    s.log1m_breaks[k] = d.log_complement;
  }
  s.refresh_weights();
  s.mu.resize(static_cast<Eigen::Index>(n_comp), static_cast<Eigen::Index>(m));
  s.psi_sq.resize(static_cast<Eigen::Index>(n_comp), static_cast<Eigen::Index>(m));
  for (Eigen::Index k = 0; k < s.mu.rows(); ++k) {
    for (Eigen::Index j = 0; j < s.mu.cols(); ++j) {
      const auto jj = static_cast<std::size_t>(j);
      s.mu(k, j) = std::sqrt(priors.psi_mu_sq[jj]) * draw_normal(rng);
      s.psi_sq(k, j) = std::max(draw_inv_gamma(rng, {priors.nu1[jj], priors.nu2[jj]}), kVarianceFloor);
    }
  }
  s.c.resize(rows);
  std::vector<double> lw(n_comp);
  for (auto& ci : s.c) {
    std::copy(s.log_w.begin(), s.log_w.end(), lw.begin());
    ci = static_cast<std::uint32_t>(draw_categorical_log(lw, rng));
  }
  return s;
}

namespace {

HtParams starting_point(const LagData& data, const TieStructure& tie, const ChainConfig& config,
                        const KptSettings& kpt) {
  std::vector<std::vector<double>> candidates;
  auto clamp_free = [](std::vector<double> f) {
    for (double& x : f) x = std::clamp(x, 0.01, 0.99);
    return f;
  };
  if (config.initial) {
    candidates.push_back(clamp_free(tie.collapse(*config.initial)));
  } else if (data.rows() >= 20) {
    StepwiseOptions opts;
    opts.constraints = config.kpt;
    const StepwiseFit fit = fit_stepwise(data, opts);
    candidates.push_back(clamp_free(tie.collapse(fit.params)));
  }
  for (double v : {0.5, 0.3, 0.2, 0.1, 0.05, 0.01}) candidates.emplace_back(tie.free_count(), v);
  for (const auto& f : candidates) {
    const HtParams ht = tie.expand(f);
    if (!kpt.enabled || kpt_feasible(ht, data, kpt)) return ht;
  }
  throw Error(ErrorKind::invalid_argument, "no feasible starting point for alpha/beta");
}

}  // namespace

Chain run_chain(const LagData& data, const Priors& priors, const TieStructure& tie, const ChainConfig& config) {
  const std::size_t m = data.lag_count();
  priors.validate(m);
  if (tie.lags != m) throw Error(ErrorKind::invalid_argument, "tie structure lag count differs from the data");
  if (config.iterations <= config.burn_in) throw Error(ErrorKind::config, "iterations must exceed burn-in");
  if (config.thin == 0) throw Error(ErrorKind::config, "thinning interval must be positive");

  const KptSettings kpt{config.kpt, kpt_reference_level(data)};
  const HtParams start = starting_point(data, tie, config, kpt);

  Rng rng = make_stream(config.seed, 0);
  MixtureState state = prior_state(start, data.rows(), priors, rng);
  gibbs_alloc(state, data, rng);
  AdaptState adapt = AdaptState::initial(tie.free_count());
  LabelStats labels;

  Chain chain;
  chain.priors = priors;
  chain.tie = tie;
  chain.config = config;
  const std::size_t keep = (config.iterations - config.burn_in) / config.thin;
  chain.states.reserve(keep);
  bool warned = false;

  for (std::size_t t = 1; t <= config.iterations; ++t) {
    if (t == config.burn_in + 1) {
      adapt.frozen = true;
      std::fill(adapt.proposed.begin(), adapt.proposed.end(), 0);
      std::fill(adapt.accepted.begin(), adapt.accepted.end(), 0);
      labels = {};
    }
    gibbs_sweep(state, data, priors, tie, kpt, adapt, rng, &labels);
    if (t > config.burn_in && (t - config.burn_in) % config.thin == 0) {
      check_state(state, data.rows(), priors.gamma_floor);
      const double bound = truncation_error_bound(static_cast<double>(data.rows()), state.gamma,
                                                  static_cast<double>(priors.truncation));
      if (!warned && bound > 1e-6) {
        spdlog::warn("truncation level {} is small for n = {} at gamma = {:.3g} (bound {:.3g})", priors.truncation,
                     data.rows(), state.gamma, bound);
        warned = true;
      }
      chain.states.push_back(state);
      chain.iterations.push_back(t);
      chain.log_posterior.push_back(log_posterior(data, state, priors));
    }
  }
  chain.mh_acceptance.resize(adapt.proposed.size());
  for (std::size_t p = 0; p < adapt.proposed.size(); ++p) {
    chain.mh_acceptance[p] = adapt.proposed[p] == 0
                                 ? 0.0
                                 : static_cast<double>(adapt.accepted[p]) / static_cast<double>(adapt.proposed[p]);
  }
  chain.label_acceptance =
      labels.proposed == 0 ? 0.0 : static_cast<double>(labels.accepted) / static_cast<double>(labels.proposed);
  return chain;
}

double residual_mixture_cdf(const MixtureState& s, std::span<const double> z) { return mixture_law(s).cdf(z); }

MixtureResidualLaw mixture_law(const MixtureState& s) { return MixtureResidualLaw(s.w, s.mu, s.psi_sq); }

}  // namespace htc
