#include "gate.hpp"

#include <algorithm>
#include <boost/math/special_functions/gamma.hpp>
#include <cmath>

#include "oracles.hpp"

namespace htc::oracle {

TinyInstance tiny_instance() {
  TinyInstance t;
  Eigen::VectorXd y0(3);
  y0 << 2.5, 3.1, 4.0;
  Eigen::MatrixXd lags(3, 1);
  lags << 1.2, 2.9, 2.1;
  t.data = make_lag_data(y0, lags, 2.0);
  t.priors = Priors::defaults(1);
  t.priors.truncation = 2;
  MixtureState& s = t.state;
  s.ht = HtParams{{0.4}, {0.3}};
  s.mu.resize(2, 1);
  s.mu << -0.3, 0.8;
  s.psi_sq.resize(2, 1);
  s.psi_sq << 0.5, 1.2;
  s.breaks = {0.6};
  s.log_breaks = {std::log(0.6)};
  s.log1m_breaks = {std::log(0.4)};
  s.refresh_weights();
  s.c = {0, 1, 0};
  s.gamma = 1.3;
  return t;
}

double GateResult::worst() const { return std::max({mu, psi_sq, alloc, weights, gamma}); }

GateResult conditional_gate(const TinyInstance& t) {
  GateResult g;
  const Eigen::MatrixXd resid = residuals(t.data, t.state.ht);
  constexpr double kInf = std::numeric_limits<double>::infinity();

  for (std::size_t k = 0; k < 2; ++k) {
    const auto kk = static_cast<Eigen::Index>(k);
    const NormalParams np = mu_conditional(t.state, resid, t.priors, k, 0);
    auto log_f = [&](double x) {
      MixtureState s = t.state;
      s.mu(kk, 0) = x;
      return joint_log_density(t.data, s, t.priors);
    };
    const auto dens = normalised_density(log_f, -kInf, kInf, t.state.mu(kk, 0));
    const double sd = std::sqrt(np.variance);
    for (int i = -400; i <= 400; ++i) {
      const double x = np.mean + sd * i / 50.0;
      g.mu = std::max(g.mu, std::abs(dens(x) - normal_pdf(x, np.mean, np.variance)));
    }

    const InvGammaParams ip = psi_sq_conditional(t.state, resid, t.priors, k, 0);
    auto log_h = [&](double x) {
      MixtureState s = t.state;
      s.psi_sq(kk, 0) = x;
      return joint_log_density(t.data, s, t.priors);
    };
    const auto dens_psi = normalised_density(log_h, 0.0, kInf, ip.scale / (ip.shape + 1.0));
    for (int i = 1; i <= 800; ++i) {
      const double x = i * 0.01;
      g.psi_sq = std::max(g.psi_sq, std::abs(dens_psi(x) - inv_gamma_pdf(x, ip.shape, ip.scale)));
    }
  }

  for (std::size_t i = 0; i < t.state.c.size(); ++i) {
    const auto probs = allocation_probabilities(t.state, resid, i);
    double lp[2];
    for (std::uint32_t k = 0; k < 2; ++k) {
      MixtureState s = t.state;
      s.c[i] = k;
      lp[k] = joint_log_density(t.data, s, t.priors);
    }
    const double top = std::max(lp[0], lp[1]);
    const double z = std::exp(lp[0] - top) + std::exp(lp[1] - top);
    for (std::size_t k = 0; k < 2; ++k) {
      g.alloc = std::max(g.alloc, std::abs(probs[k] - std::exp(lp[k] - top) / z));
    }
  }

  {
    const auto bp = weight_conditional(t.state.counts(), t.state.gamma).front();
    auto log_f = [&](double v) {
      MixtureState s = t.state;
      s.breaks = {v};
      return joint_log_density(t.data, s, t.priors);
    };
    const auto dens = normalised_density(log_f, 0.0, 1.0, 0.5);
    for (int i = 1; i < 1000; ++i) {
      const double v = i / 1000.0;
      g.weights = std::max(g.weights, std::abs(dens(v) - beta_pdf(v, bp.a, bp.b)));
    }
  }

  {
    const GammaParams gp = gamma_conditional(t.state, t.priors);
    const double floor = t.priors.gamma_floor;
    const double mass = boost::math::gamma_q(gp.shape, floor / gp.scale);
    auto log_f = [&](double x) {
      MixtureState s = t.state;
      s.gamma = x;
      return joint_log_density(t.data, s, t.priors);
    };
    const auto dens = normalised_density(log_f, floor, kInf, floor + 1.0);
    for (int i = 0; i <= 1000; ++i) {
      const double x = floor + i * 0.01;
      g.gamma = std::max(g.gamma, std::abs(dens(x) - gamma_pdf(x, gp.shape, gp.scale) / mass));
    }
  }
  return g;
}

}  // namespace htc::oracle
