#include "htc/io.hpp"

#include <cmath>
#include <limits>
#include <ostream>

#include "htc/error.hpp"

namespace htc {
namespace {

using nlohmann::json;

// JSON has no infinities; -inf log-weights are stored as null.
json number(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }
double number(const json& j) { return j.is_null() ? -std::numeric_limits<double>::infinity() : j.get<double>(); }

json vec(const std::vector<double>& v) {
  json out = json::array();
  for (double x : v) out.push_back(number(x));
  return out;
}

std::vector<double> vec(const json& j) {
  std::vector<double> out;
  for (const auto& x : j) out.push_back(number(x));
  return out;
}

json matrix(const Eigen::MatrixXd& m) {
  json out = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index k = 0; k < m.cols(); ++k) row.push_back(m(i, k));
    out.push_back(row);
  }
  return out;
}

Eigen::MatrixXd matrix(const json& j) {
  const auto rows = static_cast<Eigen::Index>(j.size());
  const auto cols = rows > 0 ? static_cast<Eigen::Index>(j[0].size()) : 0;
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    if (static_cast<Eigen::Index>(j[static_cast<std::size_t>(i)].size()) != cols) {
      throw Error(ErrorKind::malformed_input, "ragged matrix in JSON");
    }
    for (Eigen::Index k = 0; k < cols; ++k) m(i, k) = j[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)].get<double>();
  }
  return m;
}

json ht_json(const HtParams& p) { return {{"alpha", p.alpha}, {"beta", p.beta}}; }
HtParams ht_from(const json& j) {
  return {j.at("alpha").get<std::vector<double>>(), j.at("beta").get<std::vector<double>>()};
}

template <typename F>
auto guarded(const char* what, F&& f) {
  try {
    return f();
  } catch (const json::exception& e) {
    throw Error(ErrorKind::malformed_input, std::string("malformed ") + what + ": " + e.what());
  }
}

}  // namespace

void write_chain_trace(std::ostream& out, const Chain& chain) {
  out << "iteration";
  for (std::size_t p = 0; p < chain.tie.free_count(); ++p) out << ',' << chain.tie.parameter_name(p);
  out << ",gamma,occupied,log_posterior\n";
  out.precision(17);
  for (std::size_t s = 0; s < chain.states.size(); ++s) {
    const auto& st = chain.states[s];
    out << chain.iterations[s];
    for (double f : chain.tie.collapse(st.ht)) out << ',' << f;
    out << ',' << st.gamma << ',' << st.occupied() << ',' << chain.log_posterior[s] << '\n';
  }
}

json to_json(const Priors& p) {
  return {{"eta1", p.eta1},   {"eta2", p.eta2}, {"psi_mu_sq", p.psi_mu_sq}, {"nu1", p.nu1},
          {"nu2", p.nu2},     {"gamma_floor", p.gamma_floor}, {"truncation", p.truncation}};
}

Priors priors_from_json(const json& j, std::size_t lags) {
  return guarded("priors", [&] {
    Priors p = Priors::defaults(lags);
    auto per_lag = [&](const char* key, std::vector<double>& dst) {
      if (!j.contains(key)) return;
      if (j[key].is_number()) {
        dst.assign(lags, j[key].get<double>());
      } else {
        dst = j[key].get<std::vector<double>>();
      }
    };
    if (j.contains("eta1")) p.eta1 = j["eta1"].get<double>();
    if (j.contains("eta2")) p.eta2 = j["eta2"].get<double>();
    per_lag("psi_mu_sq", p.psi_mu_sq);
    per_lag("nu1", p.nu1);
    per_lag("nu2", p.nu2);
    if (j.contains("gamma_floor")) p.gamma_floor = j["gamma_floor"].get<double>();
    if (j.contains("truncation")) p.truncation = j["truncation"].get<std::size_t>();
    p.validate(lags);
    return p;
  });
}

json to_json(const MixtureState& s) {
  return {{"ht", ht_json(s.ht)},
          {"mu", matrix(s.mu)},
          {"psi_sq", matrix(s.psi_sq)},
          {"breaks", vec(s.breaks)},
          {"log_breaks", vec(s.log_breaks)},
          {"log1m_breaks", vec(s.log1m_breaks)},
          {"w", vec(s.w)},
          {"log_w", vec(s.log_w)},
          {"c", s.c},
          {"gamma", s.gamma}};
}

MixtureState mixture_state_from_json(const json& j) {
  return guarded("mixture state", [&] {
    MixtureState s;
    s.ht = ht_from(j.at("ht"));
    s.mu = matrix(j.at("mu"));
    s.psi_sq = matrix(j.at("psi_sq"));
    s.breaks = vec(j.at("breaks"));
    s.log_breaks = vec(j.at("log_breaks"));
    s.log1m_breaks = vec(j.at("log1m_breaks"));
    s.w = vec(j.at("w"));
    s.log_w = vec(j.at("log_w"));
    s.c = j.at("c").get<std::vector<std::uint32_t>>();
    s.gamma = j.at("gamma").get<double>();
    return s;
  });
}

json to_json(const Chain& chain) {
  json j;
  j["priors"] = to_json(chain.priors);
  j["tie"] = {{"kind", to_string(chain.tie.kind)}, {"lags", chain.tie.lags}};
  j["config"] = {{"iterations", chain.config.iterations},
                 {"burn_in", chain.config.burn_in},
                 {"thin", chain.config.thin},
                 {"seed", chain.config.seed},
                 {"kpt", chain.config.kpt}};
  j["mh_acceptance"] = chain.mh_acceptance;
  j["label_acceptance"] = chain.label_acceptance;
  j["iterations"] = chain.iterations;
  j["log_posterior"] = vec(chain.log_posterior);
  j["states"] = json::array();
  for (const auto& s : chain.states) j["states"].push_back(to_json(s));
  return j;
}

Chain chain_from_json(const json& j) {
  return guarded("chain", [&] {
    Chain c;
    c.tie.kind = parse_tie_kind(j.at("tie").at("kind").get<std::string>());
    c.tie.lags = j.at("tie").at("lags").get<std::size_t>();
    c.priors = priors_from_json(j.at("priors"), c.tie.lags);
    const auto& cfg = j.at("config");
    c.config.iterations = cfg.at("iterations").get<std::size_t>();
    c.config.burn_in = cfg.at("burn_in").get<std::size_t>();
    c.config.thin = cfg.at("thin").get<std::size_t>();
    c.config.seed = cfg.at("seed").get<std::uint64_t>();
    c.config.kpt = cfg.at("kpt").get<bool>();
    c.mh_acceptance = j.at("mh_acceptance").get<std::vector<double>>();
    c.label_acceptance = j.at("label_acceptance").get<double>();
    c.iterations = j.at("iterations").get<std::vector<std::size_t>>();
    c.log_posterior = vec(j.at("log_posterior"));
    for (const auto& s : j.at("states")) c.states.push_back(mixture_state_from_json(s));
    return c;
  });
}

json to_json(const MarginalModel& m) {
  return {{"threshold", m.gpd().threshold},
          {"scale", m.gpd().scale},
          {"shape", m.gpd().shape},
          {"tail_fraction", m.tail_fraction()},
          {"sample", m.sorted_sample()}};
}

MarginalModel marginal_from_json(const json& j) {
  return guarded("marginal model", [&] {
    GpdParams g{j.at("scale").get<double>(), j.at("shape").get<double>(), j.at("threshold").get<double>()};
    return MarginalModel(j.at("sample").get<std::vector<double>>(), g);
  });
}

json to_json(const StepwiseFit& f) {
  json lags = json::array();
  for (const auto& l : f.lags) {
    lags.push_back({{"alpha", l.alpha},
                    {"beta", l.beta},
                    {"mu", l.mu},
                    {"psi", l.psi},
                    {"log_likelihood", number(l.log_likelihood)},
                    {"converged", l.converged},
                    {"message", l.message}});
  }
  return {{"params", ht_json(f.params)}, {"mu", f.mu}, {"psi", f.psi}, {"u", f.u},
          {"lags", lags},               {"residual_cloud", matrix(f.residual_cloud)}};
}

StepwiseFit stepwise_from_json(const json& j) {
  return guarded("stepwise fit", [&] {
    StepwiseFit f;
    f.params = ht_from(j.at("params"));
    f.mu = j.at("mu").get<std::vector<double>>();
    f.psi = j.at("psi").get<std::vector<double>>();
    f.u = j.at("u").get<double>();
    for (const auto& l : j.at("lags")) {
      LagFit lf;
      lf.alpha = l.at("alpha").get<double>();
      lf.beta = l.at("beta").get<double>();
      lf.mu = l.at("mu").get<double>();
      lf.psi = l.at("psi").get<double>();
      lf.log_likelihood = number(l.at("log_likelihood"));
      lf.converged = l.at("converged").get<bool>();
      lf.message = l.at("message").get<std::string>();
      f.lags.push_back(lf);
    }
    f.residual_cloud = matrix(j.at("residual_cloud"));
    return f;
  });
}

}  // namespace htc
