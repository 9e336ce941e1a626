#include "config.hpp"

#include <fstream>
#include <set>

#include "htc/error.hpp"
#include "htc/io.hpp"

namespace htc::app {
namespace {

using nlohmann::json;

void reject_unknown(const json& j, const std::set<std::string>& known, const std::string& where) {
  for (const auto& [key, value] : j.items()) {
    if (!known.contains(key)) throw Error(ErrorKind::config, "unknown key '" + key + "' in " + where);
  }
}

template <class T>
void read(const json& j, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw Error(ErrorKind::config, std::string("bad value for '") + key + "': " + e.what());
  }
}

ChainConfig chain_from_json(const json& j, std::size_t& truncation) {
  reject_unknown(j, {"iterations", "burn_in", "thin", "truncation", "kpt"}, "chain");
  ChainConfig c;
  read(j, "iterations", c.iterations);
  read(j, "burn_in", c.burn_in);
  read(j, "thin", c.thin);
  read(j, "kpt", c.kpt);
  read(j, "truncation", truncation);
  return c;
}

json chain_to_json(const ChainConfig& c, std::size_t truncation) {
  return {{"iterations", c.iterations}, {"burn_in", c.burn_in}, {"thin", c.thin}, {"kpt", c.kpt},
          {"truncation", truncation}};
}

void validate_chain(const ChainConfig& c) {
  if (c.iterations == 0 || c.thin == 0 || c.burn_in >= c.iterations) {
    throw Error(ErrorKind::config, "chain needs iterations > burn_in and thin > 0");
  }
  if ((c.iterations - c.burn_in) / c.thin == 0) throw Error(ErrorKind::config, "chain would record no states");
}

std::uint64_t fnv1a(const std::string& text) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  return h;
}

}  // namespace

std::string hex(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

StudyDesign study_from_json(const json& j) {
  reject_unknown(j,
                 {"rho", "n", "margins", "replicates", "marginal_quantile", "dependence_quantile", "level_quantiles",
                  "m", "tie", "methods", "chain", "priors", "mc_replicates", "bootstrap_replicates", "block_len",
                  "nominal", "seed", "checkpoint_dir", "workers"},
                 "study");
  StudyDesign d;
  read(j, "rho", d.ar1.rho);
  read(j, "n", d.ar1.n);
  if (j.contains("margins")) {
    const auto m = j.at("margins").get<std::string>();
    if (m != "exponential" && m != "gaussian") throw Error(ErrorKind::config, "margins must be exponential or gaussian");
    d.ar1.margins = m == "exponential" ? Margins::exponential : Margins::gaussian;
  }
  read(j, "replicates", d.replicates);
  read(j, "marginal_quantile", d.marginal_quantile);
  read(j, "dependence_quantile", d.dependence_quantile);
  read(j, "level_quantiles", d.level_quantiles);
  read(j, "m", d.m);
  if (j.contains("tie")) d.tie = parse_tie_kind(j.at("tie").get<std::string>());
  read(j, "methods", d.methods);
  std::size_t truncation = Priors::defaults(d.m).truncation;
  if (j.contains("chain")) d.chain = chain_from_json(j.at("chain"), truncation);
  Priors p = j.contains("priors") ? priors_from_json(j.at("priors"), d.m) : Priors::defaults(d.m);
  if (j.contains("chain") && j.at("chain").contains("truncation")) p.truncation = truncation;
  d.priors = p;
  read(j, "mc_replicates", d.mc_replicates);
  read(j, "bootstrap_replicates", d.bootstrap_replicates);
  read(j, "block_len", d.block_len);
  read(j, "nominal", d.nominal);
  read(j, "seed", d.seed);
  read(j, "checkpoint_dir", d.checkpoint_dir);
  read(j, "workers", d.workers);
  for (const auto& m : d.methods) builtin_estimator(m);
  validate_chain(d.chain);
  d.validate();
  return d;
}

json study_to_json(const StudyDesign& d) {
  const Priors p = d.priors.value_or(Priors::defaults(d.m));
  return {{"rho", d.ar1.rho},
          {"n", d.ar1.n},
          {"margins", d.ar1.margins == Margins::exponential ? "exponential" : "gaussian"},
          {"replicates", d.replicates},
          {"marginal_quantile", d.marginal_quantile},
          {"dependence_quantile", d.dependence_quantile},
          {"level_quantiles", d.level_quantiles},
          {"m", d.m},
          {"tie", to_string(d.tie)},
          {"methods", d.methods},
          {"chain", chain_to_json(d.chain, p.truncation)},
          {"priors", htc::to_json(p)},
          {"mc_replicates", d.mc_replicates},
          {"bootstrap_replicates", d.bootstrap_replicates},
          {"block_len", d.block_len},
          {"nominal", d.nominal},
          {"seed", d.seed}};
}

void RunConfig::validate() const {
  if (!(marginal_quantile > 0.5 && marginal_quantile < 1.0)) {
    throw Error(ErrorKind::config, "marginal_quantile must lie in (0.5, 1)");
  }
  if (!(dependence_quantile >= marginal_quantile && dependence_quantile < 1.0)) {
    throw Error(ErrorKind::config, "dependence_quantile must lie in [marginal_quantile, 1)");
  }
  if (m == 0 || mc_replicates == 0 || block_len == 0 || bootstrap_replicates == 0) {
    throw Error(ErrorKind::config, "counts must be positive");
  }
  if (!(coverage > 0.0 && coverage < 1.0)) throw Error(ErrorKind::config, "coverage must lie in (0, 1)");
  validate_chain(chain);
  priors.validate(m);
}

json RunConfig::to_json() const {
  return {{"input", input},
          {"value_column", value_column},
          {"date_column", date_column},
          {"season_column", season_column},
          {"marginal_quantile", marginal_quantile},
          {"dependence_quantile", dependence_quantile},
          {"m", m},
          {"tie", to_string(tie)},
          {"priors", htc::to_json(priors)},
          {"chain", chain_to_json(chain, priors.truncation)},
          {"levels", levels},
          {"mc_replicates", mc_replicates},
          {"block_len", block_len},
          {"bootstrap_replicates", bootstrap_replicates},
          {"coverage", coverage},
          {"seed", seed},
          {"study", study_to_json(study)}};
}

std::uint64_t RunConfig::hash() const { return fnv1a(to_json().dump()); }

RunConfig config_from_json(const json& j) {
  if (!j.is_object()) throw Error(ErrorKind::config, "config must be a JSON object");
  reject_unknown(j,
                 {"input", "value_column", "date_column", "season_column", "marginal_quantile", "dependence_quantile",
                  "m", "tie", "priors", "chain", "levels", "mc_replicates", "block_len", "bootstrap_replicates",
                  "coverage", "seed", "study"},
                 "config");
  RunConfig c;
  read(j, "input", c.input);
  read(j, "value_column", c.value_column);
  read(j, "date_column", c.date_column);
  read(j, "season_column", c.season_column);
  read(j, "marginal_quantile", c.marginal_quantile);
  read(j, "dependence_quantile", c.dependence_quantile);
  read(j, "m", c.m);
  if (j.contains("tie")) c.tie = parse_tie_kind(j.at("tie").get<std::string>());
  std::size_t truncation = Priors::defaults(c.m).truncation;
  if (j.contains("chain")) c.chain = chain_from_json(j.at("chain"), truncation);
  c.priors = j.contains("priors") ? priors_from_json(j.at("priors"), c.m) : Priors::defaults(c.m);
  if (j.contains("chain") && j.at("chain").contains("truncation")) c.priors.truncation = truncation;
  read(j, "levels", c.levels);
  read(j, "mc_replicates", c.mc_replicates);
  read(j, "block_len", c.block_len);
  read(j, "bootstrap_replicates", c.bootstrap_replicates);
  read(j, "coverage", c.coverage);
  read(j, "seed", c.seed);
  if (j.contains("study")) c.study = study_from_json(j.at("study"));
  c.validate();
  return c;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::missing_artifact, "cannot open config " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw Error(ErrorKind::config, "config " + path + " is not valid JSON: " + e.what());
  }
  return config_from_json(j);
}

}  // namespace htc::app
