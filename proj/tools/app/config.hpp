#pragma once

#include <cstdint>
#include <json.hpp>
#include <string>
#include <vector>

#include "htc/dpmix.hpp"
#include "htc/ht_core.hpp"
#include "htc/study.hpp"

namespace htc::app {

/// Everything a pipeline run needs. Loaded from a JSON document; unknown keys are rejected.
struct RunConfig {
  std::string input;
  std::string value_column = "value";
  std::string date_column = "date";
  std::string season_column;  // empty: no season segments
  double marginal_quantile = 0.95;
  double dependence_quantile = 0.98;
  std::size_t m = 1;
  TieKind tie = TieKind::free;
  Priors priors = Priors::defaults(1);
  ChainConfig chain;
  std::vector<double> levels;  // data scale
  std::size_t mc_replicates = 2000;
  std::size_t block_len = 50;
  std::size_t bootstrap_replicates = 100;
  double coverage = 0.95;
  std::uint64_t seed = 1;
  StudyDesign study;

  void validate() const;
  nlohmann::json to_json() const;
  /// FNV-1a over the canonical JSON; stamped into every output.
  std::uint64_t hash() const;
};

RunConfig config_from_json(const nlohmann::json& j);
RunConfig load_config(const std::string& path);

StudyDesign study_from_json(const nlohmann::json& j);
nlohmann::json study_to_json(const StudyDesign& d);

std::string hex(std::uint64_t v);

}  // namespace htc::app
