#pragma once

#include <iosfwd>
#include <json.hpp>

#include "htc/dpmix.hpp"
#include "htc/marginals.hpp"
#include "htc/stepwise.hpp"

namespace htc {

/// One row per recorded state: iteration, free alpha/beta, gamma, occupied components, log posterior.
void write_chain_trace(std::ostream& out, const Chain& chain);

nlohmann::json to_json(const Priors& priors);
Priors priors_from_json(const nlohmann::json& j, std::size_t lags);

nlohmann::json to_json(const MixtureState& state);
MixtureState mixture_state_from_json(const nlohmann::json& j);

/// Full chain, including every recorded mixture state.
nlohmann::json to_json(const Chain& chain);
Chain chain_from_json(const nlohmann::json& j);

nlohmann::json to_json(const MarginalModel& marginal);
MarginalModel marginal_from_json(const nlohmann::json& j);

nlohmann::json to_json(const StepwiseFit& fit);
StepwiseFit stepwise_from_json(const nlohmann::json& j);

}  // namespace htc
