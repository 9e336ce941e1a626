#pragma once

#include "htc/dpmix.hpp"

namespace htc::oracle {

/// Three observations, two components, one lag.
struct TinyInstance {
  LagData data;
  MixtureState state;
  Priors priors;
};

TinyInstance tiny_instance();

/// Sup-norm distance between each library conditional and the brute-force
/// normalised joint, over a grid covering the bulk of each density.
struct GateResult {
  double mu = 0.0;
  double psi_sq = 0.0;
  double alloc = 0.0;
  double weights = 0.0;
  double gamma = 0.0;

  double worst() const;
};

GateResult conditional_gate(const TinyInstance& instance);

}  // namespace htc::oracle
