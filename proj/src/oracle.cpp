#include "eecsim/oracle.hpp"

#include <cmath>
#include <stdexcept>

namespace eecsim {

std::vector<std::vector<int>> enumerate_configurations(int n_devices) {
  if (n_devices < 1 || n_devices > 5)
    throw std::invalid_argument("enumeration supports 1..5 devices");
  std::vector<std::vector<int>> all;
  long total = 1;
  for (int i = 0; i < n_devices; ++i) total *= kActionCount;
  all.reserve(static_cast<size_t>(total));
  std::vector<int> cfg(static_cast<size_t>(n_devices), 0);
  for (;;) {
    all.push_back(cfg);
    int pos = n_devices - 1;
    while (pos >= 0 && ++cfg[static_cast<size_t>(pos)] == kActionCount) {
      cfg[static_cast<size_t>(pos)] = 0;
      --pos;
    }
    if (pos < 0) break;
  }
  return all;
}

double steady_state_art(const std::vector<int>& actions, const Topology& topo,
                        const SimParams& params, const ModelCatalog& catalog, int rounds) {
  if (actions.size() != static_cast<size_t>(topo.n_devices))
    throw std::invalid_argument("configuration size must match device count");
  SimEnvironment env(topo, params, catalog);
  env.reset(0);
  const AccuracyConstraint free{ConstraintLabel::Min, 0.0};
  double art = 0.0;
  for (int r = 0; r < rounds; ++r)
    for (int d = 0; d < topo.n_devices; ++d)
      art = env.step(OrchestrationAction(actions[static_cast<size_t>(d)]), free).window_art;
  return art;
}

double configuration_accuracy(const std::vector<int>& actions, const ModelCatalog& catalog) {
  if (actions.empty()) throw std::invalid_argument("empty configuration");
  double sum = 0.0;
  for (int a : actions) sum += catalog.model(OrchestrationAction(a).model_id()).accuracy;
  return sum / static_cast<double>(actions.size());
}

JointConfiguration optimal_configuration(const Topology& topo, const SimParams& params,
                                         const ModelCatalog& catalog,
                                         const AccuracyConstraint& constraint) {
  const int n = topo.n_devices;
  std::vector<int> cfg(static_cast<size_t>(n), 0);
  JointConfiguration best;
  bool found = false;
  for (;;) {
    const double aa = configuration_accuracy(cfg, catalog);
    if (accuracy_meets(aa, constraint.threshold)) {
      const double art = steady_state_art(cfg, topo, params, catalog);
      // Strict < keeps the first (lexicographically smallest) of tied costs.
      if (!found || art < best.art) {
        best = {cfg, art, aa};
        found = true;
      }
    }
    int pos = n - 1;
    while (pos >= 0 && ++cfg[static_cast<size_t>(pos)] == kActionCount) {
      cfg[static_cast<size_t>(pos)] = 0;
      --pos;
    }
    if (pos < 0) break;
  }
  if (!found) throw std::runtime_error("no feasible configuration for constraint");
  return best;
}

MatchResult policy_match(const std::vector<int>& policy_actions, const JointConfiguration& oracle,
                         const Topology& topo, const SimParams& params, const ModelCatalog& catalog,
                         double rel_tol) {
  MatchResult r;
  r.art_oracle = oracle.art;
  r.art_policy = steady_state_art(policy_actions, topo, params, catalog);
  r.cost_match = std::abs(r.art_policy - oracle.art) <= rel_tol * std::abs(oracle.art);
  r.exact_match = policy_actions == oracle.actions;
  return r;
}

}  // namespace eecsim
