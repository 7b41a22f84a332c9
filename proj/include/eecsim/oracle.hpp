#pragma once
#include <vector>

#include "eecsim/simenv.hpp"

namespace eecsim {

// One action index per device; the fixed assignment each device repeats
// every round.
struct JointConfiguration {
  std::vector<int> actions;
  double art{0.0};  // steady-state average response time, ms
  double aa{0.0};   // average accuracy of the chosen models, percent
};

// All 10^n joint assignments in lexicographic order (device 0 most
// significant). Intended for small n; the search below streams instead.
std::vector<std::vector<int>> enumerate_configurations(int n_devices);

// Replays the fixed assignment round-robin on a fresh environment and reads
// the response window after `rounds` full rounds.
double steady_state_art(const std::vector<int>& actions, const Topology& topo,
                        const SimParams& params, const ModelCatalog& catalog, int rounds = 10);

double configuration_accuracy(const std::vector<int>& actions, const ModelCatalog& catalog);

// Exhaustive minimum-ART search over every joint assignment whose average
// accuracy meets the constraint. Ties resolve to the lexicographically
// smallest assignment.
JointConfiguration optimal_configuration(const Topology& topo, const SimParams& params,
                                         const ModelCatalog& catalog,
                                         const AccuracyConstraint& constraint);

struct MatchResult {
  bool cost_match{false};   // steady-state ART within rel_tol of the optimum
  bool exact_match{false};  // identical assignment
  double art_policy{0.0};
  double art_oracle{0.0};
};

MatchResult policy_match(const std::vector<int>& policy_actions, const JointConfiguration& oracle,
                         const Topology& topo, const SimParams& params, const ModelCatalog& catalog,
                         double rel_tol = 1e-6);

}  // namespace eecsim
