#pragma once
#include <cstdint>
#include <utility>
#include <vector>

#include "eecsim/simenv.hpp"

namespace eecsim {

// Binds a simulator instance to a fixed accuracy constraint and exposes the
// numeric-interface the trainers use. Copyable on purpose: evaluation runs
// on clones so greedy rollouts never consume real training steps.
class SimEnvAdapter {
 public:
  SimEnvAdapter(const Topology& topo, const SimParams& params, const ModelCatalog& catalog,
                const AccuracyConstraint& constraint, uint64_t seed)
      : env_(topo, params, catalog), constraint_(constraint) {
    env_.reset(seed);
  }

  std::vector<double> encoded() const { return env_.observation().encode(); }
  uint64_t key() const { return env_.observation().key(); }

  std::pair<double, std::vector<double>> step_enc(int action) {
    const StepOutcome out = env_.step(OrchestrationAction(action), constraint_);
    return {out.reward, out.obs.encode()};
  }

  std::vector<double> snap(std::vector<double> enc) const {
    return snap_encoding(std::move(enc), env_.n_devices(), env_.params().include_requester);
  }

  int n_actions() const { return kActionCount; }
  int in_dim() const { return encoded_size(env_.n_devices(), env_.params().include_requester); }
  long step_count() const { return env_.step_count(); }
  double sim_time_ms() const { return env_.sim_time_ms(); }

  SimEnvironment& sim() { return env_; }
  const SimEnvironment& sim() const { return env_; }
  const AccuracyConstraint& constraint() const { return constraint_; }

 private:
  SimEnvironment env_;
  AccuracyConstraint constraint_;
};

}  // namespace eecsim
