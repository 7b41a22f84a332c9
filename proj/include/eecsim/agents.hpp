#pragma once
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "eecsim/net.hpp"
#include "eecsim/replay.hpp"
#include "eecsim/rng.hpp"

namespace eecsim {

enum class AgentKind : uint8_t { QL, DQN, HL };
std::string to_string(AgentKind k);
AgentKind agent_kind_from_string(const std::string& s);

// Hyperparameters shared by every agent. Nets train on costs scaled by
// value_scale so raw millisecond targets do not dwarf Adam's default step
// size; tabular values and everything reported stay in raw milliseconds.
struct AgentConfig {
  double gamma{0.9};
  double lr{1e-3};
  double tabular_lr{0.5};
  double eps_start{1.0};
  // Floor low enough that exploration collisions stay rare. The window is
  // shared across devices, so one device's random downgrade can push a
  // neighbor's otherwise-legal greedy step over the accuracy line; near a
  // tight constraint that contamination can make the true optimum look
  // worse than an adjacent slack configuration.
  double eps_end{0.01};
  long eps_anneal_steps{0};   // 0: derive as half the planned direct steps
  long beta_anneal_steps{0};  // 0: derive as the full planned direct steps
  double per_alpha{0.6};
  double per_eps{1e-3};
  double beta_start{0.4};
  // TD errors are clamped to this magnitude (scaled space) before the
  // squared loss, Huber style. Constraint penalties are 1.0 in scaled
  // space, an order above the action gaps that decide the policy; without
  // the clamp their gradients (and the prioritized replay that chases
  // them) drown the gaps out. 0 disables.
  double td_clip{0.25};
  int minibatch{32};
  int warmup{32};  // stored transitions required before net updates start
  // Deliberately small. The reward is a window mean, so it depends on
  // recent history the state does not encode; transitions from an earlier
  // policy regime pair today's states with yesterday's windows, and a big
  // buffer keeps feeding those mismatched rewards to the net long after
  // the policy has moved on.
  size_t buffer_capacity{4000};
  int hidden{64};  // width of both hidden layers, both networks
  double value_scale{1e-3};
  // Extra scale on the system model's reward output target. The reward is
  // one component against a dozen state components in the shared loss;
  // without the boost its few-ms action gaps stay unresolved and the
  // suggestion ranking goes flat.
  double sys_reward_boost{8.0};
  // System model learning rate. Planning pays off only once next-state
  // predictions are exact along the greedy cycle, so the model trains
  // hotter than the value network.
  double sys_lr{3e-3};
};

// Epoch-structured session schedule. The plain DQN baseline runs the same
// loop with the model and planning phases zeroed out (see degenerate()).
struct HybridSchedule {
  int epochs{50};
  int n_direct{20};
  int t_direct{20};
  int n_world{200};
  int n_suggest{10};
  int t_suggest{5};
  int n_plan{200};
  int k_best{3};
  // Fixes the phase-mix exponent instead of epoch/epochs; 0 turns the
  // schedule into the pure direct-RL baseline.
  std::optional<double> alpha_override;

  HybridSchedule degenerate() const;
};

double hybrid_alpha(int epoch, int n_epochs);  // exactly epoch/n_epochs

// Per-epoch session counts. The shrinking phases (direct RL, model
// learning) follow ceil(base*(1-alpha/2)); the growing ones (suggestion,
// planning-train) follow ceil(base*(alpha+1)/2). Integer arithmetic, since
// the products land exactly on integers at many epochs and a float ceil
// would round them up spuriously. base 0 always yields 0 sessions.
int scaled_sessions_shrinking(int base, int epoch, int n_epochs);
int scaled_sessions_growing(int base, int epoch, int n_epochs);
// Overridden-alpha path; guards the same exact-boundary cases.
int scaled_sessions(int base, double factor);

// Sum of direct-phase env steps over one full schedule pass; the anneal
// horizons derive from it.
long planned_direct_steps(const HybridSchedule& sched);

struct AnnealSchedule {
  double eps_start{1.0};
  double eps_end{0.01};
  long eps_steps{1};
  double beta_start{0.4};
  long beta_steps{1};

  double eps(long step) const {
    if (eps_steps <= 0) return eps_end;
    const double f = std::min(1.0, static_cast<double>(step) / static_cast<double>(eps_steps));
    return eps_start + (eps_end - eps_start) * f;
  }
  double beta(long step) const {
    if (beta_steps <= 0) return 1.0;
    const double f = std::min(1.0, static_cast<double>(step) / static_cast<double>(beta_steps));
    return beta_start + (1.0 - beta_start) * f;
  }
};

AnnealSchedule derive_anneal(const AgentConfig& cfg, const HybridSchedule& sched);

enum class Phase : uint8_t { Direct, Model, Planning };
std::string to_string(Phase p);

struct StepRecord {
  int epoch{0};
  Phase phase{Phase::Direct};
  long real_steps{0};  // cumulative env steps at the time of the record
  double reward{std::numeric_limits<double>::quiet_NaN()};
  double loss{std::numeric_limits<double>::quiet_NaN()};
};

struct EpochSessions {
  int epoch{0};
  double alpha{0.0};
  int direct{0};
  int world{0};
  int suggest{0};
  int plan{0};
};

struct TrainingLog {
  std::vector<StepRecord> steps;
  std::vector<EpochSessions> session_counts;
  long real_env_steps{0};  // env.step calls only: direct steps + probes
  long direct_steps{0};
  long probe_steps{0};
  long q_updates{0};
  long plan_updates{0};
  long world_updates{0};
  long tabular_updates{0};
  long target_syncs{0};

  long updates() const { return q_updates + plan_updates + world_updates + tabular_updates; }
};

struct RunControl {
  // Hard cap on real env steps; 0 runs exactly one schedule pass (or, for
  // the tabular loop, the planned step count).
  long max_real_steps{0};
  // Invoked after every real env step with the cumulative count; returning
  // true stops training. Must not touch the training env or agent RNGs.
  std::function<bool(long)> on_real_step;
};

// Epsilon-greedy over a cost vector: with probability eps a uniform random
// index, otherwise the minimum, ties to the lowest index. Always consumes
// exactly one uniform draw, plus one index draw when exploring.
int argmin_index(const std::vector<double>& values);
int select_from_costs(const std::vector<double>& values, double eps, std::mt19937_64& rng);

// Tabular Q-learning over packed discrete observation keys. Unseen states
// read as all-zero rows; with zero costs everywhere the tie rule makes the
// untrained greedy action index 0.
class QTableAgent {
 public:
  QTableAgent(int n_actions, AgentConfig cfg);

  int select(uint64_t key, double eps, std::mt19937_64& rng) const;
  int greedy(uint64_t key) const;
  // Q(s,a) += lr*(r + gamma*min_a' Q(s',a') - Q(s,a)); min, not max: the
  // reward is a cost.
  void update(uint64_t key, int action, double reward, uint64_t next_key);

  double q(uint64_t key, int action) const;
  std::vector<double> row(uint64_t key) const;
  size_t states_seen() const { return table_.size(); }
  const AgentConfig& config() const { return cfg_; }
  int n_actions() const { return n_actions_; }

 private:
  int n_actions_;
  AgentConfig cfg_;
  std::unordered_map<uint64_t, std::vector<double>> table_;
};

// Value network pair with prioritized replay; the direct-RL core shared by
// the plain baseline and the hybrid agent. Every stored transition also
// feeds the uniform world pool so the hybrid's model learning sees exactly
// the direct experience.
class DQNAgent {
 public:
  DQNAgent(int in_dim, int n_actions, AgentConfig cfg, uint64_t seed);

  std::vector<double> q_values(const std::vector<double>& enc) const;  // scaled costs
  int select(const std::vector<double>& enc, double eps, std::mt19937_64& rng) const;
  int greedy(const std::vector<double>& enc) const;

  void observe(const Transition& t);
  // One prioritized minibatch from the direct pool, Adam step, priorities
  // refreshed from post-update TD errors. NaN while the pool is below the
  // warmup size (no RNG is consumed then).
  double learn_direct(double beta, std::mt19937_64& rng);
  void sync_target();

  // Scaled TD target r*scale + gamma*min_a Q'(s2,a); reads the target net
  // only, so it is constant between syncs regardless of online updates.
  double td_target(const Transition& t) const;

  const NetworkParams& online() const { return q_; }
  const NetworkParams& target() const { return target_; }
  const PrioritizedBuffer& direct_pool() const { return d_direct_; }
  const UniformBuffer& world_pool() const { return d_world_; }
  const AgentConfig& config() const { return cfg_; }
  int n_actions() const { return n_actions_; }
  int in_dim() const { return in_dim_; }

  void save(const std::string& path_prefix) const;
  void load(const std::string& path_prefix);

 protected:
  DQNAgent(int in_dim, int n_actions, AgentConfig cfg, std::mt19937_64&& rng);

  struct QBatch {
    double loss{0.0};
    std::vector<double> new_tds;  // post-update TD errors, scaled space
  };
  QBatch q_update_batch(const std::vector<const Transition*>& batch,
                        const std::vector<double>& weights);

  int in_dim_;
  int n_actions_;
  AgentConfig cfg_;
  NetworkParams q_;
  NetworkParams target_;
  AdamState adam_;
  Gradients grad_;
  PrioritizedBuffer d_direct_;
  UniformBuffer d_world_;
};

// Adds the learned system model and the planning store. The model maps
// (state encoding, one-hot action) to (scaled cost, next state encoding).
class HybridAgent : public DQNAgent {
 public:
  HybridAgent(int in_dim, int n_actions, AgentConfig cfg, uint64_t seed);

  double predict_cost(const std::vector<double>& enc, int action) const;  // raw ms
  std::vector<double> predict_next(const std::vector<double>& enc, int action) const;
  // K lowest predicted costs, ascending, ties to the lowest action index.
  // With the zero-initialized output layer this is [0..k-1] before any
  // training, which the tie rule makes deterministic.
  std::vector<int> suggest_actions(const std::vector<double>& enc, int k) const;

  // One uniform minibatch from the world pool against targets (scaled r,
  // s'). NaN (and no RNG use) while the pool holds fewer than a minibatch.
  double learn_system(std::mt19937_64& rng);
  // One prioritized minibatch from the plan store through the same Q
  // update as direct learning. NaN when the store is empty.
  double learn_plan(double beta, std::mt19937_64& rng);

  PlanBuffer& plan_pool() { return d_plan_; }
  const PlanBuffer& plan_pool() const { return d_plan_; }
  const NetworkParams& system_net() const { return sys_; }

  void save(const std::string& path_prefix) const;
  void load(const std::string& path_prefix);

 private:
  // The Q net consumes the generator first so its initial parameters match
  // a DQNAgent built from the same seed; the system net draws after it.
  HybridAgent(int in_dim, int n_actions, AgentConfig cfg, std::mt19937_64 rng);
  std::vector<double> system_input(const std::vector<double>& enc, int action) const;

  NetworkParams sys_;
  AdamState sys_adam_;
  Gradients sys_grad_;
  PlanBuffer d_plan_;
};

namespace detail {

template <class A>
concept PlanningAgent = requires(A a, std::mt19937_64 g, double b) {
  a.plan_pool();
  a.learn_system(g);
  a.learn_plan(b, g);
};

inline bool reached_cap(const RunControl& ctl, long real) {
  return ctl.max_real_steps > 0 && real >= ctl.max_real_steps;
}

inline bool after_real_step(const RunControl& ctl, long real) {
  bool stop = false;
  if (ctl.on_real_step) stop = ctl.on_real_step(real);
  return stop || reached_cap(ctl, real);
}

// One direct-RL session: T eps-greedy env steps, each stored in both pools
// and followed by one prioritized Q update once warm. Returns true when the
// run control asked to stop.
template <class Agent, class Env>
bool direct_session(Agent& agent, Env& env, const AnnealSchedule& ann, int epoch, int t_direct,
                    TrainingLog& log, const RunControl& ctl, std::mt19937_64& rng_act,
                    std::mt19937_64& rng_sample) {
  for (int t = 0; t < t_direct; ++t) {
    std::vector<double> s = env.encoded();
    const int a = agent.select(s, ann.eps(log.real_env_steps), rng_act);
    auto [r, s2] = env.step_enc(a);
    agent.observe(Transition{std::move(s), a, r, std::move(s2)});
    ++log.real_env_steps;
    ++log.direct_steps;
    const double loss = agent.learn_direct(ann.beta(log.real_env_steps), rng_sample);
    if (!std::isnan(loss)) ++log.q_updates;
    log.steps.push_back({epoch, Phase::Direct, log.real_env_steps, r,
                         loss});
    if (after_real_step(ctl, log.real_env_steps)) return true;
  }
  return false;
}

// One planning session: an imagined rollout of T steps. Per step the model
// ranks actions for the imagined state; any suggested action not yet in the
// plan store triggers one real probe step (the only real steps planning
// ever takes), the rest refresh their stored current-state field. The
// rollout then follows the top suggestion through the model, snapped back
// onto legal encoding levels.
template <class Agent, class Env>
bool planning_session(Agent& agent, Env& env, int epoch, const HybridSchedule& sched,
                      TrainingLog& log, const RunControl& ctl) {
  std::vector<double> s = env.encoded();
  for (int t = 0; t < sched.t_suggest; ++t) {
    const std::vector<int> cand = agent.suggest_actions(s, sched.k_best);
    std::vector<double> s_hat = agent.predict_next(s, cand[0]);
    // Probe the candidate set worst-first. A probe's reward window still
    // holds responses from before the planning phase, so the earliest
    // probes carry the dirtiest rewards; spending them on the least
    // promising candidates leaves the cheapest candidate a window made of
    // the other probes' own responses.
    for (auto it = cand.rbegin(); it != cand.rend(); ++it) {
      const int a = *it;
      if (!agent.plan_pool().contains(a)) {
        auto [r, s2] = env.step_enc(a);
        agent.plan_pool().insert(Transition{s, a, r, std::move(s2)});
        ++log.real_env_steps;
        ++log.probe_steps;
        log.steps.push_back({epoch, Phase::Planning, log.real_env_steps, r,
                             std::numeric_limits<double>::quiet_NaN()});
        if (after_real_step(ctl, log.real_env_steps)) return true;
      } else {
        agent.plan_pool().rewrite_state(a, s);
      }
    }
    s = env.snap(std::move(s_hat));
  }
  return false;
}

}  // namespace detail

// Epoch loop shared by the hybrid agent and the DQN baseline; the baseline
// passes a degenerate schedule whose model and planning phases are empty,
// which makes the two trajectories step-for-step identical by construction.
// With max_real_steps set, the loop keeps running past the schedule length
// (the phase mix then stays at its final value) until the cap or the stop
// callback; otherwise it runs exactly one pass.
template <class Agent, class Env>
TrainingLog train_schedule(Agent& agent, Env& env, const AgentConfig& cfg,
                           const HybridSchedule& sched, uint64_t seed,
                           const RunControl& ctl = {}) {
  TrainingLog log;
  uint64_t sstate = seed;
  std::mt19937_64 rng_act(split_seed(sstate));
  std::mt19937_64 rng_sample(split_seed(sstate));
  const AnnealSchedule ann = derive_anneal(cfg, sched);
  const int n = sched.epochs;

  bool stop = false;
  for (int epoch = 1; !stop; ++epoch) {
    const int e = std::min(epoch, n);
    const double alpha =
        sched.alpha_override ? *sched.alpha_override : hybrid_alpha(e, n);

    EpochSessions sess;
    sess.epoch = epoch;
    sess.alpha = alpha;
    if (sched.alpha_override) {
      sess.direct = scaled_sessions(sched.n_direct, 1.0 - alpha / 2.0);
      sess.world = scaled_sessions(sched.n_world, 1.0 - alpha / 2.0);
      sess.suggest = scaled_sessions(sched.n_suggest, (alpha + 1.0) / 2.0);
      sess.plan = scaled_sessions(sched.n_plan, (alpha + 1.0) / 2.0);
    } else {
      sess.direct = scaled_sessions_shrinking(sched.n_direct, e, n);
      sess.world = scaled_sessions_shrinking(sched.n_world, e, n);
      sess.suggest = scaled_sessions_growing(sched.n_suggest, e, n);
      sess.plan = scaled_sessions_growing(sched.n_plan, e, n);
    }
    log.session_counts.push_back(sess);

    for (int i = 0; i < sess.direct && !stop; ++i)
      stop = detail::direct_session(agent, env, ann, epoch, sched.t_direct, log, ctl, rng_act,
                                    rng_sample);
    agent.sync_target();
    ++log.target_syncs;

    if (!stop) {
      if constexpr (detail::PlanningAgent<Agent>) {
        for (int i = 0; i < sess.world; ++i) {
          const double ml = agent.learn_system(rng_sample);
          if (!std::isnan(ml)) {
            ++log.world_updates;
            log.steps.push_back({epoch, Phase::Model, log.real_env_steps,
                                 std::numeric_limits<double>::quiet_NaN(), ml});
          }
        }
        for (int i = 0; i < sess.suggest && !stop; ++i)
          stop = detail::planning_session(agent, env, epoch, sched, log, ctl);
        for (int i = 0; i < sess.plan && !stop; ++i) {
          const double pl = agent.learn_plan(ann.beta(log.real_env_steps), rng_sample);
          if (!std::isnan(pl)) {
            ++log.plan_updates;
            log.steps.push_back({epoch, Phase::Planning, log.real_env_steps,
                                 std::numeric_limits<double>::quiet_NaN(), pl});
          }
        }
      }
      agent.sync_target();
      ++log.target_syncs;
    }

    if (stop) break;
    if (ctl.max_real_steps <= 0 && epoch >= n) break;
  }
  return log;
}

template <class Env>
TrainingLog dqn_train(DQNAgent& agent, Env& env, const AgentConfig& cfg,
                      const HybridSchedule& sched, uint64_t seed, const RunControl& ctl = {}) {
  return train_schedule(agent, env, cfg, sched.degenerate(), seed, ctl);
}

template <class Env>
TrainingLog hybrid_train(HybridAgent& agent, Env& env, const AgentConfig& cfg,
                         const HybridSchedule& sched, uint64_t seed, const RunControl& ctl = {}) {
  return train_schedule(agent, env, cfg, sched, seed, ctl);
}

// Flat step loop for the tabular baseline; planned_steps sizes the epsilon
// anneal and, when no cap is set, the run length.
template <class Env>
TrainingLog ql_train(QTableAgent& agent, Env& env, const AgentConfig& cfg, long planned_steps,
                     uint64_t seed, const RunControl& ctl = {}) {
  TrainingLog log;
  uint64_t sstate = seed;
  std::mt19937_64 rng_act(split_seed(sstate));
  AnnealSchedule ann;
  ann.eps_start = cfg.eps_start;
  ann.eps_end = cfg.eps_end;
  ann.eps_steps =
      cfg.eps_anneal_steps > 0 ? cfg.eps_anneal_steps : std::max<long>(1, planned_steps / 2);

  const long cap = ctl.max_real_steps > 0 ? ctl.max_real_steps : planned_steps;
  bool stop = cap <= 0;
  while (!stop) {
    const uint64_t k = env.key();
    const int a = agent.select(k, ann.eps(log.real_env_steps), rng_act);
    auto [r, s2] = env.step_enc(a);
    (void)s2;
    agent.update(k, a, r, env.key());
    ++log.real_env_steps;
    ++log.direct_steps;
    ++log.tabular_updates;
    log.steps.push_back({0, Phase::Direct, log.real_env_steps, r,
                         std::numeric_limits<double>::quiet_NaN()});
    stop = detail::after_real_step(ctl, log.real_env_steps) || log.real_env_steps >= cap;
  }
  return log;
}

}  // namespace eecsim
