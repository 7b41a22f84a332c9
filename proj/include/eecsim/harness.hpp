#pragma once
#include <cstdint>
#include <string>
#include <vector>

#include "eecsim/agents.hpp"
#include "eecsim/env_adapter.hpp"
#include "eecsim/oracle.hpp"

namespace eecsim {

// One experiment cell: a scenario, user count, accuracy constraint, and
// agent family, run over a list of seeds.
struct ExperimentSpec {
  char scenario{'A'};
  std::string scenario_file;  // overrides the scenario letter when set
  int n_devices{3};
  std::string constraint{"Min"};
  AgentKind agent{AgentKind::HL};
  std::vector<uint64_t> seeds{1, 2, 3, 4, 5};
  AgentConfig config{};
  HybridSchedule schedule{};
  long budget{-1};  // cap on real env steps; -1 picks the per-size default
  int window{3};    // consecutive matching evaluations that count as converged
  long eval_every{100};
};

long default_budget(int n_devices);
Topology experiment_topology(const ExperimentSpec& spec);
// Simulator parameters used for every experiment. Training observations
// include the requester index: without it the steady states of several
// devices are indistinguishable, and no memoryless policy could realize an
// asymmetric optimum.
SimParams experiment_params();

struct ConvergenceRecord {
  AgentKind agent{AgentKind::HL};
  uint64_t seed{0};
  bool converged{false};
  // Real env steps at the first evaluation of the matching streak; equals
  // the executed total (a lower bound) when the run never converged.
  long steps_to_converge{0};
  long real_env_steps{0};   // steps actually executed before stopping
  double experience_ms{0.0};  // simulated time spent, sum of all responses
  long updates{0};            // Adam plus tabular update count
  MatchResult final_match;
  JointConfiguration policy;  // greedy round at the end of training
};

// When logs is non-null it receives one TrainingLog per seed, in order.
std::vector<ConvergenceRecord> run_experiment(const ExperimentSpec& spec,
                                              std::vector<TrainingLog>* logs = nullptr);

struct CompareCell {
  AgentKind agent{AgentKind::QL};
  double median_steps{0.0};
  bool lower_bound{false};  // some seed exhausted the budget unconverged
  std::vector<ConvergenceRecord> records;
};

struct CompareReport {
  std::vector<CompareCell> cells;  // QL, DQN, HL order
  double ql_over_hl{0.0};
  double dqn_over_hl{0.0};
  bool lower_bound{false};  // any contributing median is a lower bound
};

// Trains all three agent families on the same cell and reports median real
// steps to convergence plus the QL/HL and DQN/HL ratios.
CompareReport compare_agents(const ExperimentSpec& base);

struct ParetoRow {
  char scenario{'A'};
  std::string cnst;
  std::vector<int> actions;
  double art{0.0};
  double aa{0.0};
};

std::vector<ParetoRow> oracle_pareto_rows(char scenario, int n_devices, const SimParams& params,
                                          const ModelCatalog& catalog);
ParetoRow policy_pareto_row(char scenario, const std::string& cnst, const JointConfiguration& cfg);

// Columns: Exp,Cnst,S1..Sn,ART(ms),AA(%). Decision cells are quoted since
// the action names contain commas. Byte-stable for identical inputs.
void write_pareto_csv(const std::string& path, const std::vector<ParetoRow>& rows, int n_devices);
void write_training_log_csv(const std::string& path, const TrainingLog& log);
void write_records_json(const std::string& path, const ExperimentSpec& spec,
                        const std::vector<ConvergenceRecord>& records);

double median(std::vector<double> v);

// Applies a JSON override file ("agent_config", "schedule" and top-level
// budget/window/eval_every/seeds/scenario_file entries) onto a spec.
void apply_config_file(ExperimentSpec& spec, const std::string& path);

std::vector<uint64_t> first_seeds(int count);

// Fast internal consistency sweep behind the `check` subcommand; prints one
// line per probe and returns overall success.
bool check_suite(std::ostream& os);

// Greedy lookup for either agent family: tabular agents read the packed
// discrete key, net agents the numeric encoding.
template <class Agent>
int greedy_action(const Agent& agent, const SimEnvAdapter& env) {
  if constexpr (requires(const Agent& a, uint64_t k) { a.greedy(k); })
    return agent.greedy(env.key());
  else
    return agent.greedy(env.encoded());
}

// Greedy joint decision, read from a clone of the training environment so
// evaluation never consumes real steps. The rollout first aligns to a round
// boundary, then runs settle_rounds greedy rounds so the windows and queues
// reflect the policy itself rather than training residue, then records one
// device round.
template <class Agent>
std::vector<int> extract_policy(const Agent& agent, SimEnvAdapter env, int settle_rounds = 5) {
  const int n = env.sim().n_devices();
  while (env.sim().next_device() != 0) env.step_enc(greedy_action(agent, env));
  for (int i = 0; i < settle_rounds * n; ++i) env.step_enc(greedy_action(agent, env));
  std::vector<int> actions(static_cast<size_t>(n), 0);
  for (int d = 0; d < n; ++d) {
    const int a = greedy_action(agent, env);
    actions[static_cast<size_t>(d)] = a;
    env.step_enc(a);
  }
  return actions;
}

int cli_main(int argc, char** argv);

}  // namespace eecsim
