#include "eecsim/harness.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <stdexcept>

#include "CLI11.hpp"
#include "json.hpp"

namespace eecsim {

namespace {

using nlohmann::json;

std::string fmt2(double v) {
  char b[40];
  std::snprintf(b, sizeof b, "%.2f", v);
  return b;
}

std::string fmt6(double v) {
  char b[48];
  std::snprintf(b, sizeof b, "%.6f", v);
  return b;
}

std::string num_or_empty(double v) { return std::isnan(v) ? std::string() : fmt6(v); }

// Everything a cell's seeds share: the oracle optimum is computed once.
struct CellContext {
  Topology topo;
  SimParams params;
  ModelCatalog catalog;
  AccuracyConstraint constraint;
  JointConfiguration oracle_opt;
};

CellContext make_context(const ExperimentSpec& spec) {
  ModelCatalog catalog = ModelCatalog::standard();
  const AccuracyConstraint constraint = AccuracyConstraint::parse(spec.constraint, catalog);
  const Topology topo = experiment_topology(spec);
  const SimParams params = experiment_params();
  JointConfiguration opt = optimal_configuration(topo, params, catalog, constraint);
  return CellContext{topo, params, std::move(catalog), constraint, std::move(opt)};
}

long resolved_budget(const ExperimentSpec& spec) {
  return spec.budget >= 0 ? spec.budget : default_budget(spec.n_devices);
}

template <class Agent, class TrainFn>
ConvergenceRecord run_seed(const ExperimentSpec& spec, const CellContext& ctx, uint64_t seed,
                           AgentKind kind, Agent& agent, SimEnvAdapter& env, TrainFn&& train_fn,
                           TrainingLog* log_out) {
  ConvergenceRecord rec;
  rec.agent = kind;
  rec.seed = seed;
  const long budget = resolved_budget(spec);

  long next_eval = spec.eval_every;
  int streak = 0;
  long streak_start = 0;
  bool converged = false;
  long converged_at = 0;

  RunControl ctl;
  ctl.max_real_steps = budget;
  ctl.on_real_step = [&](long real) {
    if (real < next_eval) return false;
    next_eval += spec.eval_every;
    const std::vector<int> actions = extract_policy(agent, env);
    const MatchResult m = policy_match(actions, ctx.oracle_opt, ctx.topo, ctx.params, ctx.catalog);
    if (m.cost_match) {
      if (streak == 0) streak_start = real;
      ++streak;
      if (streak >= spec.window) {
        converged = true;
        converged_at = streak_start;
        return true;
      }
    } else {
      streak = 0;
    }
    return false;
  };

  TrainingLog log;
  if (budget > 0) log = train_fn(ctl);

  rec.converged = converged;
  rec.real_env_steps = log.real_env_steps;
  rec.steps_to_converge = converged ? converged_at : log.real_env_steps;
  rec.experience_ms = env.sim_time_ms();
  rec.updates = log.updates();
  const std::vector<int> final_actions = extract_policy(agent, env);
  rec.final_match = policy_match(final_actions, ctx.oracle_opt, ctx.topo, ctx.params, ctx.catalog);
  rec.policy.actions = final_actions;
  rec.policy.art = rec.final_match.art_policy;
  rec.policy.aa = configuration_accuracy(final_actions, ctx.catalog);
  if (log_out) *log_out = std::move(log);
  return rec;
}

std::vector<ConvergenceRecord> run_with_context(const ExperimentSpec& spec, const CellContext& ctx,
                                                std::vector<TrainingLog>* logs) {
  std::vector<ConvergenceRecord> out;
  for (uint64_t seed : spec.seeds) {
    uint64_t st = seed;
    const uint64_t env_seed = split_seed(st);
    const uint64_t agent_seed = split_seed(st);
    const uint64_t train_seed = split_seed(st);
    SimEnvAdapter env(ctx.topo, ctx.params, ctx.catalog, ctx.constraint, env_seed);
    TrainingLog log;
    TrainingLog* log_ptr = logs ? &log : nullptr;
    switch (spec.agent) {
      case AgentKind::QL: {
        QTableAgent agent(env.n_actions(), spec.config);
        out.push_back(run_seed(
            spec, ctx, seed, AgentKind::QL, agent, env,
            [&](const RunControl& ctl) {
              return ql_train(agent, env, spec.config, resolved_budget(spec), train_seed, ctl);
            },
            log_ptr));
        break;
      }
      case AgentKind::DQN: {
        DQNAgent agent(env.in_dim(), env.n_actions(), spec.config, agent_seed);
        out.push_back(run_seed(
            spec, ctx, seed, AgentKind::DQN, agent, env,
            [&](const RunControl& ctl) {
              return dqn_train(agent, env, spec.config, spec.schedule, train_seed, ctl);
            },
            log_ptr));
        break;
      }
      case AgentKind::HL: {
        HybridAgent agent(env.in_dim(), env.n_actions(), spec.config, agent_seed);
        out.push_back(run_seed(
            spec, ctx, seed, AgentKind::HL, agent, env,
            [&](const RunControl& ctl) {
              return hybrid_train(agent, env, spec.config, spec.schedule, train_seed, ctl);
            },
            log_ptr));
        break;
      }
    }
    if (logs) logs->push_back(std::move(log));
  }
  return out;
}

}  // namespace

long default_budget(int n_devices) {
  if (n_devices <= 3) return 50000;
  if (n_devices == 4) return 200000;
  return 500000;
}

Topology experiment_topology(const ExperimentSpec& spec) {
  if (!spec.scenario_file.empty()) {
    const ScenarioSpec s = load_scenario(spec.scenario_file);
    return s.topology;
  }
  return Topology::scenario(spec.scenario, spec.n_devices);
}

SimParams experiment_params() {
  SimParams p;
  p.include_requester = true;
  return p;
}

std::vector<ConvergenceRecord> run_experiment(const ExperimentSpec& spec,
                                              std::vector<TrainingLog>* logs) {
  return run_with_context(spec, make_context(spec), logs);
}

double median(std::vector<double> v) {
  if (v.empty()) throw std::invalid_argument("median of empty set");
  std::sort(v.begin(), v.end());
  const size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

CompareReport compare_agents(const ExperimentSpec& base) {
  const CellContext ctx = make_context(base);
  CompareReport rep;
  for (AgentKind k : {AgentKind::QL, AgentKind::DQN, AgentKind::HL}) {
    ExperimentSpec s = base;
    s.agent = k;
    CompareCell cell;
    cell.agent = k;
    cell.records = run_with_context(s, ctx, nullptr);
    std::vector<double> steps;
    for (const ConvergenceRecord& r : cell.records) {
      steps.push_back(static_cast<double>(r.steps_to_converge));
      if (!r.converged) cell.lower_bound = true;
    }
    cell.median_steps = median(steps);
    rep.cells.push_back(std::move(cell));
  }
  rep.ql_over_hl = rep.cells[0].median_steps / rep.cells[2].median_steps;
  rep.dqn_over_hl = rep.cells[1].median_steps / rep.cells[2].median_steps;
  rep.lower_bound =
      rep.cells[0].lower_bound || rep.cells[1].lower_bound || rep.cells[2].lower_bound;
  return rep;
}

std::vector<ParetoRow> oracle_pareto_rows(char scenario, int n_devices, const SimParams& params,
                                          const ModelCatalog& catalog) {
  const Topology topo = Topology::scenario(scenario, n_devices);
  std::vector<ParetoRow> rows;
  for (const AccuracyConstraint& c : all_constraints(catalog)) {
    const JointConfiguration opt = optimal_configuration(topo, params, catalog, c);
    rows.push_back(ParetoRow{scenario, c.name(), opt.actions, opt.art, opt.aa});
  }
  return rows;
}

ParetoRow policy_pareto_row(char scenario, const std::string& cnst, const JointConfiguration& cfg) {
  return ParetoRow{scenario, cnst, cfg.actions, cfg.art, cfg.aa};
}

void write_pareto_csv(const std::string& path, const std::vector<ParetoRow>& rows, int n_devices) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write " + path);
  f << "Exp,Cnst";
  for (int i = 1; i <= n_devices; ++i) f << ",S" << i;
  f << ",ART(ms),AA(%)\n";
  for (const ParetoRow& r : rows) {
    f << r.scenario << ',' << r.cnst;
    for (int a : r.actions) f << ",\"" << OrchestrationAction(a).name() << '"';
    f << ',' << fmt2(r.art) << ',' << fmt2(r.aa) << '\n';
  }
}

void write_training_log_csv(const std::string& path, const TrainingLog& log) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write " + path);
  f << "epoch,phase,real_steps,reward,loss\n";
  for (const StepRecord& s : log.steps) {
    f << s.epoch << ',' << to_string(s.phase) << ',' << s.real_steps << ','
      << num_or_empty(s.reward) << ',' << num_or_empty(s.loss) << '\n';
  }
}

void write_records_json(const std::string& path, const ExperimentSpec& spec,
                        const std::vector<ConvergenceRecord>& records) {
  json j;
  j["scenario"] = std::string(1, spec.scenario);
  j["users"] = spec.n_devices;
  j["constraint"] = spec.constraint;
  j["agent"] = to_string(spec.agent);
  j["budget"] = resolved_budget(spec);
  j["window"] = spec.window;
  j["eval_every"] = spec.eval_every;
  json arr = json::array();
  for (const ConvergenceRecord& r : records) {
    json e;
    e["seed"] = r.seed;
    e["converged"] = r.converged;
    e["steps_to_converge"] = r.steps_to_converge;
    e["real_env_steps"] = r.real_env_steps;
    e["experience_ms"] = r.experience_ms;
    e["updates"] = r.updates;
    e["cost_match"] = r.final_match.cost_match;
    e["exact_match"] = r.final_match.exact_match;
    e["art_policy"] = r.final_match.art_policy;
    e["art_oracle"] = r.final_match.art_oracle;
    e["aa"] = r.policy.aa;
    json acts = json::array();
    for (int a : r.policy.actions) acts.push_back(OrchestrationAction(a).name());
    e["policy"] = acts;
    arr.push_back(std::move(e));
  }
  j["records"] = std::move(arr);
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write " + path);
  f << j.dump(2) << '\n';
}

namespace {

std::string safe_constraint(const std::string& c) {
  std::string out;
  for (char ch : c)
    if (ch != '%') out.push_back(ch);
  return out;
}

}  // namespace

void apply_config_file(ExperimentSpec& spec, const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot read config " + path);
  json j;
  f >> j;
  if (j.contains("agent_config")) {
    const json& a = j["agent_config"];
    AgentConfig& c = spec.config;
    c.gamma = a.value("gamma", c.gamma);
    c.lr = a.value("lr", c.lr);
    c.tabular_lr = a.value("tabular_lr", c.tabular_lr);
    c.eps_start = a.value("eps_start", c.eps_start);
    c.eps_end = a.value("eps_end", c.eps_end);
    c.eps_anneal_steps = a.value("eps_anneal_steps", c.eps_anneal_steps);
    c.beta_anneal_steps = a.value("beta_anneal_steps", c.beta_anneal_steps);
    c.per_alpha = a.value("per_alpha", c.per_alpha);
    c.per_eps = a.value("per_eps", c.per_eps);
    c.beta_start = a.value("beta_start", c.beta_start);
    c.td_clip = a.value("td_clip", c.td_clip);
    c.minibatch = a.value("minibatch", c.minibatch);
    c.warmup = a.value("warmup", c.warmup);
    c.buffer_capacity = a.value("buffer_capacity", c.buffer_capacity);
    c.hidden = a.value("hidden", c.hidden);
    c.value_scale = a.value("value_scale", c.value_scale);
    c.sys_reward_boost = a.value("sys_reward_boost", c.sys_reward_boost);
    c.sys_lr = a.value("sys_lr", c.sys_lr);
  }
  if (j.contains("schedule")) {
    const json& s = j["schedule"];
    HybridSchedule& h = spec.schedule;
    h.epochs = s.value("epochs", h.epochs);
    h.n_direct = s.value("n_direct", h.n_direct);
    h.t_direct = s.value("t_direct", h.t_direct);
    h.n_world = s.value("n_world", h.n_world);
    h.n_suggest = s.value("n_suggest", h.n_suggest);
    h.t_suggest = s.value("t_suggest", h.t_suggest);
    h.n_plan = s.value("n_plan", h.n_plan);
    h.k_best = s.value("k_best", h.k_best);
    if (s.contains("alpha_override")) h.alpha_override = s["alpha_override"].get<double>();
  }
  spec.window = j.value("window", spec.window);
  spec.eval_every = j.value("eval_every", spec.eval_every);
  spec.budget = j.value("budget", spec.budget);
  if (j.contains("seeds")) {
    spec.seeds.clear();
    for (const auto& s : j["seeds"]) spec.seeds.push_back(s.get<uint64_t>());
  }
  if (j.contains("scenario_file")) spec.scenario_file = j["scenario_file"].get<std::string>();
}

std::vector<uint64_t> first_seeds(int count) {
  std::vector<uint64_t> s;
  for (int i = 1; i <= count; ++i) s.push_back(static_cast<uint64_t>(i));
  return s;
}

bool check_suite(std::ostream& os) {
  bool ok = true;
  auto report = [&](const char* name, bool pass) {
    os << (pass ? "PASS " : "FAIL ") << name << '\n';
    ok = ok && pass;
  };

  const ModelCatalog catalog = ModelCatalog::standard();
  {
    const double macs[8] = {569, 317, 150, 41, 569, 317, 150, 41};
    const double acc[8] = {89.9, 88.2, 84.9, 74.2, 88.9, 87.0, 83.2, 72.8};
    bool pass = true;
    for (int i = 0; i < 8; ++i) {
      const InferenceModel& m = catalog.model(i);
      pass = pass && m.macs == macs[i] && m.accuracy == acc[i] &&
             m.precision == (i < 4 ? Precision::FP32 : Precision::Int8);
    }
    report("catalog rows", pass);
  }
  {
    SimParams p;
    SimEnvironment env(Topology::scenario('A', 3), p, catalog);
    env.reset(0);
    const AccuracyConstraint free{ConstraintLabel::Min, 0.0};
    const StepOutcome out = env.step(OrchestrationAction(7), free);
    report("local d7 anchor 72 ms", out.response_ms == 72.0);
  }
  {
    SimParams p;
    const AccuracyConstraint free{ConstraintLabel::Min, 0.0};
    SimEnvironment reg(Topology::scenario('A', 3), p, catalog);
    reg.reset(0);
    Topology weak = Topology::scenario('A', 3);
    weak.device_links[0] = LinkQuality::Weak;
    SimEnvironment wk(weak, p, catalog);
    wk.reset(0);
    const double d = wk.step(OrchestrationAction(8), free).response_ms -
                     reg.step(OrchestrationAction(8), free).response_ms;
    report("weak link +40 ms round trip", d == 2.0 * p.weak_extra_ms);
  }
  {
    bool pass = hybrid_alpha(7, 50) == 7.0 / 50.0 &&
                scaled_sessions_shrinking(20, 1, 50) == 20 &&
                scaled_sessions_shrinking(20, 50, 50) == 10 &&
                scaled_sessions_growing(200, 1, 50) == 102 &&
                scaled_sessions_growing(200, 50, 50) == 200 && scaled_sessions_growing(0, 9, 50) == 0;
    report("schedule formulas", pass);
  }
  {
    ExperimentSpec spec;
    spec.agent = AgentKind::QL;
    spec.seeds = {1};
    spec.budget = 300;
    const std::vector<ConvergenceRecord> a = run_experiment(spec);
    const std::vector<ConvergenceRecord> b = run_experiment(spec);
    report("repeat run determinism",
           a[0].real_env_steps == b[0].real_env_steps && a[0].experience_ms == b[0].experience_ms &&
               a[0].policy.actions == b[0].policy.actions);
  }
  {
    const JointConfiguration opt = optimal_configuration(
        Topology::scenario('A', 1), SimParams{}, catalog,
        AccuracyConstraint::make(ConstraintLabel::Min, catalog));
    report("single-user floor is local d7", opt.actions == std::vector<int>{7});
  }
  return ok;
}

int cli_main(int argc, char** argv) {
  CLI::App app{"Desk-scale end-edge-cloud inference orchestration testbed"};
  app.require_subcommand(1);

  std::string scenario = "A";
  int users = 3;
  std::string constraint = "Min";
  std::string agent = "HL";
  int seeds = 5;
  long budget = -1;
  std::string config_file;
  std::string out_dir = ".";
  bool strict = false;

  CLI::App* oracle_cmd = app.add_subcommand("oracle", "Write brute-force Pareto tables");
  oracle_cmd->add_option("--scenario", scenario, "Scenario letters, e.g. A or ABCD");
  oracle_cmd->add_option("--users", users, "End-device count (1..5)");
  oracle_cmd->add_option("--out", out_dir, "Output directory");

  CLI::App* train_cmd = app.add_subcommand("train", "Train one agent on one cell");
  train_cmd->add_option("--scenario", scenario, "Scenario letter A..D");
  train_cmd->add_option("--users", users, "End-device count (1..5)");
  train_cmd->add_option("--constraint", constraint, "Min, 80, 85, 89 or Max");
  train_cmd->add_option("--agent", agent, "QL, DQN or HL");
  train_cmd->add_option("--seeds", seeds, "Number of seeds (1..k)");
  train_cmd->add_option("--budget", budget, "Real env step cap");
  train_cmd->add_option("--config", config_file, "JSON overrides");
  train_cmd->add_option("--out", out_dir, "Output directory");
  train_cmd->add_flag("--strict", strict, "Exit 2 when any seed fails to converge");

  CLI::App* compare_cmd = app.add_subcommand("compare", "Agent speedup table for one cell");
  compare_cmd->add_option("--scenario", scenario, "Scenario letter A..D");
  compare_cmd->add_option("--users", users, "End-device count (1..5)");
  compare_cmd->add_option("--constraint", constraint, "Min, 80, 85, 89 or Max");
  compare_cmd->add_option("--seeds", seeds, "Number of seeds (1..k)");
  compare_cmd->add_option("--budget", budget, "Real env step cap");
  compare_cmd->add_option("--config", config_file, "JSON overrides");
  compare_cmd->add_option("--out", out_dir, "Output directory");

  CLI::App* check_cmd = app.add_subcommand("check", "Run the quick invariant suite");
  (void)check_cmd;

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    app.exit(e);
    return 0;
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    std::filesystem::create_directories(out_dir);
    const ModelCatalog catalog = ModelCatalog::standard();

    if (app.got_subcommand(oracle_cmd)) {
      for (char sc : scenario) {
        const std::vector<ParetoRow> rows =
            oracle_pareto_rows(sc, users, experiment_params(), catalog);
        const std::string path = out_dir + "/pareto_" + std::string(1, sc) + ".csv";
        write_pareto_csv(path, rows, users);
        std::cout << "wrote " << path << '\n';
      }
      return 0;
    }

    if (app.got_subcommand(train_cmd)) {
      ExperimentSpec spec;
      spec.scenario = scenario.empty() ? 'A' : scenario[0];
      spec.n_devices = users;
      spec.constraint = constraint;
      spec.agent = agent_kind_from_string(agent);
      spec.seeds = first_seeds(seeds);
      spec.budget = budget;
      if (!config_file.empty()) apply_config_file(spec, config_file);

      std::vector<TrainingLog> logs;
      const std::vector<ConvergenceRecord> records = run_experiment(spec, &logs);

      const std::string tag = to_string(spec.agent) + "_" + std::string(1, spec.scenario) +
                              std::to_string(spec.n_devices) + "_" + safe_constraint(spec.constraint);
      write_records_json(out_dir + "/records_" + tag + ".json", spec, records);
      std::vector<ParetoRow> rows;
      for (const ConvergenceRecord& r : records)
        rows.push_back(policy_pareto_row(spec.scenario, spec.constraint, r.policy));
      write_pareto_csv(out_dir + "/policy_" + tag + ".csv", rows, spec.n_devices);
      for (size_t i = 0; i < logs.size(); ++i)
        write_training_log_csv(
            out_dir + "/train_log_" + tag + "_seed" + std::to_string(spec.seeds[i]) + ".csv",
            logs[i]);

      int n_conv = 0;
      for (const ConvergenceRecord& r : records) n_conv += r.converged ? 1 : 0;
      std::cout << to_string(spec.agent) << " " << spec.scenario << "/" << spec.constraint << " n="
                << spec.n_devices << ": " << n_conv << "/" << records.size()
                << " seeds converged\n";
      for (const ConvergenceRecord& r : records)
        std::cout << "  seed " << r.seed << ": "
                  << (r.converged ? "converged at " + std::to_string(r.steps_to_converge)
                                  : "not converged after " + std::to_string(r.real_env_steps))
                  << " steps, art " << fmt2(r.final_match.art_policy) << " vs oracle "
                  << fmt2(r.final_match.art_oracle) << '\n';
      if (strict && n_conv < static_cast<int>(records.size())) return 2;
      return 0;
    }

    if (app.got_subcommand(compare_cmd)) {
      ExperimentSpec spec;
      spec.scenario = scenario.empty() ? 'A' : scenario[0];
      spec.n_devices = users;
      spec.constraint = constraint;
      spec.seeds = first_seeds(seeds);
      spec.budget = budget;
      if (!config_file.empty()) apply_config_file(spec, config_file);

      const CompareReport rep = compare_agents(spec);
      std::ostringstream table;
      table << "agent,median_steps,lower_bound\n";
      for (const CompareCell& c : rep.cells)
        table << to_string(c.agent) << ',' << fmt2(c.median_steps) << ','
              << (c.lower_bound ? "yes" : "no") << '\n';
      table << "ratio QL/HL," << fmt2(rep.ql_over_hl) << ",\n";
      table << "ratio DQN/HL," << fmt2(rep.dqn_over_hl) << ",\n";
      std::cout << table.str();
      const std::string path = out_dir + "/compare_" + std::string(1, spec.scenario) +
                               std::to_string(spec.n_devices) + "_" +
                               safe_constraint(spec.constraint) + ".csv";
      std::ofstream f(path);
      f << table.str();
      return 0;
    }

    // check
    return check_suite(std::cout) ? 0 : 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace eecsim
