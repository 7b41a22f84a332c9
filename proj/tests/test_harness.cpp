#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "eecsim/harness.hpp"

using namespace eecsim;
namespace fs = std::filesystem;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  REQUIRE(bool(f));
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

// The cheapest convergent cell: one user, no accuracy pressure, tabular agent.
ExperimentSpec cheap_cell() {
  ExperimentSpec spec;
  spec.scenario = 'A';
  spec.n_devices = 1;
  spec.constraint = "Min";
  spec.agent = AgentKind::QL;
  spec.seeds = {1, 2};
  spec.budget = 4000;
  return spec;
}

fs::path tmp_file(const char* name) { return fs::temp_directory_path() / name; }

}  // namespace

TEST_CASE("median of odd and even length samples") {
  CHECK(median({3.0, 1.0, 2.0}) == doctest::Approx(2.0));
  CHECK(median({4.0, 1.0, 2.0, 3.0}) == doctest::Approx(2.5));
  CHECK(median({7.0}) == doctest::Approx(7.0));
  CHECK_THROWS(median({}));
}

TEST_CASE("first_seeds counts from one") {
  CHECK(first_seeds(5) == std::vector<uint64_t>{1, 2, 3, 4, 5});
  CHECK(first_seeds(1) == std::vector<uint64_t>{1});
  CHECK(first_seeds(0).empty());
}

TEST_CASE("default budget steps with the device count") {
  CHECK(default_budget(1) == 50000);
  CHECK(default_budget(3) == 50000);
  CHECK(default_budget(4) == 200000);
  CHECK(default_budget(5) == 500000);
}

TEST_CASE("experiment topology honors the scenario letter") {
  ExperimentSpec spec = cheap_cell();
  spec.scenario = 'B';
  spec.n_devices = 3;
  const Topology topo = experiment_topology(spec);
  CHECK(topo.n_devices == 3);
  CHECK(topo.device_links[0] == LinkQuality::Regular);
  CHECK(topo.device_links[1] == LinkQuality::Weak);
}

TEST_CASE("experiment topology loads a scenario file when given") {
  ExperimentSpec spec = cheap_cell();
  const fs::path p = tmp_file("eecsim_topo.json");
  {
    ScenarioSpec sf;
    sf.topology = Topology::scenario('D', 2);
    sf.constraint = "80%";
    sf.seed = 9;
    save_scenario(sf, p.string());
  }
  spec.scenario_file = p.string();
  const Topology topo = experiment_topology(spec);
  CHECK(topo.n_devices == 2);
  CHECK(topo.device_links[0] == LinkQuality::Weak);
  CHECK(topo.device_links[1] == LinkQuality::Weak);
  fs::remove(p);
}

TEST_CASE("run_experiment converges the cheap cell and reports the floor policy") {
  const ExperimentSpec spec = cheap_cell();
  std::vector<TrainingLog> logs;
  const auto records = run_experiment(spec, &logs);
  REQUIRE(records.size() == 2);
  REQUIRE(logs.size() == 2);
  for (const auto& r : records) {
    CHECK(r.agent == AgentKind::QL);
    CHECK(r.converged);
    CHECK(r.final_match.cost_match);
    CHECK(r.policy.actions == std::vector<int>{7});
    CHECK(r.policy.art == doctest::Approx(72.0));
    CHECK(r.steps_to_converge > 0);
    CHECK(r.steps_to_converge <= r.real_env_steps);
    CHECK(r.real_env_steps <= spec.budget);
    CHECK(r.experience_ms > 0.0);
    CHECK(r.updates > 0);
  }
  CHECK(records[0].seed == 1);
  CHECK(records[1].seed == 2);
  // Convergence stops the run early, so the logs must be shorter than budget.
  for (const auto& log : logs) CHECK(log.real_env_steps < spec.budget);
}

TEST_CASE("zero budget leaves an untrained, unconverged record") {
  ExperimentSpec spec = cheap_cell();
  spec.budget = 0;
  spec.seeds = {5};
  const auto records = run_experiment(spec);
  REQUIRE(records.size() == 1);
  CHECK_FALSE(records[0].converged);
  CHECK(records[0].real_env_steps == 0);
  CHECK(records[0].updates == 0);
}

TEST_CASE("identical spec and seed reproduce identical records") {
  const ExperimentSpec spec = cheap_cell();
  const auto a = run_experiment(spec);
  const auto b = run_experiment(spec);
  REQUIRE(a.size() == b.size());
  for (size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].steps_to_converge == b[i].steps_to_converge);
    CHECK(a[i].real_env_steps == b[i].real_env_steps);
    CHECK(a[i].experience_ms == b[i].experience_ms);
    CHECK(a[i].updates == b[i].updates);
    CHECK(a[i].policy.actions == b[i].policy.actions);
    CHECK(a[i].policy.art == b[i].policy.art);
  }
}

TEST_CASE("records json is byte identical across runs of one config") {
  const ExperimentSpec spec = cheap_cell();
  const fs::path p1 = tmp_file("eecsim_rec1.json");
  const fs::path p2 = tmp_file("eecsim_rec2.json");
  write_records_json(p1.string(), spec, run_experiment(spec));
  write_records_json(p2.string(), spec, run_experiment(spec));
  const std::string s1 = slurp(p1.string());
  CHECK(s1 == slurp(p2.string()));
  CHECK(s1.find("\"converged\": true") != std::string::npos);
  CHECK(s1.find("\"agent\": \"QL\"") != std::string::npos);
  fs::remove(p1);
  fs::remove(p2);
}

TEST_CASE("training log csv round trips the step stream deterministically") {
  const ExperimentSpec spec = cheap_cell();
  std::vector<TrainingLog> logs;
  run_experiment(spec, &logs);
  const fs::path p = tmp_file("eecsim_log.csv");
  write_training_log_csv(p.string(), logs[0]);
  const std::string text = slurp(p.string());
  CHECK(text.rfind("epoch,phase,real_steps,reward,loss", 0) == 0);
  // Header plus one row per recorded step.
  const size_t lines = static_cast<size_t>(std::count(text.begin(), text.end(), '\n'));
  CHECK(lines == logs[0].steps.size() + 1);
  write_training_log_csv(p.string(), logs[0]);
  CHECK(slurp(p.string()) == text);
  fs::remove(p);
}

TEST_CASE("compare_agents reports per family medians and ratios") {
  ExperimentSpec base = cheap_cell();
  base.seeds = {1, 2, 3};
  const CompareReport rep = compare_agents(base);
  REQUIRE(rep.cells.size() == 3);
  CHECK(rep.cells[0].agent == AgentKind::QL);
  CHECK(rep.cells[1].agent == AgentKind::DQN);
  CHECK(rep.cells[2].agent == AgentKind::HL);
  for (const auto& c : rep.cells) {
    CHECK(c.records.size() == 3);
    CHECK(c.median_steps > 0.0);
  }
  const double hl = rep.cells[2].median_steps;
  CHECK(rep.ql_over_hl == doctest::Approx(rep.cells[0].median_steps / hl));
  CHECK(rep.dqn_over_hl == doctest::Approx(rep.cells[1].median_steps / hl));
}

TEST_CASE("oracle pareto rows cover the constraint ladder in order") {
  const auto rows =
      oracle_pareto_rows('A', 2, experiment_params(), ModelCatalog::standard());
  REQUIRE(rows.size() == 5);
  CHECK(rows[0].cnst == "Min");
  CHECK(rows[4].cnst == "Max");
  for (size_t i = 1; i < rows.size(); ++i) CHECK(rows[i].art >= rows[i - 1].art - 1e-9);
  CHECK(rows[0].art == doctest::Approx(72.0));
  for (const auto& r : rows) {
    CHECK(r.scenario == 'A');
    CHECK(r.actions.size() == 2);
  }
}

TEST_CASE("pareto csv is byte stable and quotes decision cells") {
  const auto rows =
      oracle_pareto_rows('A', 2, experiment_params(), ModelCatalog::standard());
  const fs::path p = tmp_file("eecsim_pareto.csv");
  write_pareto_csv(p.string(), rows, 2);
  const std::string text = slurp(p.string());
  write_pareto_csv(p.string(), rows, 2);
  CHECK(slurp(p.string()) == text);
  CHECK(text.rfind("Exp,Cnst,S1,S2,ART(ms),AA(%)", 0) == 0);
  CHECK(text.find("\"d7,L\"") != std::string::npos);
  CHECK(text.find("72.00") != std::string::npos);
  fs::remove(p);
}

TEST_CASE("policy_pareto_row labels a joint configuration") {
  JointConfiguration cfg;
  cfg.actions = {7, 9};
  cfg.art = 123.0;
  cfg.aa = 81.35;
  const ParetoRow row = policy_pareto_row('C', "85%", cfg);
  CHECK(row.scenario == 'C');
  CHECK(row.cnst == "85%");
  CHECK(row.actions == cfg.actions);
  CHECK(row.art == doctest::Approx(123.0));
  CHECK(row.aa == doctest::Approx(81.35));
}

TEST_CASE("config file overrides spec fields and rejects bad paths") {
  ExperimentSpec spec = cheap_cell();
  const fs::path p = tmp_file("eecsim_cfg.json");
  {
    std::ofstream f(p);
    f << R"({"budget": 1234, "window": 7, "eval_every": 50,
             "seeds": [11, 12],
             "agent_config": {"lr": 0.5, "td_clip": 0.125, "buffer_capacity": 2048},
             "schedule": {"epochs": 9, "n_plan": 77}})";
  }
  apply_config_file(spec, p.string());
  CHECK(spec.budget == 1234);
  CHECK(spec.window == 7);
  CHECK(spec.eval_every == 50);
  CHECK(spec.seeds == std::vector<uint64_t>{11, 12});
  CHECK(spec.config.lr == doctest::Approx(0.5));
  CHECK(spec.config.td_clip == doctest::Approx(0.125));
  CHECK(spec.config.buffer_capacity == 2048);
  CHECK(spec.schedule.epochs == 9);
  CHECK(spec.schedule.n_plan == 77);
  // Untouched fields keep their defaults.
  CHECK(spec.config.gamma == doctest::Approx(0.9));
  CHECK(spec.schedule.n_direct == 20);
  CHECK_THROWS(apply_config_file(spec, "/nonexistent/eecsim.json"));
  fs::remove(p);
}

TEST_CASE("extract_policy reads one aligned greedy round") {
  // A hand-built tabular agent that prefers a distinct action per device.
  const SimParams params = experiment_params();
  SimEnvAdapter env(Topology::scenario('A', 2), params, ModelCatalog::standard(),
                    AccuracyConstraint::make(ConstraintLabel::Min, ModelCatalog::standard()), 7);
  QTableAgent agent(kActionCount, AgentConfig{});
  // Teach the table: device 0 cheapest at 7, device 1 cheapest at 9. States are
  // visited lazily, so prime every key seen along a short greedy walk instead.
  for (int i = 0; i < 64; ++i) {
    const uint64_t k = env.key();
    const int want = env.sim().next_device() == 0 ? 7 : 9;
    for (int a = 0; a < kActionCount; ++a) agent.update(k, a, a == want ? 0.0 : 500.0, 1);
    env.step_enc(want);
  }
  const auto actions = extract_policy(agent, env);
  CHECK(actions == std::vector<int>{7, 9});
}

TEST_CASE("check_suite passes and prints one line per probe") {
  std::ostringstream out;
  CHECK(check_suite(out));
  const std::string text = out.str();
  CHECK(text.find("FAIL") == std::string::npos);
  CHECK(std::count(text.begin(), text.end(), '\n') >= 5);
}

TEST_CASE("cli entry point handles help, bad flags, and strict mode") {
  {
    const char* argv[] = {"eecsim", "--help"};
    CHECK(cli_main(2, const_cast<char**>(argv)) == 0);
  }
  {
    const char* argv[] = {"eecsim", "train", "--no-such-flag"};
    CHECK(cli_main(3, const_cast<char**>(argv)) != 0);
  }
  {
    // Zero budget cannot converge; strict mode turns that into exit code 2.
    const fs::path dir = fs::temp_directory_path() / "eecsim_cli_out";
    const std::string dir_s = dir.string();
    const char* argv[] = {"eecsim",      "train", "--scenario", "A",   "--users",
                          "1",           "--constraint", "Min", "--agent", "QL",
                          "--seeds",     "1",     "--budget",   "0",   "--strict",
                          "--out",       dir_s.c_str()};
    CHECK(cli_main(17, const_cast<char**>(argv)) == 2);
    fs::remove_all(dir);
  }
}
