// End-to-end acceptance gate. Each numbered criterion prints exactly one
// PASS/FAIL line on stdout; the process exits nonzero when any fail.
// Progress chatter goes to stderr so the verdict block stays clean.
#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "eecsim/harness.hpp"

using namespace eecsim;
namespace fs = std::filesystem;

namespace {

struct Verdict {
  int num;
  std::string label;
  bool pass;
  std::string detail;
};

std::vector<Verdict> g_verdicts;

void record(int num, const std::string& label, bool pass, const std::string& detail) {
  g_verdicts.push_back({num, label, pass, detail});
  std::cerr << "[criterion " << num << "] " << (pass ? "pass" : "FAIL") << ": " << detail << "\n";
}

double elapsed_s(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string slurp(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

// ---------------------------------------------------------------- training
// Criteria 1 and 2 share one trained matrix, so the expensive runs happen
// once. Cell keys are "<scenario>/<constraint>/<agent>".

constexpr int kSeedCount = 5;
constexpr long kBudgetN3 = 50000;
constexpr long kBudgetN5 = 200000;

const std::vector<std::string> kConstraints = {"Min", "80%", "85%", "89%", "Max"};
const std::vector<char> kScenarios = {'A', 'B', 'C', 'D'};

std::vector<ConvergenceRecord> run_cell(char scenario, int n, const std::string& cnst,
                                        AgentKind agent, long budget) {
  ExperimentSpec spec;
  spec.scenario = scenario;
  spec.n_devices = n;
  spec.constraint = cnst;
  spec.agent = agent;
  spec.seeds = first_seeds(kSeedCount);
  spec.budget = budget;
  const auto t0 = std::chrono::steady_clock::now();
  auto records = run_experiment(spec);
  int conv = 0;
  for (const auto& r : records) conv += r.converged ? 1 : 0;
  std::cerr << "  " << to_string(agent) << " " << scenario << "/" << cnst << " n=" << n << ": "
            << conv << "/" << records.size() << " converged, " << elapsed_s(t0) << "s\n";
  return records;
}

double pooled_median_steps(const std::vector<const std::vector<ConvergenceRecord>*>& cells) {
  std::vector<double> steps;
  for (const auto* c : cells)
    for (const auto& r : *c) steps.push_back(static_cast<double>(r.real_env_steps));
  return median(steps);
}

void criteria_1_and_2() {
  std::map<std::string, std::vector<ConvergenceRecord>> matrix;
  for (char sc : kScenarios)
    for (const auto& cnst : kConstraints)
      for (AgentKind ag : {AgentKind::DQN, AgentKind::HL})
        matrix[std::string(1, sc) + "/" + cnst + "/" + to_string(ag)] =
            run_cell(sc, 3, cnst, ag, kBudgetN3);

  // Criterion 1: per seed, the number of cells whose DQN and HL greedy
  // policies both cost-match the enumerated optimum.
  std::vector<double> per_seed(kSeedCount, 0.0);
  for (char sc : kScenarios)
    for (const auto& cnst : kConstraints) {
      const auto& dqn = matrix[std::string(1, sc) + "/" + cnst + "/DQN"];
      const auto& hl = matrix[std::string(1, sc) + "/" + cnst + "/HL"];
      for (int s = 0; s < kSeedCount; ++s)
        if (dqn[s].final_match.cost_match && hl[s].final_match.cost_match) per_seed[s] += 1.0;
    }
  bool all19 = true;
  for (double c : per_seed) all19 = all19 && c >= 19.0;
  const double med = median(per_seed);
  std::ostringstream d1;
  d1 << "cells matched per seed:";
  for (double c : per_seed) d1 << " " << c;
  d1 << " (median " << med << ")";
  record(1, "oracle agreement, 20-cell matrix", all19 && med == 20.0, d1.str());

  // Criterion 2: pooled median real steps over scenario A, constraints
  // {Min, 80%, 85%, Max}, per agent family; then the n=5 spot check.
  const std::vector<std::string> four = {"Min", "80%", "85%", "Max"};
  std::map<std::string, std::vector<ConvergenceRecord>> ql;
  for (const auto& cnst : four) ql[cnst] = run_cell('A', 3, cnst, AgentKind::QL, kBudgetN3);

  std::vector<const std::vector<ConvergenceRecord>*> hl_cells, dqn_cells, ql_cells;
  for (const auto& cnst : four) {
    hl_cells.push_back(&matrix["A/" + cnst + "/HL"]);
    dqn_cells.push_back(&matrix["A/" + cnst + "/DQN"]);
    ql_cells.push_back(&ql[cnst]);
  }
  const double hl_med = pooled_median_steps(hl_cells);
  const double dqn_med = pooled_median_steps(dqn_cells);
  const double ql_med = pooled_median_steps(ql_cells);

  const auto ql5 = run_cell('A', 5, "Min", AgentKind::QL, kBudgetN5);
  const auto hl5 = run_cell('A', 5, "Min", AgentKind::HL, kBudgetN5);
  std::vector<double> ql5_steps, hl5_steps;
  for (const auto& r : ql5) ql5_steps.push_back(static_cast<double>(r.real_env_steps));
  for (const auto& r : hl5) hl5_steps.push_back(static_cast<double>(r.real_env_steps));
  const double ql5_med = median(ql5_steps);
  const double hl5_med = median(hl5_steps);

  const bool pass = hl_med <= dqn_med / 3.0 && hl_med <= ql_med / 3.0 &&
                    hl5_med <= ql5_med / 10.0;
  std::ostringstream d2;
  d2 << "n=3 medians HL " << hl_med << " vs DQN " << dqn_med << " vs QL " << ql_med
     << "; n=5 Min HL " << hl5_med << " vs QL " << ql5_med;
  record(2, "hybrid sample efficiency", pass, d2.str());
}

// ---------------------------------------------------------------- criterion 3

void criterion_3() {
  const ModelCatalog cat = ModelCatalog::standard();
  const double macs[8] = {569, 317, 150, 41, 569, 317, 150, 41};
  const double acc[8] = {89.9, 88.2, 84.9, 74.2, 88.9, 87.0, 83.2, 72.8};
  const Precision prec[8] = {Precision::FP32, Precision::FP32, Precision::FP32, Precision::FP32,
                             Precision::Int8, Precision::Int8, Precision::Int8, Precision::Int8};
  bool rows = static_cast<int>(cat.models().size()) == 8;
  for (int i = 0; rows && i < 8; ++i) {
    const InferenceModel& m = cat.model(i);
    rows = m.id == i && m.macs == macs[i] && m.accuracy == acc[i] && m.precision == prec[i] &&
           m.mem_footprint == footprint_for(macs[i], prec[i]);
  }

  // Anchor means from the published ladder.
  const bool anchors = std::abs(configuration_accuracy({7, 7, 7}, cat) - 72.80) <= 0.01 &&
                       std::abs(configuration_accuracy({8, 9, 9}, cat) - 89.90) <= 0.01 &&
                       std::abs(configuration_accuracy({4, 4, 4, 0, 4}, cat) - 89.10) <= 0.01;

  // Every emitted report row must carry AA equal to the mean accuracy of its
  // listed models, to a hundredth.
  bool aa_ok = true;
  const SimParams params = experiment_params();
  for (char sc : kScenarios) {
    const auto rws = oracle_pareto_rows(sc, 3, params, cat);
    for (const auto& row : rws) {
      double mean = 0.0;
      for (int a : row.actions) mean += cat.model(OrchestrationAction(a).model_id()).accuracy;
      mean /= static_cast<double>(row.actions.size());
      aa_ok = aa_ok && std::abs(row.aa - mean) <= 0.01;
    }
  }
  record(3, "catalog and report accuracy columns", rows && anchors && aa_ok,
         rows ? (anchors ? (aa_ok ? "8 rows, anchors, and AA means check out"
                                  : "report AA diverges from model means")
                         : "anchor means off")
              : "catalog rows differ");
}

// ---------------------------------------------------------------- criterion 4

void criterion_4() {
  const ModelCatalog cat = ModelCatalog::standard();
  const SimParams params = experiment_params();
  bool monotone = true;
  double a85 = 0.0, a89 = 0.0;
  for (char sc : kScenarios) {
    const auto rows = oracle_pareto_rows(sc, 3, params, cat);
    for (size_t i = 1; i < rows.size(); ++i)
      monotone = monotone && rows[i].art >= rows[i - 1].art - 1e-9;
    if (sc == 'A') {
      a85 = rows[2].art;
      a89 = rows[3].art;
    }
  }
  const double gap = (a89 - a85) / a85;
  std::ostringstream d;
  d << "ladders non-decreasing; A 85->89 gap " << gap * 100.0 << "%";
  record(4, "constraint ladder shape", monotone && gap >= 0.30, d.str());
}

// ---------------------------------------------------------------- criterion 5

// Response time of the only device in a 1-user topology, after `rounds`
// warm rounds of a fixed action. Solo execution keeps queues empty, so the
// response is a pure sum of payload, link, and compute terms.
double solo_response(const Topology& topo, int action) {
  SimEnvironment env(topo, experiment_params(), ModelCatalog::standard());
  env.reset(1);
  const AccuracyConstraint cnst =
      AccuracyConstraint::make(ConstraintLabel::Min, ModelCatalog::standard());
  double last = 0.0;
  for (int i = 0; i < 4; ++i) {
    env.step(OrchestrationAction(action), cnst);
    last = env.trace().back().response_ms;
  }
  return last;
}

void criterion_5() {
  Topology reg = Topology::scenario('A', 1);
  Topology dev_weak = reg;
  dev_weak.device_links[0] = LinkQuality::Weak;
  Topology up_weak = reg;
  up_weak.edge_link = LinkQuality::Weak;
  Topology both_weak = dev_weak;
  both_weak.edge_link = LinkQuality::Weak;

  bool ok = true;
  // Edge offload crosses the device link out and back: one +20 each way.
  ok = ok && solo_response(dev_weak, 8) - solo_response(reg, 8) == 40.0;
  // Cloud offload via a weak device link: same two traversals.
  ok = ok && solo_response(dev_weak, 9) - solo_response(reg, 9) == 40.0;
  // Cloud offload via a weak uplink: two uplink traversals.
  ok = ok && solo_response(up_weak, 9) - solo_response(reg, 9) == 40.0;
  // Both links weak: four weak traversals on the cloud path.
  ok = ok && solo_response(both_weak, 9) - solo_response(reg, 9) == 80.0;
  // A weak uplink is off the edge path entirely.
  ok = ok && solo_response(up_weak, 8) == solo_response(reg, 8);
  // Local execution never touches a link.
  for (int a = 0; a < 8; ++a)
    ok = ok && solo_response(both_weak, a) == solo_response(reg, a);
  record(5, "weak link arithmetic", ok, "20ms per traversal per direction, locals invariant");
}

// ---------------------------------------------------------------- criterion 6

double batch_loss(const NetworkParams& net, const std::vector<std::vector<double>>& xs,
                  const std::vector<std::vector<double>>& ts, const std::vector<double>& ws) {
  double total = 0.0;
  for (size_t i = 0; i < xs.size(); ++i) {
    const std::vector<double> y = forward(net, xs[i]);
    double e = 0.0;
    for (size_t k = 0; k < y.size(); ++k) e += (y[k] - ts[i][k]) * (y[k] - ts[i][k]);
    total += ws[i] * e;
  }
  return total / static_cast<double>(xs.size());
}

void criterion_6() {
  // Backprop vs central differences over 100 random shapes.
  std::mt19937_64 rng(123);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  const double h = 1e-5;
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const int in = 1 + static_cast<int>(rng() % 4);
    const int hid = 2 + static_cast<int>(rng() % 5);
    const int out = 1 + static_cast<int>(rng() % 3);
    NetworkParams net = NetworkParams::init({in, hid, out}, rng);
    for (double& w : net.W[1]) w = 0.5 * unit(rng);
    for (double& b : net.b[1]) b = 0.5 * unit(rng);
    const size_t batch = 1 + rng() % 3;
    std::vector<std::vector<double>> xs(batch), ts(batch);
    std::vector<double> ws(batch);
    for (size_t i = 0; i < batch; ++i) {
      xs[i].resize(in);
      ts[i].resize(out);
      for (double& v : xs[i]) v = unit(rng);
      for (double& v : ts[i]) v = unit(rng);
      ws[i] = 0.25 + 0.75 * std::abs(unit(rng));
    }
    Gradients g = Gradients::like(net);
    backward_batch(net, xs, ts, ws, g);
    for (size_t layer = 0; layer < net.layers(); ++layer) {
      for (size_t j = 0; j < net.W[layer].size(); ++j) {
        const double keep = net.W[layer][j];
        net.W[layer][j] = keep + h;
        const double up = batch_loss(net, xs, ts, ws);
        net.W[layer][j] = keep - h;
        const double dn = batch_loss(net, xs, ts, ws);
        net.W[layer][j] = keep;
        const double fd = (up - dn) / (2.0 * h);
        const double scale = std::max({std::abs(fd), std::abs(g.W[layer][j]), 1e-3});
        worst = std::max(worst, std::abs(fd - g.W[layer][j]) / scale);
      }
      for (size_t j = 0; j < net.b[layer].size(); ++j) {
        const double keep = net.b[layer][j];
        net.b[layer][j] = keep + h;
        const double up = batch_loss(net, xs, ts, ws);
        net.b[layer][j] = keep - h;
        const double dn = batch_loss(net, xs, ts, ws);
        net.b[layer][j] = keep;
        const double fd = (up - dn) / (2.0 * h);
        const double scale = std::max({std::abs(fd), std::abs(g.b[layer][j]), 1e-3});
        worst = std::max(worst, std::abs(fd - g.b[layer][j]) / scale);
      }
    }
  }
  const bool grad_ok = worst < 1e-4;

  // Hand-computed first Adam step: theta=0, g=1 -> -lr/sqrt(1+eps).
  NetworkParams net = NetworkParams::zeros({1, 1});
  Gradients g = Gradients::like(net);
  g.W[0][0] = 1.0;
  AdamState st = AdamState::like(net, 1e-3);
  adam_update(net, g, st);
  const bool adam_ok = std::abs(net.W[0][0] - (-9.99999995e-4)) < 1e-12;

  // Prioritized sampling frequency law, chi-square at 95% over 1e5 draws.
  const size_t k = 8;
  PrioritizedBuffer buf(k, 0.6, 1e-3);
  for (size_t i = 0; i < k; ++i)
    buf.push(Transition{{0.0}, static_cast<int>(i), 0.0, {0.0}});
  std::vector<double> tds(k);
  std::vector<size_t> idx(k);
  for (size_t i = 0; i < k; ++i) {
    idx[i] = i;
    tds[i] = static_cast<double>(i + 1);
  }
  buf.update_priorities(idx, tds);
  double total_p = 0.0;
  std::vector<double> p(k);
  for (size_t i = 0; i < k; ++i) {
    p[i] = std::pow(static_cast<double>(i + 1) + 1e-3, 0.6);
    total_p += p[i];
  }
  std::mt19937_64 srng(2024);
  const size_t draws = 100000;
  std::vector<size_t> count(k, 0);
  for (size_t rep = 0; rep < draws / 100; ++rep)
    for (size_t i : buf.sample(100, 0.4, srng).indices) ++count[i];
  double chi2 = 0.0;
  for (size_t i = 0; i < k; ++i) {
    const double expect = static_cast<double>(draws) * p[i] / total_p;
    const double d = static_cast<double>(count[i]) - expect;
    chi2 += d * d / expect;
  }
  const bool chi_ok = chi2 < 14.067;  // 95th percentile, 7 degrees of freedom

  std::ostringstream d6;
  d6 << "gradcheck worst " << worst << ", adam step exact " << (adam_ok ? "yes" : "no")
     << ", chi2 " << chi2;
  record(6, "numeric substrate", grad_ok && adam_ok && chi_ok, d6.str());
}

// ---------------------------------------------------------------- criterion 7

void criterion_7() {
  // Phase-mix exponent and session rounding, checked in exact arithmetic.
  bool alpha_ok = true;
  for (int n : {1, 7, 50, 300})
    for (int e = 1; e <= n; ++e)
      alpha_ok = alpha_ok && hybrid_alpha(e, n) == static_cast<double>(e) / n;
  bool sess_ok = true;
  for (int n : {2, 50, 150})
    for (int e = 1; e <= n; ++e)
      for (int base : {0, 1, 10, 20, 200}) {
        // ceil(base*(1-a/2)) = ceil(base*(2n-e)/(2n)) in integers.
        const long num_s = static_cast<long>(base) * (2L * n - e);
        const long shrink = (num_s + 2L * n - 1) / (2L * n);
        // ceil(base*(a+1)/2) = ceil(base*(e+n)/(2n)).
        const long num_g = static_cast<long>(base) * (e + static_cast<long>(n));
        const long grow = (num_g + 2L * n - 1) / (2L * n);
        sess_ok = sess_ok && scaled_sessions_shrinking(base, e, n) == shrink &&
                  scaled_sessions_growing(base, e, n) == grow;
      }

  // Degenerate schedule: the hybrid loop with model and planning phases
  // emptied must reproduce the DQN baseline step for step.
  const ModelCatalog cat = ModelCatalog::standard();
  const SimParams params = experiment_params();
  const AccuracyConstraint cnst = AccuracyConstraint::parse("80%", cat);
  HybridSchedule sched;
  sched.epochs = 4;
  sched.n_direct = 4;
  sched.t_direct = 20;
  const HybridSchedule degen = sched.degenerate();
  AgentConfig cfg;

  SimEnvAdapter env_d(Topology::scenario('A', 3), params, cat, cnst, 77);
  DQNAgent dqn(env_d.in_dim(), env_d.n_actions(), cfg, 321);
  const TrainingLog log_d = dqn_train(dqn, env_d, cfg, sched, 99);

  SimEnvAdapter env_h(Topology::scenario('A', 3), params, cat, cnst, 77);
  HybridAgent hl(env_h.in_dim(), env_h.n_actions(), cfg, 321);
  const TrainingLog log_h = hybrid_train(hl, env_h, cfg, degen, 99);

  bool twin = log_d.real_env_steps == log_h.real_env_steps &&
              log_d.q_updates == log_h.q_updates && log_h.probe_steps == 0 &&
              log_d.steps.size() == log_h.steps.size();
  for (size_t i = 0; twin && i < log_d.steps.size(); ++i)
    twin = log_d.steps[i].reward == log_h.steps[i].reward;
  twin = twin && extract_policy(dqn, env_d) == extract_policy(hl, env_h);

  // Real-step ledger: direct steps plus novel-action probes, nothing else.
  HybridSchedule full;
  full.epochs = 4;
  full.n_direct = 2;
  full.t_direct = 5;
  full.n_world = 5;
  full.n_suggest = 2;
  full.t_suggest = 2;
  full.n_plan = 5;
  full.k_best = 2;
  SimEnvAdapter env_f(Topology::scenario('A', 3), params, cat, cnst, 13);
  HybridAgent hf(env_f.in_dim(), env_f.n_actions(), cfg, 14);
  const TrainingLog log_f = hybrid_train(hf, env_f, cfg, full, 15);
  const bool ledger = log_f.real_env_steps == log_f.direct_steps + log_f.probe_steps &&
                      log_f.probe_steps == hf.plan_pool().size() &&
                      log_f.probe_steps <= env_f.n_actions() &&
                      log_f.target_syncs == 2L * full.epochs;

  std::ostringstream d7;
  d7 << (alpha_ok ? "alpha exact" : "alpha drifts") << ", "
     << (sess_ok ? "session rounding exact" : "session rounding off") << ", "
     << (twin ? "degenerate twin identical" : "degenerate twin diverged") << ", "
     << (ledger ? "step ledger consistent" : "step ledger broken");
  record(7, "schedule structure", alpha_ok && sess_ok && twin && ledger, d7.str());
}

// ---------------------------------------------------------------- criterion 8

void criterion_8() {
  bool ok = true;
  const fs::path base = fs::temp_directory_path() / "eecsim_accept_det";
  fs::remove_all(base);
  for (AgentKind ag : {AgentKind::DQN, AgentKind::HL, AgentKind::QL}) {
    ExperimentSpec spec;
    spec.scenario = 'B';
    spec.n_devices = 2;
    spec.constraint = ag == AgentKind::QL ? "Min" : "80%";
    spec.agent = ag;
    spec.seeds = {4, 9};
    spec.budget = 3000;
    std::array<std::string, 2> text;
    for (int pass = 0; pass < 2; ++pass) {
      const fs::path dir = base / (to_string(ag) + std::to_string(pass));
      fs::create_directories(dir);
      std::vector<TrainingLog> logs;
      const auto records = run_experiment(spec, &logs);
      write_records_json((dir / "records.json").string(), spec, records);
      std::vector<ParetoRow> rows;
      for (const auto& r : records)
        rows.push_back(policy_pareto_row(spec.scenario, spec.constraint, r.policy));
      write_pareto_csv((dir / "policy.csv").string(), rows, spec.n_devices);
      std::string all = slurp((dir / "records.json").string()) + slurp((dir / "policy.csv").string());
      for (size_t i = 0; i < logs.size(); ++i) {
        const fs::path lp = dir / ("log" + std::to_string(i) + ".csv");
        write_training_log_csv(lp.string(), logs[i]);
        all += slurp(lp.string());
      }
      text[static_cast<size_t>(pass)] = std::move(all);
    }
    ok = ok && !text[0].empty() && text[0] == text[1];
  }
  fs::remove_all(base);
  record(8, "byte-identical reports", ok, "records, policy, and log files repeat exactly");
}

}  // namespace

int main() {
  const auto t0 = std::chrono::steady_clock::now();
  criterion_3();
  criterion_4();
  criterion_5();
  criterion_6();
  criterion_7();
  criterion_8();
  criteria_1_and_2();

  std::sort(g_verdicts.begin(), g_verdicts.end(),
            [](const Verdict& a, const Verdict& b) { return a.num < b.num; });
  bool all = true;
  for (const Verdict& v : g_verdicts) {
    std::printf("%s criterion %d (%s): %s\n", v.pass ? "PASS" : "FAIL", v.num, v.label.c_str(),
                v.detail.c_str());
    all = all && v.pass;
  }
  std::printf("%s in %.0fs\n", all ? "ACCEPTED" : "REJECTED", elapsed_s(t0));
  return all ? 0 : 1;
}
