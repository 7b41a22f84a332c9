#include "eecsim/agents.hpp"

#include <algorithm>
#include <cctype>
#include <stdexcept>

namespace eecsim {

std::string to_string(AgentKind k) {
  switch (k) {
    case AgentKind::QL: return "QL";
    case AgentKind::DQN: return "DQN";
    case AgentKind::HL: return "HL";
  }
  return "?";
}

AgentKind agent_kind_from_string(const std::string& s) {
  std::string t;
  for (char c : s) t.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  if (t == "ql" || t == "tabular") return AgentKind::QL;
  if (t == "dqn" || t == "dql") return AgentKind::DQN;
  if (t == "hl" || t == "hybrid") return AgentKind::HL;
  throw std::invalid_argument("unknown agent kind: " + s);
}

std::string to_string(Phase p) {
  switch (p) {
    case Phase::Direct: return "direct";
    case Phase::Model: return "model";
    case Phase::Planning: return "planning";
  }
  return "?";
}

HybridSchedule HybridSchedule::degenerate() const {
  HybridSchedule d = *this;
  d.n_world = 0;
  d.n_suggest = 0;
  d.n_plan = 0;
  d.alpha_override = 0.0;
  return d;
}

double hybrid_alpha(int epoch, int n_epochs) {
  return static_cast<double>(epoch) / static_cast<double>(n_epochs);
}

int scaled_sessions_shrinking(int base, int epoch, int n_epochs) {
  if (base <= 0) return 0;
  const long num = static_cast<long>(base) * (2L * n_epochs - epoch);
  const long den = 2L * n_epochs;
  return static_cast<int>((num + den - 1) / den);
}

int scaled_sessions_growing(int base, int epoch, int n_epochs) {
  if (base <= 0) return 0;
  const long num = static_cast<long>(base) * (n_epochs + epoch);
  const long den = 2L * n_epochs;
  return static_cast<int>((num + den - 1) / den);
}

int scaled_sessions(int base, double factor) {
  if (base <= 0) return 0;
  // The nudge keeps exact integer products (computed inexactly in binary,
  // e.g. 20 * 0.7) from ceiling up to the next count.
  return static_cast<int>(std::ceil(static_cast<double>(base) * factor - 1e-9));
}

long planned_direct_steps(const HybridSchedule& sched) {
  long total = 0;
  for (int e = 1; e <= sched.epochs; ++e) {
    const int sessions =
        sched.alpha_override
            ? scaled_sessions(sched.n_direct, 1.0 - *sched.alpha_override / 2.0)
            : scaled_sessions_shrinking(sched.n_direct, e, sched.epochs);
    total += static_cast<long>(sessions) * sched.t_direct;
  }
  return total;
}

AnnealSchedule derive_anneal(const AgentConfig& cfg, const HybridSchedule& sched) {
  AnnealSchedule ann;
  ann.eps_start = cfg.eps_start;
  ann.eps_end = cfg.eps_end;
  ann.beta_start = cfg.beta_start;
  const long planned = planned_direct_steps(sched);
  ann.eps_steps = cfg.eps_anneal_steps > 0 ? cfg.eps_anneal_steps : std::max<long>(1, planned / 2);
  ann.beta_steps = cfg.beta_anneal_steps > 0 ? cfg.beta_anneal_steps : std::max<long>(1, planned);
  return ann;
}

int argmin_index(const std::vector<double>& values) {
  if (values.empty()) throw std::invalid_argument("argmin of empty vector");
  int best = 0;
  for (int i = 1; i < static_cast<int>(values.size()); ++i)
    if (values[static_cast<size_t>(i)] < values[static_cast<size_t>(best)]) best = i;
  return best;
}

int select_from_costs(const std::vector<double>& values, double eps, std::mt19937_64& rng) {
  if (eps < 0.0 || eps > 1.0) throw std::invalid_argument("epsilon outside [0,1]");
  if (rand_unit(rng) < eps) return rand_index(rng, static_cast<int>(values.size()));
  return argmin_index(values);
}

QTableAgent::QTableAgent(int n_actions, AgentConfig cfg) : n_actions_(n_actions), cfg_(std::move(cfg)) {
  if (n_actions_ < 1) throw std::invalid_argument("need at least one action");
}

std::vector<double> QTableAgent::row(uint64_t key) const {
  auto it = table_.find(key);
  if (it == table_.end()) return std::vector<double>(static_cast<size_t>(n_actions_), 0.0);
  return it->second;
}

int QTableAgent::select(uint64_t key, double eps, std::mt19937_64& rng) const {
  return select_from_costs(row(key), eps, rng);
}

int QTableAgent::greedy(uint64_t key) const { return argmin_index(row(key)); }

double QTableAgent::q(uint64_t key, int action) const {
  auto it = table_.find(key);
  return it == table_.end() ? 0.0 : it->second[static_cast<size_t>(action)];
}

void QTableAgent::update(uint64_t key, int action, double reward, uint64_t next_key) {
  double next_min = 0.0;
  auto nx = table_.find(next_key);
  if (nx != table_.end()) next_min = *std::min_element(nx->second.begin(), nx->second.end());
  auto& r = table_[key];
  if (r.empty()) r.assign(static_cast<size_t>(n_actions_), 0.0);
  double& qv = r[static_cast<size_t>(action)];
  qv += cfg_.tabular_lr * (reward + cfg_.gamma * next_min - qv);
}

DQNAgent::DQNAgent(int in_dim, int n_actions, AgentConfig cfg, uint64_t seed)
    : DQNAgent(in_dim, n_actions, std::move(cfg), std::mt19937_64(seed)) {}

DQNAgent::DQNAgent(int in_dim, int n_actions, AgentConfig cfg, std::mt19937_64&& rng)
    : in_dim_(in_dim),
      n_actions_(n_actions),
      cfg_(std::move(cfg)),
      q_(NetworkParams::init({in_dim, cfg_.hidden, cfg_.hidden, n_actions}, rng)),
      target_(q_),
      adam_(AdamState::like(q_, cfg_.lr)),
      grad_(Gradients::like(q_)),
      d_direct_(cfg_.buffer_capacity, cfg_.per_alpha, cfg_.per_eps),
      d_world_(cfg_.buffer_capacity) {}

std::vector<double> DQNAgent::q_values(const std::vector<double>& enc) const {
  return forward(q_, enc);
}

int DQNAgent::select(const std::vector<double>& enc, double eps, std::mt19937_64& rng) const {
  return select_from_costs(q_values(enc), eps, rng);
}

int DQNAgent::greedy(const std::vector<double>& enc) const { return argmin_index(q_values(enc)); }

void DQNAgent::observe(const Transition& t) {
  d_direct_.push(t);
  d_world_.push(t);
}

double DQNAgent::td_target(const Transition& t) const {
  const std::vector<double> next = forward(target_, t.s2);
  const double next_min = *std::min_element(next.begin(), next.end());
  return cfg_.value_scale * t.reward + cfg_.gamma * next_min;
}

DQNAgent::QBatch DQNAgent::q_update_batch(const std::vector<const Transition*>& batch,
                                          const std::vector<double>& weights) {
  const size_t b = batch.size();
  std::vector<std::vector<double>> xs(b);
  std::vector<std::vector<double>> targets(b);
  std::vector<double> tvals(b);
  for (size_t i = 0; i < b; ++i) {
    const Transition& t = *batch[i];
    xs[i] = t.s;
    targets[i] = forward(q_, t.s);
    double tv = td_target(t);
    if (cfg_.td_clip > 0.0) {
      const double pred = targets[i][static_cast<size_t>(t.action)];
      tv = pred - std::clamp(pred - tv, -cfg_.td_clip, cfg_.td_clip);
    }
    tvals[i] = tv;
    targets[i][static_cast<size_t>(t.action)] = tv;
  }
  QBatch out;
  out.loss = backward_batch(q_, xs, targets, weights, grad_);
  adam_update(q_, grad_, adam_);
  out.new_tds.resize(b);
  for (size_t i = 0; i < b; ++i) {
    const std::vector<double> y = forward(q_, xs[i]);
    out.new_tds[i] = tvals[i] - y[static_cast<size_t>(batch[i]->action)];
  }
  return out;
}

double DQNAgent::learn_direct(double beta, std::mt19937_64& rng) {
  const size_t need = static_cast<size_t>(std::max(cfg_.minibatch, cfg_.warmup));
  if (d_direct_.size() < need) return std::numeric_limits<double>::quiet_NaN();
  const Draw draw = d_direct_.sample(static_cast<size_t>(cfg_.minibatch), beta, rng);
  std::vector<const Transition*> batch(draw.indices.size());
  for (size_t i = 0; i < draw.indices.size(); ++i) batch[i] = &d_direct_.at(draw.indices[i]);
  const QBatch res = q_update_batch(batch, draw.weights);
  d_direct_.update_priorities(draw.indices, res.new_tds);
  return res.loss;
}

void DQNAgent::sync_target() { target_ = q_; }

void DQNAgent::save(const std::string& path_prefix) const {
  q_.save(path_prefix + "_q.txt");
  target_.save(path_prefix + "_target.txt");
}

void DQNAgent::load(const std::string& path_prefix) {
  q_ = NetworkParams::load(path_prefix + "_q.txt");
  target_ = NetworkParams::load(path_prefix + "_target.txt");
}

HybridAgent::HybridAgent(int in_dim, int n_actions, AgentConfig cfg, uint64_t seed)
    : HybridAgent(in_dim, n_actions, std::move(cfg), std::mt19937_64(seed)) {}

HybridAgent::HybridAgent(int in_dim, int n_actions, AgentConfig cfg, std::mt19937_64 rng)
    : DQNAgent(in_dim, n_actions, std::move(cfg), std::move(rng)),
      sys_(NetworkParams::init({in_dim + n_actions, cfg_.hidden, cfg_.hidden, 1 + in_dim}, rng)),
      sys_adam_(AdamState::like(sys_, cfg_.sys_lr)),
      sys_grad_(Gradients::like(sys_)),
      d_plan_(n_actions, cfg_.per_alpha, cfg_.per_eps) {}

std::vector<double> HybridAgent::system_input(const std::vector<double>& enc, int action) const {
  if (action < 0 || action >= n_actions_) throw std::invalid_argument("action out of range");
  std::vector<double> x(enc.size() + static_cast<size_t>(n_actions_), 0.0);
  std::copy(enc.begin(), enc.end(), x.begin());
  x[enc.size() + static_cast<size_t>(action)] = 1.0;
  return x;
}

double HybridAgent::predict_cost(const std::vector<double>& enc, int action) const {
  return forward(sys_, system_input(enc, action))[0] / (cfg_.value_scale * cfg_.sys_reward_boost);
}

std::vector<double> HybridAgent::predict_next(const std::vector<double>& enc, int action) const {
  const std::vector<double> out = forward(sys_, system_input(enc, action));
  return std::vector<double>(out.begin() + 1, out.end());
}

std::vector<int> HybridAgent::suggest_actions(const std::vector<double>& enc, int k) const {
  if (k < 1 || k > n_actions_) throw std::invalid_argument("k outside [1, n_actions]");
  std::vector<double> cost(static_cast<size_t>(n_actions_));
  for (int a = 0; a < n_actions_; ++a)
    cost[static_cast<size_t>(a)] = forward(sys_, system_input(enc, a))[0];
  std::vector<int> order(static_cast<size_t>(n_actions_));
  for (int a = 0; a < n_actions_; ++a) order[static_cast<size_t>(a)] = a;
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    const double ca = cost[static_cast<size_t>(a)];
    const double cb = cost[static_cast<size_t>(b)];
    return ca < cb || (ca == cb && a < b);
  });
  order.resize(static_cast<size_t>(k));
  return order;
}

double HybridAgent::learn_system(std::mt19937_64& rng) {
  if (d_world_.size() < static_cast<size_t>(cfg_.minibatch))
    return std::numeric_limits<double>::quiet_NaN();
  const std::vector<size_t> idx = d_world_.sample(static_cast<size_t>(cfg_.minibatch), rng);
  const size_t b = idx.size();
  std::vector<std::vector<double>> xs(b);
  std::vector<std::vector<double>> targets(b);
  const std::vector<double> ones(b, 1.0);
  for (size_t i = 0; i < b; ++i) {
    const Transition& t = d_world_.at(idx[i]);
    xs[i] = system_input(t.s, t.action);
    targets[i].reserve(1 + t.s2.size());
    targets[i].push_back(cfg_.value_scale * cfg_.sys_reward_boost * t.reward);
    targets[i].insert(targets[i].end(), t.s2.begin(), t.s2.end());
  }
  const double loss = backward_batch(sys_, xs, targets, ones, sys_grad_);
  adam_update(sys_, sys_grad_, sys_adam_);
  return loss;
}

double HybridAgent::learn_plan(double beta, std::mt19937_64& rng) {
  if (d_plan_.size() == 0) return std::numeric_limits<double>::quiet_NaN();
  const Draw draw = d_plan_.sample(static_cast<size_t>(cfg_.minibatch), beta, rng);
  std::vector<const Transition*> batch(draw.indices.size());
  for (size_t i = 0; i < draw.indices.size(); ++i)
    batch[i] = &d_plan_.slot(static_cast<int>(draw.indices[i]));
  const QBatch res = q_update_batch(batch, draw.weights);
  d_plan_.update_priorities(draw.indices, res.new_tds);
  return res.loss;
}

void HybridAgent::save(const std::string& path_prefix) const {
  DQNAgent::save(path_prefix);
  sys_.save(path_prefix + "_system.txt");
}

void HybridAgent::load(const std::string& path_prefix) {
  DQNAgent::load(path_prefix);
  sys_ = NetworkParams::load(path_prefix + "_system.txt");
}

}  // namespace eecsim
