#include "eecsim/simenv.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace eecsim {

NodeSpec SimParams::end_spec() const {
  return {Tier::End, 1, end_thr_fp32, end_thr_fp32 * int8_speedup, end_mem};
}
NodeSpec SimParams::edge_spec() const {
  const double thr = end_thr_fp32 * edge_speed_mult;
  return {Tier::Edge, 2, thr, thr * int8_speedup, edge_mem};
}
NodeSpec SimParams::cloud_spec() const {
  const double thr = end_thr_fp32 * cloud_speed_mult;
  return {Tier::Cloud, 4, thr, thr * int8_speedup, cloud_mem};
}

Topology Topology::scenario(char id, int n) {
  if (n < 1 || n > 5) throw std::invalid_argument("scenario supports 1..5 devices");
  // Device columns S1..S5 plus the edge uplink, weak marked 1.
  static const struct {
    char id;
    int dev[5];
    int edge;
  } table[] = {
      {'A', {0, 0, 0, 0, 0}, 0},
      {'B', {0, 1, 0, 1, 0}, 1},
      {'C', {1, 1, 1, 0, 0}, 0},
      {'D', {1, 1, 1, 1, 1}, 1},
  };
  for (const auto& row : table) {
    if (row.id != id) continue;
    Topology t;
    t.n_devices = n;
    for (int i = 0; i < n; ++i)
      t.device_links.push_back(row.dev[i] ? LinkQuality::Weak : LinkQuality::Regular);
    t.edge_link = row.edge ? LinkQuality::Weak : LinkQuality::Regular;
    return t;
  }
  throw std::invalid_argument(std::string("unknown scenario: ") + id);
}

static LinkQuality link_from_string(const std::string& s) {
  if (s == "R" || s == "Regular" || s == "regular") return LinkQuality::Regular;
  if (s == "W" || s == "Weak" || s == "weak") return LinkQuality::Weak;
  throw std::invalid_argument("unknown link quality: " + s);
}

ScenarioSpec load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open scenario file: " + path);
  nlohmann::json j;
  in >> j;
  ScenarioSpec spec;
  spec.topology.n_devices = j.at("n_devices").get<int>();
  for (const auto& q : j.at("device_links"))
    spec.topology.device_links.push_back(link_from_string(q.get<std::string>()));
  spec.topology.edge_link = link_from_string(j.at("edge_link").get<std::string>());
  if (j.contains("constraint")) spec.constraint = j["constraint"].get<std::string>();
  if (j.contains("seed")) spec.seed = j["seed"].get<uint64_t>();
  return spec;
}

void save_scenario(const ScenarioSpec& spec, const std::string& path) {
  nlohmann::json j;
  j["n_devices"] = spec.topology.n_devices;
  auto links = nlohmann::json::array();
  for (auto q : spec.topology.device_links) links.push_back(q == LinkQuality::Weak ? "W" : "R");
  j["device_links"] = links;
  j["edge_link"] = spec.topology.edge_link == LinkQuality::Weak ? "W" : "R";
  j["constraint"] = spec.constraint;
  j["seed"] = spec.seed;
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write scenario file: " + path);
  out << j.dump(2) << "\n";
}

OrchestrationAction::OrchestrationAction(int idx) : index(idx) {
  if (idx < 0 || idx >= kActionCount)
    throw std::invalid_argument("action index out of range: " + std::to_string(idx));
}

Tier OrchestrationAction::target() const {
  if (index < 8) return Tier::End;
  return index == 8 ? Tier::Edge : Tier::Cloud;
}

std::string OrchestrationAction::name() const {
  const char where = index < 8 ? 'L' : (index == 8 ? 'E' : 'C');
  return "d" + std::to_string(model_id()) + "," + where;
}

std::vector<double> Observation::encode() const {
  std::vector<double> v;
  const size_t n = dev_cpu.size();
  v.reserve(3 * n + 6 + (requester ? 1 : 0));
  for (size_t i = 0; i < n; ++i) {
    v.push_back(dev_cpu[i]);
    v.push_back(dev_mem[i]);
    v.push_back(dev_link[i]);
  }
  v.push_back(edge_cpu / 8.0);
  v.push_back(edge_mem);
  v.push_back(edge_link);
  v.push_back(cloud_cpu / 8.0);
  v.push_back(cloud_mem);
  v.push_back(cloud_link);
  if (requester) {
    const double denom = n > 1 ? static_cast<double>(n - 1) : 1.0;
    v.push_back(*requester / denom);
  }
  return v;
}

uint64_t Observation::key() const {
  uint64_t k = 0;
  auto push = [&k](uint64_t value, int bits) { k = (k << bits) | value; };
  for (size_t i = 0; i < dev_cpu.size(); ++i) {
    push(dev_cpu[i], 1);
    push(dev_mem[i], 1);
    push(dev_link[i], 1);
  }
  push(edge_cpu, 4);
  push(edge_mem, 1);
  push(edge_link, 1);
  push(cloud_cpu, 4);
  push(cloud_mem, 1);
  push(cloud_link, 1);
  if (requester) push(*requester + 1, 3);
  return k;
}

int encoded_size(int n_devices, bool include_requester) {
  return 3 * n_devices + 6 + (include_requester ? 1 : 0);
}

std::vector<double> snap_encoding(std::vector<double> enc, int n_devices, bool include_requester) {
  if (enc.size() != static_cast<size_t>(encoded_size(n_devices, include_requester)))
    throw std::invalid_argument("snap_encoding: wrong vector length");
  auto snap_binary = [](double x) { return x < 0.5 ? 0.0 : 1.0; };
  auto snap_level = [](double x, int levels) {
    const double scaled = std::clamp(x, 0.0, 1.0) * levels;
    return std::round(scaled) / levels;
  };
  size_t i = 0;
  for (int d = 0; d < n_devices; ++d) {
    enc[i] = snap_binary(enc[i]);
    ++i;
    enc[i] = snap_binary(enc[i]);
    ++i;
    enc[i] = snap_binary(enc[i]);
    ++i;
  }
  enc[i] = snap_level(enc[i], 8);
  ++i;
  enc[i] = snap_binary(enc[i]);
  ++i;
  enc[i] = snap_binary(enc[i]);
  ++i;
  enc[i] = snap_level(enc[i], 8);
  ++i;
  enc[i] = snap_binary(enc[i]);
  ++i;
  enc[i] = snap_binary(enc[i]);
  ++i;
  if (include_requester) enc[i] = n_devices > 1 ? snap_level(enc[i], n_devices - 1) : 0.0;
  return enc;
}

SimEnvironment::SimEnvironment(Topology topo, SimParams params, ModelCatalog catalog)
    : topo_(std::move(topo)), params_(params), catalog_(std::move(catalog)) {
  if (topo_.n_devices < 1 || topo_.n_devices > 5)
    throw std::invalid_argument("n_devices must be within [1,5]");
  if (topo_.device_links.size() != static_cast<size_t>(topo_.n_devices))
    throw std::invalid_argument("device_links must list one quality per device");
}

Observation SimEnvironment::reset(uint64_t seed) {
  (void)seed;  // the dynamics are deterministic; kept for interface symmetry
  jobs_.assign(static_cast<size_t>(topo_.n_devices) + 2, {});
  resp_window_.clear();
  acc_window_.clear();
  step_count_ = 0;
  sim_time_ = 0.0;
  trace_.clear();
  ready_ = true;
  obs_ = observe();
  return obs_;
}

Observation SimEnvironment::reset(const Topology& topo, uint64_t seed) {
  if (topo.n_devices < 1 || topo.n_devices > 5)
    throw std::invalid_argument("n_devices must be within [1,5]");
  if (topo.device_links.size() != static_cast<size_t>(topo.n_devices))
    throw std::invalid_argument("device_links must list one quality per device");
  topo_ = topo;
  return reset(seed);
}

NodeSpec SimEnvironment::node_spec(int node) const {
  if (node < topo_.n_devices) return params_.end_spec();
  return node == topo_.n_devices ? params_.edge_spec() : params_.cloud_spec();
}

double SimEnvironment::compute_ms(const InferenceModel& m, int node) const {
  return m.macs / node_spec(node).throughput(m.precision);
}

double SimEnvironment::queue_wait(int node) const {
  const auto& q = jobs_[static_cast<size_t>(node)];
  if (q.empty()) return 0.0;
  // Processor-sharing approximation: wait scales with load per core, paced by
  // the head-of-line job.
  return (static_cast<double>(q.size()) / node_spec(node).cpu_count) * q.front().compute;
}

double SimEnvironment::network_ms(const OrchestrationAction& a, int device) const {
  if (a.target() == Tier::End) return 0.0;
  const double dev_extra =
      topo_.device_links[static_cast<size_t>(device)] == LinkQuality::Weak ? params_.weak_extra_ms
                                                                           : 0.0;
  // Request payload per hop plus the weak-link surcharge in both directions
  // of every traversed link; responses carry no payload.
  double ms = params_.payload_ms + 2.0 * dev_extra;
  if (a.target() == Tier::Cloud) {
    const double edge_extra = topo_.edge_link == LinkQuality::Weak ? params_.weak_extra_ms : 0.0;
    ms += params_.payload_ms + 2.0 * edge_extra;
  }
  return ms;
}

double SimEnvironment::resident_mem(int node) const {
  const NodeSpec spec = node_spec(node);
  double used = 0.0;
  std::set<int> loaded;
  for (const Job& j : jobs_[static_cast<size_t>(node)]) {
    if (loaded.count(j.model_id)) continue;
    const double footprint = catalog_.model(j.model_id).mem_footprint;
    if (used + footprint > spec.mem_capacity) continue;  // stays queued, unloaded
    loaded.insert(j.model_id);
    used += footprint;
  }
  return used;
}

void SimEnvironment::retire(long now) {
  // A job stays active while it is within the sliding window of the last
  // n requests; one round later it has certainly been serviced.
  for (auto& q : jobs_)
    while (!q.empty() && q.front().issue <= now - topo_.n_devices) q.pop_front();
}

Observation SimEnvironment::observe() const {
  Observation o;
  const int n = topo_.n_devices;
  for (int d = 0; d < n; ++d) {
    const NodeSpec spec = node_spec(d);
    o.dev_cpu.push_back(jobs_[static_cast<size_t>(d)].empty() ? 0 : 1);
    o.dev_mem.push_back(resident_mem(d) > params_.mem_busy_frac * spec.mem_capacity ? 1 : 0);
    o.dev_link.push_back(topo_.device_links[static_cast<size_t>(d)] == LinkQuality::Weak ? 1 : 0);
  }
  const auto level = [](size_t active) { return static_cast<uint8_t>(std::min<size_t>(active, 8)); };
  o.edge_cpu = level(jobs_[static_cast<size_t>(n)].size());
  o.edge_mem = resident_mem(n) > params_.mem_busy_frac * params_.edge_mem ? 1 : 0;
  o.edge_link = topo_.edge_link == LinkQuality::Weak ? 1 : 0;
  o.cloud_cpu = level(jobs_[static_cast<size_t>(n) + 1].size());
  o.cloud_mem = resident_mem(n + 1) > params_.mem_busy_frac * params_.cloud_mem ? 1 : 0;
  // The cloud is reached over the edge uplink; it has no link of its own.
  o.cloud_link = o.edge_link;
  if (params_.include_requester)
    o.requester = static_cast<uint8_t>(step_count_ % topo_.n_devices);
  return o;
}

StepOutcome SimEnvironment::step(const OrchestrationAction& action,
                                 const AccuracyConstraint& constraint) {
  if (!ready_) throw std::logic_error("step before reset");
  if (action.index < 0 || action.index >= kActionCount)
    throw std::invalid_argument("action index out of range");

  const long t = step_count_;
  const int n = topo_.n_devices;
  const int device = static_cast<int>(t % n);
  retire(t);

  const InferenceModel& model = catalog_.model(action.model_id());
  const int node = action.target() == Tier::End ? device
                   : action.target() == Tier::Edge ? n
                                                   : n + 1;
  const double compute = compute_ms(model, node);
  const double wait = queue_wait(node);
  const double net = network_ms(action, device);
  const double response = wait + compute + net;

  jobs_[static_cast<size_t>(node)].push_back({t, model.id, compute});

  resp_window_.push_back(response);
  acc_window_.push_back(model.accuracy);
  while (resp_window_.size() > static_cast<size_t>(n)) resp_window_.pop_front();
  while (acc_window_.size() > static_cast<size_t>(n)) acc_window_.pop_front();

  double art = 0.0, aa = 0.0;
  for (double r : resp_window_) art += r;
  for (double a : acc_window_) aa += a;
  art /= static_cast<double>(resp_window_.size());
  aa /= static_cast<double>(acc_window_.size());

  const bool violated = !accuracy_meets(aa, constraint.threshold);

  step_count_ = t + 1;
  sim_time_ += response;
  obs_ = observe();

  StepOutcome out;
  out.obs = obs_;
  out.response_ms = response;
  out.window_art = art;
  out.window_aa = aa;
  out.violated = violated;
  out.reward = violated ? art + params_.penalty_ms : art;

  if (trace_on_)
    trace_.push_back({t, device, action.name(), response, art, aa, violated});
  return out;
}

const Observation& SimEnvironment::observation() const {
  if (!ready_) throw std::logic_error("observation before reset");
  return obs_;
}

}  // namespace eecsim
