#pragma once
#include <cstdint>
#include <deque>
#include <optional>
#include <string>
#include <vector>

#include "eecsim/catalog.hpp"

namespace eecsim {

enum class LinkQuality : uint8_t { Regular, Weak };
enum class Tier : uint8_t { End, Edge, Cloud };

struct NodeSpec {
  Tier tier{Tier::End};
  int cpu_count{1};
  double thr_fp32{0.0};  // million MACs per ms, per core
  double thr_int8{0.0};
  double mem_capacity{0.0};

  double throughput(Precision p) const { return p == Precision::FP32 ? thr_fp32 : thr_int8; }
};

struct SimParams {
  double payload_ms{10.0};      // request transfer per hop; responses are negligible
  double weak_extra_ms{20.0};   // added per traversal of a weak link, each direction
  double penalty_ms{1000.0};    // added while the accuracy window violates the constraint
  // Anchors idle local d7 at exactly 72.0 ms: the Int8 end rate recovers
  // 41/72 bit-exactly when multiplied back by the speedup.
  double end_thr_fp32{(41.0 / 72.0) / 1.6};
  double int8_speedup{1.6};
  double edge_speed_mult{4.0};  // per-core, relative to an end device
  double cloud_speed_mult{6.0};
  double end_mem{4096.0};
  double edge_mem{8192.0};
  double cloud_mem{16384.0};
  double mem_busy_frac{0.5};
  bool include_requester{false};  // append next requester index to observations

  NodeSpec end_spec() const;
  NodeSpec edge_spec() const;
  NodeSpec cloud_spec() const;
};

struct Topology {
  int n_devices{5};
  std::vector<LinkQuality> device_links;  // device <-> edge, one per device
  LinkQuality edge_link{LinkQuality::Regular};  // edge <-> cloud

  // Scenario letters A..D: the canonical regular/weak patterns over five
  // devices plus the edge uplink; n taking the first n device columns.
  static Topology scenario(char id, int n);
};

struct ScenarioSpec {
  Topology topology;
  std::string constraint{"Min"};
  uint64_t seed{1};
};
ScenarioSpec load_scenario(const std::string& path);
void save_scenario(const ScenarioSpec& spec, const std::string& path);

// Joint placement-and-model decision for one request. Indices 0..7 run the
// matching catalog model on the requesting device; 8 and 9 offload d0 to the
// edge or the cloud.
struct OrchestrationAction {
  int index{0};

  OrchestrationAction() = default;
  explicit OrchestrationAction(int idx);
  Tier target() const;
  int model_id() const { return index < 8 ? index : 0; }
  std::string name() const;  // "d4,L" / "d0,E" / "d0,C"
};

inline constexpr int kActionCount = 10;

struct Observation {
  std::vector<uint8_t> dev_cpu;   // 0 available / 1 busy
  std::vector<uint8_t> dev_mem;   // 0 available / 1 busy
  std::vector<uint8_t> dev_link;  // 0 regular / 1 weak
  uint8_t edge_cpu{0};            // active-job level, 0..8
  uint8_t edge_mem{0};
  uint8_t edge_link{0};
  uint8_t cloud_cpu{0};
  uint8_t cloud_mem{0};
  uint8_t cloud_link{0};
  std::optional<uint8_t> requester;  // device issuing the next request

  bool operator==(const Observation&) const = default;
  std::vector<double> encode() const;  // all components mapped into [0,1]
  uint64_t key() const;                // packed discrete key for tabular agents
};

int encoded_size(int n_devices, bool include_requester);
// Snap a raw vector onto the legal discrete levels of the encoding layout.
std::vector<double> snap_encoding(std::vector<double> enc, int n_devices, bool include_requester);

struct StepOutcome {
  Observation obs;      // state after the request was serviced
  double reward{0.0};   // windowed cost: ART plus penalty while violating
  double response_ms{0.0};
  double window_art{0.0};
  double window_aa{0.0};
  bool violated{false};
};

struct TraceRow {
  long step{0};
  int device{0};
  std::string action;
  double response_ms{0.0};
  double window_art{0.0};
  double window_aa{0.0};
  bool violated{false};
};

// Deterministic desk-scale model of the network: n end devices behind one
// edge node behind one cloud node. Requests arrive round-robin; each step
// services one request and advances time by its response.
class SimEnvironment {
 public:
  SimEnvironment(Topology topo, SimParams params, ModelCatalog catalog);

  Observation reset(uint64_t seed);
  Observation reset(const Topology& topo, uint64_t seed);
  StepOutcome step(const OrchestrationAction& action, const AccuracyConstraint& constraint);

  const Observation& observation() const;
  int n_devices() const { return topo_.n_devices; }
  int next_device() const { return static_cast<int>(step_count_ % topo_.n_devices); }
  long step_count() const { return step_count_; }
  double sim_time_ms() const { return sim_time_; }
  const Topology& topology() const { return topo_; }
  const SimParams& params() const { return params_; }
  const ModelCatalog& catalog() const { return catalog_; }

  void enable_trace(bool on) { trace_on_ = on; }
  const std::vector<TraceRow>& trace() const { return trace_; }

  // Pure compute time of a model on a node at current calibration; exposed
  // for tests and the brute-force search.
  double compute_ms(const InferenceModel& m, int node) const;

 private:
  struct Job {
    long issue{0};
    int model_id{0};
    double compute{0.0};
  };

  NodeSpec node_spec(int node) const;  // 0..n-1 end devices, n edge, n+1 cloud
  double queue_wait(int node) const;
  double network_ms(const OrchestrationAction& a, int device) const;
  double resident_mem(int node) const;
  Observation observe() const;
  void retire(long now);

  Topology topo_;
  SimParams params_;
  ModelCatalog catalog_;
  std::vector<std::deque<Job>> jobs_;
  std::deque<double> resp_window_;
  std::deque<double> acc_window_;
  Observation obs_;
  long step_count_{0};
  double sim_time_{0.0};
  bool ready_{false};
  bool trace_on_{false};
  std::vector<TraceRow> trace_;
};

}  // namespace eecsim
