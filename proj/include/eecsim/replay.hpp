#pragma once
#include <cstdint>
#include <random>
#include <vector>

namespace eecsim {

struct Transition {
  std::vector<double> s;
  int action{0};
  double reward{0.0};
  std::vector<double> s2;
};

struct Draw {
  std::vector<size_t> indices;
  std::vector<double> weights;  // importance weights, max-normalized to <= 1
};

// Proportional prioritized replay over a ring buffer; P(i) ~ (|td_i|+eps)^alpha.
// Sampling is with replacement, O(log n) per draw through a segment tree.
class PrioritizedBuffer {
 public:
  explicit PrioritizedBuffer(size_t capacity, double alpha = 0.6, double eps = 1e-3);

  void push(Transition t);  // enters at the maximum priority seen so far
  size_t size() const { return size_; }
  size_t capacity() const { return data_.size(); }
  const Transition& at(size_t i) const;
  double priority(size_t i) const;  // raw |td|+eps value

  Draw sample(size_t count, double beta, std::mt19937_64& rng) const;
  void update_priorities(const std::vector<size_t>& indices, const std::vector<double>& td_errors);

 private:
  void set_leaf(size_t i, double weight);

  size_t base_;               // first leaf slot in tree_
  std::vector<double> tree_;  // segment sums over priority^alpha
  std::vector<Transition> data_;
  std::vector<double> prio_;
  size_t head_{0};
  size_t size_{0};
  double alpha_;
  double eps_;
  double max_prio_{1.0};
};

// Plain ring buffer; minibatches drawn uniformly without replacement.
class UniformBuffer {
 public:
  explicit UniformBuffer(size_t capacity);

  void push(Transition t);
  size_t size() const { return size_; }
  size_t capacity() const { return data_.size(); }
  const Transition& at(size_t i) const;
  std::vector<size_t> sample(size_t count, std::mt19937_64& rng) const;

 private:
  std::vector<Transition> data_;
  size_t head_{0};
  size_t size_{0};
};

// Planning store: one slot per action, so membership is an action-identity
// test. Slots are never evicted; only the stored current-state field may be
// rewritten. Prioritized draws are with replacement since minibatches exceed
// the slot count.
class PlanBuffer {
 public:
  explicit PlanBuffer(int n_actions = 10, double alpha = 0.6, double eps = 1e-3);

  bool contains(int action) const;
  void insert(Transition t);  // slot keyed by t.action, must be vacant
  void rewrite_state(int action, std::vector<double> s);
  int size() const { return filled_; }
  int slots() const { return static_cast<int>(data_.size()); }
  const Transition& slot(int action) const;

  Draw sample(size_t count, double beta, std::mt19937_64& rng) const;  // indices are action ids
  void update_priorities(const std::vector<size_t>& actions, const std::vector<double>& td_errors);

 private:
  std::vector<Transition> data_;
  std::vector<double> prio_;
  std::vector<bool> used_;
  int filled_{0};
  double alpha_;
  double eps_;
  double max_prio_{1.0};
};

}  // namespace eecsim
