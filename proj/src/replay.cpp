#include "eecsim/replay.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "eecsim/rng.hpp"

namespace eecsim {

PrioritizedBuffer::PrioritizedBuffer(size_t capacity, double alpha, double eps)
    : alpha_(alpha), eps_(eps) {
  if (capacity == 0) throw std::invalid_argument("buffer capacity must be positive");
  base_ = 1;
  while (base_ < capacity) base_ <<= 1;
  tree_.assign(2 * base_, 0.0);
  data_.resize(capacity);
  prio_.assign(capacity, 0.0);
}

void PrioritizedBuffer::set_leaf(size_t i, double weight) {
  size_t node = base_ + i;
  tree_[node] = weight;
  for (node >>= 1; node >= 1; node >>= 1) tree_[node] = tree_[2 * node] + tree_[2 * node + 1];
}

void PrioritizedBuffer::push(Transition t) {
  data_[head_] = std::move(t);
  prio_[head_] = max_prio_;
  set_leaf(head_, std::pow(max_prio_, alpha_));
  head_ = (head_ + 1) % data_.size();
  size_ = std::min(size_ + 1, data_.size());
}

const Transition& PrioritizedBuffer::at(size_t i) const {
  if (i >= size_) throw std::out_of_range("buffer index out of range");
  return data_[i];
}

double PrioritizedBuffer::priority(size_t i) const {
  if (i >= size_) throw std::out_of_range("buffer index out of range");
  return prio_[i];
}

Draw PrioritizedBuffer::sample(size_t count, double beta, std::mt19937_64& rng) const {
  if (count == 0) throw std::invalid_argument("sample of zero");
  if (size_ == 0) throw std::invalid_argument("sampling from empty buffer");
  const double total = tree_[1];
  Draw d;
  d.indices.reserve(count);
  d.weights.reserve(count);
  double max_w = 0.0;
  for (size_t k = 0; k < count; ++k) {
    double u = rand_unit(rng) * total;
    size_t node = 1;
    while (node < base_) {
      const double left = tree_[2 * node];
      if (u < left) {
        node = 2 * node;
      } else {
        u -= left;
        node = 2 * node + 1;
      }
    }
    size_t idx = node - base_;
    if (idx >= size_) idx = size_ - 1;  // guards the degenerate top-of-range draw
    const double p = tree_[base_ + idx] / total;
    const double w = std::pow(static_cast<double>(size_) * p, -beta);
    d.indices.push_back(idx);
    d.weights.push_back(w);
    max_w = std::max(max_w, w);
  }
  for (double& w : d.weights) w /= max_w;
  return d;
}

void PrioritizedBuffer::update_priorities(const std::vector<size_t>& indices,
                                          const std::vector<double>& td_errors) {
  if (indices.size() != td_errors.size())
    throw std::invalid_argument("update_priorities: size mismatch");
  for (size_t k = 0; k < indices.size(); ++k) {
    const size_t i = indices[k];
    if (i >= size_) throw std::out_of_range("update_priorities: index out of range");
    const double p = std::abs(td_errors[k]) + eps_;
    prio_[i] = p;
    max_prio_ = std::max(max_prio_, p);
    set_leaf(i, std::pow(p, alpha_));
  }
}

UniformBuffer::UniformBuffer(size_t capacity) {
  if (capacity == 0) throw std::invalid_argument("buffer capacity must be positive");
  data_.resize(capacity);
}

void UniformBuffer::push(Transition t) {
  data_[head_] = std::move(t);
  head_ = (head_ + 1) % data_.size();
  size_ = std::min(size_ + 1, data_.size());
}

const Transition& UniformBuffer::at(size_t i) const {
  if (i >= size_) throw std::out_of_range("buffer index out of range");
  return data_[i];
}

std::vector<size_t> UniformBuffer::sample(size_t count, std::mt19937_64& rng) const {
  if (count == 0) throw std::invalid_argument("sample of zero");
  if (size_ == 0) throw std::invalid_argument("sampling from empty buffer");
  std::vector<size_t> idx(count);
  for (size_t k = 0; k < count; ++k)
    idx[k] = static_cast<size_t>(rand_index(rng, static_cast<int>(size_)));
  return idx;
}

PlanBuffer::PlanBuffer(int n_actions, double alpha, double eps) : alpha_(alpha), eps_(eps) {
  if (n_actions <= 0) throw std::invalid_argument("plan buffer needs at least one action slot");
  data_.resize(static_cast<size_t>(n_actions));
  prio_.assign(static_cast<size_t>(n_actions), 0.0);
  used_.assign(static_cast<size_t>(n_actions), false);
}

bool PlanBuffer::contains(int action) const {
  if (action < 0 || action >= slots()) throw std::out_of_range("plan buffer action out of range");
  return used_[static_cast<size_t>(action)];
}

void PlanBuffer::insert(Transition t) {
  const int a = t.action;
  if (a < 0 || a >= slots()) throw std::out_of_range("plan buffer action out of range");
  if (used_[static_cast<size_t>(a)]) throw std::logic_error("plan slot already filled");
  data_[static_cast<size_t>(a)] = std::move(t);
  prio_[static_cast<size_t>(a)] = max_prio_;
  used_[static_cast<size_t>(a)] = true;
  ++filled_;
}

void PlanBuffer::rewrite_state(int action, std::vector<double> s) {
  if (!contains(action)) throw std::logic_error("rewrite of vacant plan slot");
  data_[static_cast<size_t>(action)].s = std::move(s);
}

const Transition& PlanBuffer::slot(int action) const {
  if (!contains(action)) throw std::logic_error("read of vacant plan slot");
  return data_[static_cast<size_t>(action)];
}

Draw PlanBuffer::sample(size_t count, double beta, std::mt19937_64& rng) const {
  if (count == 0) throw std::invalid_argument("sample of zero");
  if (filled_ == 0) throw std::invalid_argument("sampling from empty plan buffer");
  std::vector<double> cum;
  std::vector<size_t> actions;
  double total = 0.0;
  for (size_t i = 0; i < data_.size(); ++i) {
    if (!used_[i]) continue;
    total += std::pow(prio_[i], alpha_);
    cum.push_back(total);
    actions.push_back(i);
  }
  Draw d;
  d.indices.reserve(count);
  d.weights.reserve(count);
  double max_w = 0.0;
  for (size_t k = 0; k < count; ++k) {
    const double u = rand_unit(rng) * total;
    size_t j = static_cast<size_t>(std::lower_bound(cum.begin(), cum.end(), u) - cum.begin());
    if (j >= cum.size()) j = cum.size() - 1;
    const size_t a = actions[j];
    const double p = std::pow(prio_[a], alpha_) / total;
    const double w = std::pow(static_cast<double>(filled_) * p, -beta);
    d.indices.push_back(a);
    d.weights.push_back(w);
    max_w = std::max(max_w, w);
  }
  for (double& w : d.weights) w /= max_w;
  return d;
}

void PlanBuffer::update_priorities(const std::vector<size_t>& actions,
                                   const std::vector<double>& td_errors) {
  if (actions.size() != td_errors.size())
    throw std::invalid_argument("update_priorities: size mismatch");
  for (size_t k = 0; k < actions.size(); ++k) {
    const size_t a = actions[k];
    if (a >= used_.size() || !used_[a]) throw std::logic_error("priority update of vacant slot");
    const double p = std::abs(td_errors[k]) + eps_;
    prio_[a] = p;
    max_prio_ = std::max(max_prio_, p);
  }
}

}  // namespace eecsim
