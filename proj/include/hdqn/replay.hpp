#ifndef HDQN_REPLAY_HPP
#define HDQN_REPLAY_HPP

#include <vector>

#include "hdqn/core.hpp"

namespace hdqn {

/// One primitive-step experience for the controller.
struct ControllerTransition {
  StateId state;
  GoalId goal;
  ActionId action;
  double intrinsic_reward = 0.0;
  StateId next_state;
  bool terminal = false;  // episode ended or goal reached
  friend bool operator==(const ControllerTransition&, const ControllerTransition&) = default;
};

/// One completed option for the meta-controller.
struct MetaTransition {
  StateId state0;
  GoalId goal;
  double cumulative_extrinsic = 0.0;  // undiscounted sum over the option
  StateId state_next;
  bool terminal = false;
  friend bool operator==(const MetaTransition&, const MetaTransition&) = default;
};

/// Bounded FIFO replay memory with uniform sampling with replacement.
template <typename T>
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
    require(capacity > 0, "ReplayBuffer: capacity must be positive");
  }

  std::size_t capacity() const { return capacity_; }
  std::size_t size() const { return items_.size(); }
  bool empty() const { return items_.empty(); }
  std::uint64_t total_pushed() const { return pushed_; }

  void push(const T& item) {
    if (items_.size() < capacity_) {
      items_.push_back(item);
    } else {
      items_[head_] = item;
      head_ = (head_ + 1) % capacity_;
    }
    ++pushed_;
  }

  /// i-th oldest stored item.
  const T& operator[](std::size_t i) const {
    require(i < items_.size(), "ReplayBuffer: index out of range");
    return items_[(head_ + i) % items_.size()];
  }

  std::vector<T> sample(std::size_t k, RngStream& rng) const {
    std::vector<T> batch;
    sample_into(k, rng, batch);
    return batch;
  }

  void sample_into(std::size_t k, RngStream& rng, std::vector<T>& batch) const {
    require(!items_.empty(), "ReplayBuffer::sample: buffer is empty");
    require(k > 0, "ReplayBuffer::sample: minibatch size must be positive");
    batch.clear();
    batch.reserve(k);
    for (std::size_t i = 0; i < k; ++i) batch.push_back(items_[rng.below(items_.size())]);
  }

  std::vector<T> contents() const {
    std::vector<T> out;
    out.reserve(items_.size());
    for (std::size_t i = 0; i < items_.size(); ++i) out.push_back((*this)[i]);
    return out;
  }

 private:
  std::size_t capacity_;
  std::size_t head_ = 0;  // oldest element once full
  std::uint64_t pushed_ = 0;
  std::vector<T> items_;
};

}  // namespace hdqn

#endif  // HDQN_REPLAY_HPP
