#ifndef HDQN_EXPLORATION_HPP
#define HDQN_EXPLORATION_HPP

#include <algorithm>
#include <deque>
#include <span>
#include <vector>

#include "hdqn/core.hpp"

namespace hdqn {

/// Linear annealing: eps(t) = max(floor, start - (start - floor) * t / horizon).
class EpsilonSchedule {
 public:
  EpsilonSchedule(double start = 1.0, double floor = 0.1, std::uint64_t horizon = 50'000)
      : start_(start), floor_(floor), horizon_(horizon) {
    require(start >= floor && floor >= 0.0 && start <= 1.0, "EpsilonSchedule: need 0 <= floor <= start <= 1");
    require(horizon > 0, "EpsilonSchedule: horizon must be positive");
  }

  double at(std::uint64_t t) const {
    if (t >= horizon_) return floor_;
    const double frac = static_cast<double>(t) / static_cast<double>(horizon_);
    return std::max(floor_, start_ - (start_ - floor_) * frac);
  }

  double start() const { return start_; }
  double floor() const { return floor_; }
  std::uint64_t horizon() const { return horizon_; }

 private:
  double start_;
  double floor_;
  std::uint64_t horizon_;
};

/// Per-goal sliding window of attempt outcomes.
class GoalSuccessTracker {
 public:
  GoalSuccessTracker(std::size_t goals, std::size_t window = 100, double floor = 0.1)
      : window_(window), floor_(floor), history_(goals) {
    require(window > 0, "GoalSuccessTracker: window must be positive");
  }

  std::size_t goal_count() const { return history_.size(); }
  std::size_t window() const { return window_; }
  double floor() const { return floor_; }

  void record(GoalId g, bool success) {
    auto& h = checked(g);
    h.push_back(success);
    if (h.size() > window_) h.pop_front();
  }

  std::size_t attempts(GoalId g) const { return checked(g).size(); }

  double success_rate(GoalId g) const {
    const auto& h = checked(g);
    if (h.empty()) return 0.0;
    return static_cast<double>(std::count(h.begin(), h.end(), true)) / static_cast<double>(h.size());
  }

  /// Controller exploration for goal g: max(floor, 1 - success rate).
  double epsilon(GoalId g) const { return std::max(floor_, 1.0 - success_rate(g)); }

  const std::deque<bool>& history(GoalId g) const { return checked(g); }

 private:
  std::deque<bool>& checked(GoalId g) {
    require(g.index < history_.size(), "GoalSuccessTracker: goal out of range");
    return history_[g.index];
  }
  const std::deque<bool>& checked(GoalId g) const {
    require(g.index < history_.size(), "GoalSuccessTracker: goal out of range");
    return history_[g.index];
  }

  std::size_t window_;
  double floor_;
  std::vector<std::deque<bool>> history_;
};

/// With probability eps a uniform pick from `candidates`, otherwise the
/// candidate with the largest value (lowest index on ties).
inline std::size_t eps_greedy(std::span<const double> values, std::span<const std::size_t> candidates, double eps,
                              RngStream& rng) {
  require(!candidates.empty(), "eps_greedy: empty candidate set");
  require(eps >= 0.0 && eps <= 1.0, "eps_greedy: epsilon must lie in [0, 1]");
  if (rng.uniform() < eps) return candidates[rng.below(candidates.size())];
  std::size_t best = candidates.front();
  for (std::size_t c : candidates) {
    require(c < values.size(), "eps_greedy: candidate out of range");
    if (values[c] > values[best] || (values[c] == values[best] && c < best)) best = c;
  }
  return best;
}

/// Convenience overload: every index of `values` is a candidate.
inline std::size_t eps_greedy(std::span<const double> values, double eps, RngStream& rng) {
  require(!values.empty(), "eps_greedy: empty value vector");
  std::vector<std::size_t> all(values.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  return eps_greedy(values, all, eps, rng);
}

}  // namespace hdqn

#endif  // HDQN_EXPLORATION_HPP
