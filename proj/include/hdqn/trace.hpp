#ifndef HDQN_TRACE_HPP
#define HDQN_TRACE_HPP

#include <vector>

#include "hdqn/core.hpp"

namespace hdqn {

/// Log of one episode. Rewards are extrinsic only.
struct EpisodeTrace {
  std::vector<GoalId> goals;         // goal of each option, in order
  std::vector<bool> goal_reached;    // aligned with `goals`
  std::vector<std::size_t> visits;   // per StateId, start state included
  double extrinsic_reward = 0.0;
  std::size_t steps = 0;

  explicit EpisodeTrace(std::size_t states = 0) : visits(states, 0) {}

  void visit(StateId s) {
    if (s.index < visits.size()) ++visits[s.index];
  }
};

}  // namespace hdqn

#endif  // HDQN_TRACE_HPP
