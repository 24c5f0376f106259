#ifndef HDQN_ORACLE_HPP
#define HDQN_ORACLE_HPP

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "hdqn/chain.hpp"
#include "hdqn/core.hpp"

namespace hdqn {

/// Explicit finite MDP: transitions[s][a] lists (probability, next, reward).
struct FiniteMdp {
  struct Edge {
    double probability = 0.0;
    std::size_t next = 0;
    double reward = 0.0;
  };

  std::size_t states = 0;
  std::size_t actions = 0;
  std::vector<bool> terminal;
  std::vector<std::vector<std::vector<Edge>>> transitions;

  FiniteMdp(std::size_t n_states, std::size_t n_actions)
      : states(n_states),
        actions(n_actions),
        terminal(n_states, false),
        transitions(n_states, std::vector<std::vector<Edge>>(n_actions)) {}
};

struct ValueIterationResult {
  std::vector<double> value;               // V*[s]
  std::vector<std::vector<double>> q;      // Q*[s][a]
  std::vector<std::size_t> policy;         // greedy action, lowest index on ties
  std::size_t sweeps = 0;
  double residual = 0.0;
};

/// Synchronous value iteration until the sup-norm change drops
/// below `tolerance`. With gamma == 1 every policy must reach a terminal state
/// with probability one.
inline ValueIterationResult value_iteration(const FiniteMdp& mdp, double gamma, double tolerance = 1e-10,
                                            std::size_t max_sweeps = 1'000'000) {
  require(gamma >= 0.0 && gamma <= 1.0, "value_iteration: discount must lie in [0, 1]");
  ValueIterationResult r;
  r.value.assign(mdp.states, 0.0);
  r.q.assign(mdp.states, std::vector<double>(mdp.actions, 0.0));
  r.policy.assign(mdp.states, 0);
  std::vector<double> next(mdp.states, 0.0);
  for (r.sweeps = 1; r.sweeps <= max_sweeps; ++r.sweeps) {
    double delta = 0.0;
    for (std::size_t s = 0; s < mdp.states; ++s) {
      if (mdp.terminal[s]) {
        next[s] = 0.0;
        continue;
      }
      double best = -std::numeric_limits<double>::infinity();
      for (std::size_t a = 0; a < mdp.actions; ++a) {
        double q = 0.0;
        for (const auto& e : mdp.transitions[s][a]) q += e.probability * (e.reward + gamma * r.value[e.next]);
        r.q[s][a] = q;
        best = std::max(best, q);
      }
      next[s] = best;
      delta = std::max(delta, std::abs(next[s] - r.value[s]));
    }
    r.value.swap(next);
    r.residual = delta;
    if (delta < tolerance) break;
  }
  for (std::size_t s = 0; s < mdp.states; ++s) {
    if (mdp.terminal[s]) continue;
    for (std::size_t a = 0; a < mdp.actions; ++a) {
      double q = 0.0;
      for (const auto& e : mdp.transitions[s][a]) q += e.probability * (e.reward + gamma * r.value[e.next]);
      r.q[s][a] = q;
    }
    r.policy[s] = static_cast<std::size_t>(std::max_element(r.q[s].begin(), r.q[s].end()) - r.q[s].begin());
  }
  return r;
}

/// Chain task with the visited-s6 flag folded into the state, written down
/// directly from the task rules. State index = (position - 1) * 2 + visited.
inline FiniteMdp augmented_chain_mdp() {
  constexpr std::size_t n = ChainEnv::kLength;
  FiniteMdp mdp(n * 2, 2);
  auto index = [](std::size_t pos, bool visited) { return (pos - 1) * 2 + (visited ? 1 : 0); };
  auto land = [&](std::size_t pos, bool visited) {
    const bool v = visited || pos == n;
    const double reward = pos == 1 ? (v ? ChainEnv::kRewardVisited : ChainEnv::kRewardDirect) : 0.0;
    return FiniteMdp::Edge{0.0, index(pos, v), reward};
  };
  for (std::size_t pos = 1; pos <= n; ++pos) {
    for (bool visited : {false, true}) {
      const std::size_t s = index(pos, visited);
      if (pos == 1) {
        mdp.terminal[s] = true;
        continue;
      }
      auto left = land(pos - 1, visited);
      left.probability = 1.0;
      mdp.transitions[s][ChainEnv::kLeft.index] = {left};
      auto up = land(std::min(pos + 1, n), visited);
      up.probability = ChainEnv::kRightSuccess;
      auto down = land(pos - 1, visited);
      down.probability = 1.0 - ChainEnv::kRightSuccess;
      mdp.transitions[s][ChainEnv::kRight.index] = {up, down};
    }
  }
  return mdp;
}

/// Exact optimal values of the augmented chain (undiscounted by default).
inline ValueIterationResult oracle_value_iteration(const ChainEnv&, double gamma = 1.0, double tolerance = 1e-10) {
  return value_iteration(augmented_chain_mdp(), gamma, tolerance);
}

}  // namespace hdqn

#endif  // HDQN_ORACLE_HPP
