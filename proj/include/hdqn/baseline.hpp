#ifndef HDQN_BASELINE_HPP
#define HDQN_BASELINE_HPP

#include <vector>

#include "hdqn/core.hpp"
#include "hdqn/exploration.hpp"
#include "hdqn/qtable.hpp"
#include "hdqn/trace.hpp"

namespace hdqn {

struct FlatOptions {
  double learning_rate = 0.00025;
  double gamma = 0.99;
  EpsilonSchedule epsilon{1.0, 0.1, 50'000};  // indexed by primitive steps
};

/// Flat online Q-learning over the observed state, no intrinsic reward and
/// no replay.
template <Environment Env>
class FlatAgent {
 public:
  FlatAgent(std::size_t states, std::size_t actions, FlatOptions options, std::uint64_t seed)
      : q_(QShape{states, 0, actions}, options.learning_rate),
        opt_(options),
        rng_(seed, StreamId::controller_exploration) {
    require(opt_.gamma >= 0.0 && opt_.gamma <= 1.0, "FlatAgent: discount must lie in [0, 1]");
    for (std::size_t i = 0; i < actions; ++i) actions_.push_back(i);
  }

  /// Resumes from a saved table.
  FlatAgent(QTable table, FlatOptions options, std::uint64_t seed, std::uint64_t steps = 0)
      : q_(std::move(table)), opt_(options), rng_(seed, StreamId::controller_exploration), steps_(steps) {
    for (std::size_t i = 0; i < q_.shape().outputs; ++i) actions_.push_back(i);
  }

  /// One episode of epsilon-greedy Q-learning. With `learn == false` the
  /// table is frozen and `eval_epsilon` is used instead of the schedule.
  EpisodeTrace run_episode(Env& env, RngStream& env_rng, bool learn = true, double eval_epsilon = 0.0) {
    require(env.state_count() == q_.shape().states && env.action_count() == actions_.size(),
            "FlatAgent: environment does not match table shape");
    EpisodeTrace trace(env.state_count());
    StateId s = env.reset(env_rng);
    trace.visit(s);
    bool terminal = false;
    while (!terminal) {
      const double eps = learn ? opt_.epsilon.at(steps_) : eval_epsilon;
      const ActionId a{eps_greedy(q_.evaluate(s), actions_, eps, rng_)};
      const StepOutcome out = env.step(a, env_rng);
      if (learn) {
        q_.backup(Backup{s, 0, a.index, out.extrinsic_reward, out.next_state, out.terminal}, opt_.gamma);
        ++steps_;
      }
      terminal = out.terminal;
      trace.extrinsic_reward += out.extrinsic_reward;
      ++trace.steps;
      s = out.next_state;
      trace.visit(s);
    }
    return trace;
  }

  const QTable& table() const { return q_; }
  QTable& table() { return q_; }
  std::uint64_t steps() const { return steps_; }
  double epsilon() const { return opt_.epsilon.at(steps_); }

 private:
  QTable q_;
  FlatOptions opt_;
  RngStream rng_;
  std::vector<std::size_t> actions_;
  std::uint64_t steps_ = 0;
};

}  // namespace hdqn

#endif  // HDQN_BASELINE_HPP
