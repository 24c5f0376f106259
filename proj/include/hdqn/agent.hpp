#ifndef HDQN_AGENT_HPP
#define HDQN_AGENT_HPP

#include <optional>
#include <vector>

#include "hdqn/core.hpp"
#include "hdqn/critic.hpp"
#include "hdqn/exploration.hpp"
#include "hdqn/replay.hpp"
#include "hdqn/trace.hpp"
#include "hdqn/value_function.hpp"

namespace hdqn {

enum class Phase {
  pretrain,  // meta-controller exploration pinned to 1
  joint,     // both levels learn, meta epsilon follows its schedule
  evaluate,  // frozen policy, fixed exploration, nothing stored or trained
};

/// How the controller's per-goal exploration rate is set.
enum class ControllerEpsilon {
  success_rate,  // max(floor, 1 - windowed success rate of the goal)
  schedule,      // linear annealing over all primitive steps, shared by every goal
};

struct HdqnOptions {
  double gamma = 0.99;
  std::size_t minibatch = 32;
  std::size_t warmup = 100;  // minimum buffer size before updates begin
  std::size_t controller_capacity = 100'000;
  std::size_t meta_capacity = 100'000;
  EpsilonSchedule meta_epsilon{1.0, 0.1, 50'000};  // indexed by joint-phase primitive steps
  ControllerEpsilon controller_mode = ControllerEpsilon::success_rate;
  EpsilonSchedule controller_epsilon{1.0, 0.1, 50'000};  // schedule mode, indexed by primitive steps
  std::size_t success_window = 100;
  double controller_epsilon_floor = 0.1;
  double eval_epsilon = 0.1;
};

inline Backup to_backup(const ControllerTransition& t) {
  return Backup{t.state, t.goal.index, t.action.index, t.intrinsic_reward, t.next_state, t.terminal};
}

inline Backup to_backup(const MetaTransition& t) {
  return Backup{t.state0, 0, t.goal.index, t.cumulative_extrinsic, t.state_next, t.terminal};
}

/// Samples a minibatch and takes one training step, unless the buffer is
/// still below max(minibatch, warmup).
template <typename T>
std::optional<double> update_params(ValueFunction& f, const ReplayBuffer<T>& buffer, std::size_t minibatch,
                                    std::size_t warmup, double gamma, RngStream& rng,
                                    std::vector<T>& scratch, std::vector<Backup>& batch) {
  if (buffer.size() < std::max(minibatch, warmup)) return std::nullopt;
  buffer.sample_into(minibatch, rng, scratch);
  batch.clear();
  for (const auto& t : scratch) batch.push_back(to_backup(t));
  return f.train(batch, gamma);
}

/// Two-level agent: the meta-controller Q2(s, g) picks goals, the controller
/// Q1(s, a; g) acts until the critic reports the goal reached or the episode
/// ends. Both levels learn from their own replay memory every primitive step.
template <Environment Env, Critic Crit>
class HdqnAgent {
 public:
  HdqnAgent(ValueFunction controller, ValueFunction meta, HdqnOptions options, std::uint64_t seed)
      : q1_(std::move(controller)),
        q2_(std::move(meta)),
        opt_(options),
        d1_(options.controller_capacity),
        d2_(options.meta_capacity),
        tracker_(q2_.shape().outputs, options.success_window, options.controller_epsilon_floor),
        controller_rng_(seed, StreamId::controller_exploration),
        meta_rng_(seed, StreamId::meta_exploration),
        replay_rng_(seed, StreamId::replay_sampling) {
    require(q1_.shape().contexts == q2_.shape().outputs, "HdqnAgent: controller goal count differs from meta outputs");
    require(q1_.shape().states == q2_.shape().states, "HdqnAgent: state counts differ");
    require(q2_.shape().contexts == 0, "HdqnAgent: meta-controller takes no goal input");
    require(opt_.gamma >= 0.0 && opt_.gamma < 1.0, "HdqnAgent: discount must lie in [0, 1)");
    require(opt_.minibatch > 0, "HdqnAgent: minibatch must be positive");
    refresh_epsilons();
    for (std::size_t i = 0; i < q1_.shape().outputs; ++i) actions_.push_back(i);
    for (std::size_t i = 0; i < q2_.shape().outputs; ++i) goals_.push_back(i);
  }

  EpisodeTrace run_episode(Env& env, const Crit& critic, Phase phase, RngStream& env_rng) {
    require(critic.goal_set().size() == goals_.size(), "HdqnAgent: critic goal set does not match meta outputs");
    require(env.state_count() == q1_.shape().states && env.action_count() == actions_.size(),
            "HdqnAgent: environment does not match value function shapes");
    const bool learning = phase != Phase::evaluate;

    EpisodeTrace trace(env.state_count());
    StateId s = env.reset(env_rng);
    trace.visit(s);
    GoalId g = pick_goal(s, phase);
    bool terminal = false;
    while (!terminal) {
      double option_reward = 0.0;
      const StateId s0 = s;
      bool reached = false;
      while (!(terminal || reached)) {
        q1_.evaluate(s, g.index, values_);
        const double eps = phase == Phase::evaluate ? opt_.eval_epsilon : controller_eps_[g.index];
        const ActionId a{eps_greedy(values_, actions_, eps, controller_rng_)};
        const StepOutcome out = env.step(a, env_rng);
        const CriticVerdict verdict = critic.evaluate(g, s, a, out.next_state);
        reached = verdict.reached;
        terminal = out.terminal;
        if (learning) {
          d1_.push(ControllerTransition{s, g, a, verdict.intrinsic_reward, out.next_state, terminal || reached});
          last_controller_loss_ = update_params(q1_, d1_, opt_.minibatch, opt_.warmup, opt_.gamma, replay_rng_,
                                                controller_scratch_, batch_);
          last_meta_loss_ =
              update_params(q2_, d2_, opt_.minibatch, opt_.warmup, opt_.gamma, replay_rng_, meta_scratch_, batch_);
          ++primitive_steps_;
          if (phase == Phase::joint) ++joint_steps_;
        }
        option_reward += out.extrinsic_reward;
        trace.extrinsic_reward += out.extrinsic_reward;
        ++trace.steps;
        s = out.next_state;
        trace.visit(s);
      }
      trace.goals.push_back(g);
      trace.goal_reached.push_back(reached);
      if (learning) {
        d2_.push(MetaTransition{s0, g, option_reward, s, terminal});
        tracker_.record(g, reached);
        ++options_completed_;
      }
      if (!terminal) g = pick_goal(s, phase);
    }
    if (learning) refresh_epsilons();
    return trace;
  }

  /// Exploration rate the meta-controller uses for the next episode.
  double meta_epsilon() const { return meta_eps_; }
  /// Controller exploration rate for goal g in the next learning episode.
  double controller_epsilon(GoalId g) const {
    require(g.index < controller_eps_.size(), "HdqnAgent: goal out of range");
    return controller_eps_[g.index];
  }

  const ValueFunction& controller() const { return q1_; }
  const ValueFunction& meta() const { return q2_; }
  ValueFunction& controller() { return q1_; }
  ValueFunction& meta() { return q2_; }
  const ReplayBuffer<ControllerTransition>& controller_memory() const { return d1_; }
  const ReplayBuffer<MetaTransition>& meta_memory() const { return d2_; }
  const GoalSuccessTracker& tracker() const { return tracker_; }
  GoalSuccessTracker& tracker() { return tracker_; }
  const HdqnOptions& options() const { return opt_; }

  std::uint64_t primitive_steps() const { return primitive_steps_; }
  std::uint64_t joint_steps() const { return joint_steps_; }
  std::uint64_t options_completed() const { return options_completed_; }
  std::uint64_t meta_picks() const { return meta_picks_; }
  std::optional<double> last_controller_loss() const { return last_controller_loss_; }
  std::optional<double> last_meta_loss() const { return last_meta_loss_; }

  void set_counters(std::uint64_t primitive, std::uint64_t joint) {
    primitive_steps_ = primitive;
    joint_steps_ = joint;
    refresh_epsilons();
  }

 private:
  GoalId pick_goal(StateId s, Phase phase) {
    q2_.evaluate(s, 0, values_);
    double eps = meta_eps_;
    if (phase == Phase::pretrain) eps = 1.0;
    if (phase == Phase::evaluate) eps = opt_.eval_epsilon;
    if (phase != Phase::evaluate) ++meta_picks_;
    return GoalId{eps_greedy(values_, goals_, eps, meta_rng_)};
  }

  void refresh_epsilons() {
    meta_eps_ = opt_.meta_epsilon.at(joint_steps_);
    controller_eps_.resize(tracker_.goal_count());
    for (std::size_t g = 0; g < controller_eps_.size(); ++g) {
      controller_eps_[g] = opt_.controller_mode == ControllerEpsilon::schedule
                               ? opt_.controller_epsilon.at(primitive_steps_)
                               : tracker_.epsilon(GoalId{g});
    }
  }

  ValueFunction q1_;
  ValueFunction q2_;
  HdqnOptions opt_;
  ReplayBuffer<ControllerTransition> d1_;
  ReplayBuffer<MetaTransition> d2_;
  GoalSuccessTracker tracker_;
  RngStream controller_rng_;
  RngStream meta_rng_;
  RngStream replay_rng_;

  double meta_eps_ = 1.0;
  std::vector<double> controller_eps_;
  std::vector<std::size_t> actions_;
  std::vector<std::size_t> goals_;
  std::uint64_t primitive_steps_ = 0;
  std::uint64_t joint_steps_ = 0;
  std::uint64_t options_completed_ = 0;
  std::uint64_t meta_picks_ = 0;
  std::optional<double> last_controller_loss_;
  std::optional<double> last_meta_loss_;

  std::vector<double> values_;
  std::vector<ControllerTransition> controller_scratch_;
  std::vector<MetaTransition> meta_scratch_;
  std::vector<Backup> batch_;
};

}  // namespace hdqn

#endif  // HDQN_AGENT_HPP
