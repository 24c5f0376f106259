#ifndef HDQN_CRITIC_HPP
#define HDQN_CRITIC_HPP

#include <string>
#include <variant>
#include <vector>

#include "hdqn/chain.hpp"
#include "hdqn/core.hpp"
#include "hdqn/keydoor.hpp"

namespace hdqn {

enum class Relation { reaches };

/// Intrinsic goal <entity1, relation, entity2>. entity1 is always the agent;
/// entity2 is either an entity (key-door) or a state (chain).
struct GoalSpec {
  EntityKind entity1 = EntityKind::agent;
  Relation relation = Relation::reaches;
  std::variant<EntityKind, StateId> entity2;

  std::string name() const {
    if (const auto* kind = std::get_if<EntityKind>(&entity2)) return std::string(to_string(*kind));
    return "s" + std::to_string(std::get<StateId>(entity2).index + 1);
  }
};

struct CriticVerdict {
  bool reached = false;
  double intrinsic_reward = 0.0;
};

template <typename C>
concept Critic = requires(const C c, GoalId g, StateId s, ActionId a) {
  { c.goal_set() } -> std::same_as<const std::vector<GoalSpec>&>;
  { c.evaluate(g, s, a, s) } -> std::same_as<CriticVerdict>;
};

namespace detail {

inline CriticVerdict verdict(bool reached, double magnitude) {
  return CriticVerdict{reached, reached ? magnitude : 0.0};
}

}  // namespace detail

/// Chain critic: one goal per state, reached when the step lands on it.
class ChainCritic {
 public:
  explicit ChainCritic(double reward = 1.0) : reward_(reward) {
    require(reward > 0.0, "ChainCritic: intrinsic reward must be positive");
    for (std::size_t i = 0; i < ChainEnv::kLength; ++i) {
      goals_.push_back(GoalSpec{EntityKind::agent, Relation::reaches, StateId{i}});
    }
  }
  ChainCritic(const ChainEnv&, double reward = 1.0) : ChainCritic(reward) {}

  const std::vector<GoalSpec>& goal_set() const { return goals_; }

  CriticVerdict evaluate(GoalId g, StateId /*before*/, ActionId /*a*/, StateId after) const {
    require(g.index < goals_.size(), "ChainCritic::evaluate: goal not in goal set");
    return detail::verdict(std::get<StateId>(goals_[g.index].entity2) == after, reward_);
  }

 private:
  double reward_;
  std::vector<GoalSpec> goals_;
};

/// Key-door critic over goals {key, door, ladder_bl, ladder_br}. A goal is
/// reached when the step leaves the agent on the entity's cell; the door
/// counts whether or not the agent holds the key, and the key cell counts
/// after pickup as well.
class KeyDoorCritic {
 public:
  static constexpr GoalId kKey{0};
  static constexpr GoalId kDoor{1};
  static constexpr GoalId kLadderBl{2};
  static constexpr GoalId kLadderBr{3};

  explicit KeyDoorCritic(const KeyDoorEnv& env, double reward = 1.0) : env_(env), reward_(reward) {
    require(reward > 0.0, "KeyDoorCritic: intrinsic reward must be positive");
    for (EntityKind kind : {EntityKind::key, EntityKind::door, EntityKind::ladder_bl, EntityKind::ladder_br}) {
      goals_.push_back(GoalSpec{EntityKind::agent, Relation::reaches, kind});
    }
  }

  const std::vector<GoalSpec>& goal_set() const { return goals_; }

  CriticVerdict evaluate(GoalId g, StateId before, ActionId /*a*/, StateId after) const {
    require(g.index < goals_.size(), "KeyDoorCritic::evaluate: goal not in goal set");
    require(before.index < env_.state_count(), "KeyDoorCritic::evaluate: state out of range");
    const KeyDoorState s1 = env_.decode(after);
    const auto& layout = env_.layout();
    bool reached = false;
    switch (std::get<EntityKind>(goals_[g.index].entity2)) {
      case EntityKind::key: reached = s1.agent_pos == layout.key; break;
      case EntityKind::door: reached = s1.agent_pos == layout.door; break;
      case EntityKind::ladder_bl: reached = s1.agent_pos == layout.ladder_bl; break;
      case EntityKind::ladder_br: reached = s1.agent_pos == layout.ladder_br; break;
      default: break;
    }
    return detail::verdict(reached, reward_);
  }

 private:
  KeyDoorEnv env_;
  double reward_;
  std::vector<GoalSpec> goals_;
};

}  // namespace hdqn

#endif  // HDQN_CRITIC_HPP
