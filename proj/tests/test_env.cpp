#include <gtest/gtest.h>

#include <set>
#include <vector>

#include "hdqn/chain.hpp"
#include "hdqn/keydoor.hpp"

using namespace hdqn;

namespace {

constexpr ActionId kUp{0}, kDown{1}, kLeft{2}, kRight{3};

}  // namespace

TEST(ChainEnv, ResetStartsAtS2) {
  ChainEnv env;
  RngStream rng(1, StreamId::environment);
  EXPECT_EQ(env.reset(rng), StateId{1});
  EXPECT_EQ(env.position(), 2u);
  EXPECT_FALSE(env.terminal());
  EXPECT_EQ(env.state_count(), 6u);
  EXPECT_EQ(env.action_count(), 2u);
}

TEST(ChainEnv, LeftFromS2EndsWithSmallReward) {
  ChainEnv env;
  RngStream rng(1, StreamId::environment);
  env.reset(rng);
  const auto out = env.step(ChainEnv::kLeft, rng);
  EXPECT_EQ(out.next_state, StateId{0});
  EXPECT_TRUE(out.terminal);
  EXPECT_DOUBLE_EQ(out.extrinsic_reward, 0.01);
}

TEST(ChainEnv, SteppingTerminalEpisodeThrows) {
  ChainEnv env;
  RngStream rng(1, StreamId::environment);
  env.reset(rng);
  env.step(ChainEnv::kLeft, rng);
  EXPECT_THROW(env.step(ChainEnv::kLeft, rng), ContractViolation);
  env.reset(rng);
  EXPECT_NO_THROW(env.step(ChainEnv::kRight, rng));
}

TEST(ChainEnv, RightSucceedsAboutHalfTheTimeFromEveryInteriorState) {
  RngStream rng(7, StreamId::environment);
  ChainEnv env;
  for (std::size_t pos = 2; pos <= 5; ++pos) {
    int successes = 0;
    for (int i = 0; i < 10'000; ++i) {
      env.place(pos, false);
      if (env.step(ChainEnv::kRight, rng).next_state.index == pos) ++successes;
    }
    const double frac = successes / 10'000.0;
    EXPECT_GE(frac, 0.48) << "pos " << pos;
    EXPECT_LE(frac, 0.52) << "pos " << pos;
  }
}

TEST(ChainEnv, RightAtS6SelfLoopsOnSuccess) {
  RngStream rng(3, StreamId::environment);
  ChainEnv env;
  std::set<std::size_t> seen;
  for (int i = 0; i < 200; ++i) {
    env.place(6, true);
    seen.insert(env.step(ChainEnv::kRight, rng).next_state.index);
  }
  EXPECT_EQ(seen, (std::set<std::size_t>{4, 5}));
}

TEST(ChainEnv, RewardIsOneExactlyWhenS6WasVisited) {
  RngStream env_rng(11, StreamId::environment);
  RngStream policy(11, StreamId::controller_exploration);
  ChainEnv env;
  int with_s6 = 0;
  for (int ep = 0; ep < 5'000; ++ep) {
    env.reset(env_rng);
    bool saw6 = false;
    double total = 0.0;
    bool terminal = false;
    while (!terminal) {
      const auto out = env.step(ActionId{policy.bernoulli(0.8) ? 1u : 0u}, env_rng);
      saw6 = saw6 || out.next_state.index == 5;
      total += out.extrinsic_reward;
      terminal = out.terminal;
    }
    EXPECT_TRUE(total == 1.0 || total == 0.01);
    EXPECT_EQ(total == 1.0, saw6);
    with_s6 += saw6;
  }
  EXPECT_GT(with_s6, 0);
}

TEST(ChainEnv, ReplayWithSameSeedIsIdentical) {
  auto roll = [] {
    ChainEnv env;
    RngStream rng(99, StreamId::environment);
    std::vector<std::size_t> states;
    for (int ep = 0; ep < 50; ++ep) {
      env.reset(rng);
      bool terminal = false;
      while (!terminal) {
        const auto out = env.step(ChainEnv::kRight, rng);
        states.push_back(out.next_state.index);
        terminal = out.terminal;
      }
    }
    return states;
  };
  EXPECT_EQ(roll(), roll());
}

TEST(RngStream, StreamsAreReproducibleAndDistinct) {
  RngStream a(5, StreamId::environment), b(5, StreamId::environment), c(5, StreamId::replay_sampling);
  int same = 0;
  for (int i = 0; i < 100; ++i) {
    const auto x = a(), y = b(), z = c();
    EXPECT_EQ(x, y);
    same += x == z;
  }
  EXPECT_EQ(same, 0);
}

TEST(KeyDoorLayout, StandardLayoutMatchesDescription) {
  const auto layout = KeyDoorLayout::standard();
  EXPECT_EQ(layout.width, 12);
  EXPECT_EQ(layout.height, 9);
  EXPECT_EQ(layout.patrol_length, 6);
  EXPECT_EQ(layout.step_limit, 500);
  EXPECT_EQ(layout.spawn, (Cell{5, 1}));
  EXPECT_EQ(layout.door, (Cell{10, 1}));
  EXPECT_EQ(layout.key, (Cell{1, 7}));
  EXPECT_EQ(layout.ladder_bl, (Cell{1, 5}));
  EXPECT_EQ(layout.ladder_br, (Cell{10, 5}));
  EXPECT_EQ(layout.patrol_row, 7);
}

TEST(KeyDoorLayout, RejectsMalformedMaps) {
  EXPECT_THROW(KeyDoorLayout::parse({}), LayoutError);
  try {
    KeyDoorLayout::parse({"#####", "#A.K#", "#D.L", "#LSS#"});
    FAIL() << "ragged map accepted";
  } catch (const LayoutError& e) {
    EXPECT_EQ(e.row(), 2);
  }
  EXPECT_THROW(KeyDoorLayout::parse({"A.K.D", "L.L..", "S.S.."}), LayoutError);   // patrol not contiguous
  EXPECT_THROW(KeyDoorLayout::parse({"A.K.D", "L.L..", ".SS.X"}), LayoutError);   // unknown char
  EXPECT_THROW(KeyDoorLayout::parse({"A.K.D", "L....", ".SS.."}), LayoutError);   // one ladder
  EXPECT_THROW(KeyDoorLayout::parse({"AAK.D", "L..L.", ".SS.."}), LayoutError);   // two spawns
  EXPECT_NO_THROW(KeyDoorLayout::parse({"A.K.D", "L..L.", ".SS.."}));
}

TEST(KeyDoorEnv, StateAndActionCounts) {
  KeyDoorEnv env;
  EXPECT_EQ(env.state_count(), 12u * 9u * 6u * 2u * 2u);
  EXPECT_EQ(env.action_count(), 4u);
  EXPECT_EQ(env.state_count(), env.state_count());
}

TEST(KeyDoorEnv, ResetPlacesAgentAtSpawnWithoutKey) {
  KeyDoorEnv env;
  RngStream rng(0, StreamId::environment);
  const StateId s = env.reset(rng);
  const auto st = env.decode(s);
  EXPECT_EQ(st.agent_pos, env.layout().spawn);
  EXPECT_FALSE(st.has_key);
  const auto entities = env.entities();
  ASSERT_EQ(entities.size(), 6u);
  for (const auto& e : entities) EXPECT_TRUE(e.alive);
  EXPECT_EQ(entities[0].position, env.layout().spawn);
}

TEST(KeyDoorEnv, EncodeDecodeRoundTrip) {
  KeyDoorEnv env;
  for (std::size_t i = 0; i < env.state_count(); i += 7) {
    EXPECT_EQ(env.encode(env.decode(StateId{i})), StateId{i});
  }
}

TEST(KeyDoorEnv, WallsBlockMovement) {
  KeyDoorEnv env;
  RngStream rng(0, StreamId::environment);
  env.reset(rng);
  const auto out = env.step(kUp, rng);  // row 0 is wall
  EXPECT_EQ(env.decode(out.next_state).agent_pos, env.layout().spawn);
}

TEST(KeyDoorEnv, SkullPositionIsPeriodicInElapsedSteps) {
  KeyDoorEnv env;
  RngStream rng(0, StreamId::environment);
  env.reset(rng);
  const int period = 2 * (env.layout().patrol_length - 1);
  std::vector<int> offsets;
  for (int t = 0; t < 3 * period && !env.terminal(); ++t) {
    offsets.push_back(env.full_state().skull_offset);
    env.step(env.full_state().steps_elapsed % 2 == 0 ? kLeft : kRight, rng);  // shuffle near spawn
  }
  ASSERT_EQ(offsets.size(), static_cast<std::size_t>(3 * period));
  for (std::size_t t = period; t < offsets.size(); ++t) EXPECT_EQ(offsets[t], offsets[t - period]);
  EXPECT_EQ(*std::min_element(offsets.begin(), offsets.end()), 0);
  EXPECT_EQ(*std::max_element(offsets.begin(), offsets.end()), env.layout().patrol_length - 1);
}

// Golden route: left 4, down 6 onto the key, then up 6 and right 9 to the door.
std::vector<ActionId> golden_route() {
  std::vector<ActionId> route;
  for (int i = 0; i < 4; ++i) route.push_back(kLeft);
  for (int i = 0; i < 6; ++i) route.push_back(kDown);
  for (int i = 0; i < 6; ++i) route.push_back(kUp);
  for (int i = 0; i < 9; ++i) route.push_back(kRight);
  return route;
}

TEST(KeyDoorEnv, GoldenRouteScores400) {
  KeyDoorEnv env;
  RngStream rng(0, StreamId::environment);
  env.reset(rng);
  double total = 0.0;
  std::vector<double> rewards;
  bool terminal = false;
  for (ActionId a : golden_route()) {
    ASSERT_FALSE(terminal);
    const auto out = env.step(a, rng);
    total += out.extrinsic_reward;
    rewards.push_back(out.extrinsic_reward);
    terminal = out.terminal;
  }
  EXPECT_TRUE(terminal);
  EXPECT_DOUBLE_EQ(total, 400.0);
  EXPECT_DOUBLE_EQ(rewards[9], 100.0);
  EXPECT_DOUBLE_EQ(rewards.back(), 300.0);
  EXPECT_LT(golden_route().size(), static_cast<std::size_t>(env.layout().step_limit));
  EXPECT_FALSE(env.entities()[1].alive);
}

TEST(KeyDoorEnv, DoorWithoutKeyIsOrdinaryFloor) {
  KeyDoorEnv env;
  RngStream rng(0, StreamId::environment);
  env.reset(rng);
  StepOutcome out;
  for (int i = 0; i < 5; ++i) out = env.step(kRight, rng);
  EXPECT_EQ(env.decode(out.next_state).agent_pos, env.layout().door);
  EXPECT_FALSE(out.terminal);
  EXPECT_DOUBLE_EQ(out.extrinsic_reward, 0.0);
}

TEST(KeyDoorEnv, TouchingSkullEndsEpisodeWithoutReward) {
  // Tiny room where the skull patrols right under the spawn.
  auto layout = KeyDoorLayout::parse({"LA.KD", "SS..L"});
  KeyDoorEnv env(layout);
  RngStream rng(0, StreamId::environment);
  env.reset(rng);
  const auto out = env.step(kDown, rng);  // agent to (1,1); skull moves from (0,1) to (1,1)
  EXPECT_TRUE(out.terminal);
  EXPECT_DOUBLE_EQ(out.extrinsic_reward, 0.0);
  EXPECT_THROW(env.step(kUp, rng), ContractViolation);
}

TEST(KeyDoorEnv, StepLimitTruncates) {
  auto layout = KeyDoorLayout::parse({"A.K.D", "L..L.", ".SS.."}, 3);
  KeyDoorEnv env(layout);
  RngStream rng(0, StreamId::environment);
  env.reset(rng);
  EXPECT_FALSE(env.step(kUp, rng).terminal);
  EXPECT_FALSE(env.step(kUp, rng).terminal);
  const auto out = env.step(kUp, rng);
  EXPECT_TRUE(out.terminal);
  EXPECT_DOUBLE_EQ(out.extrinsic_reward, 0.0);
}

TEST(KeyDoorEnv, EpisodeRewardIsAlwaysZeroHundredOrFourHundred) {
  KeyDoorEnv env;
  RngStream env_rng(4, StreamId::environment);
  RngStream policy(4, StreamId::controller_exploration);
  std::set<double> totals;
  for (int ep = 0; ep < 300; ++ep) {
    env.reset(env_rng);
    double total = 0.0;
    bool terminal = false;
    // Random walk biased along the golden route so that all outcomes occur.
    const auto route = golden_route();
    std::size_t i = 0;
    while (!terminal) {
      const ActionId a = policy.bernoulli(0.85) && i < route.size() ? route[i++] : ActionId{policy.below(4)};
      const auto out = env.step(a, env_rng);
      total += out.extrinsic_reward;
      terminal = out.terminal;
    }
    EXPECT_TRUE(total == 0.0 || total == 100.0 || total == 400.0) << total;
    totals.insert(total);
  }
  EXPECT_GE(totals.size(), 2u);
}
