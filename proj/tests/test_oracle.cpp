#include <gtest/gtest.h>

#include <cmath>

#include "hdqn/oracle.hpp"
#include "support.hpp"

using namespace hdqn;

namespace {

std::size_t aug(std::size_t pos, bool visited) { return (pos - 1) * 2 + (visited ? 1 : 0); }

}  // namespace

TEST(Oracle, StartValueMatchesGamblersRuin) {
  // Always right from s2: reach s6 before s1 with probability 1/5 (fair walk
  // from 1 of 4 steps), then collect 1.0; otherwise 0.01.
  const double closed_form = 0.2 * 1.0 + 0.8 * 0.01;
  const auto r = oracle_value_iteration(ChainEnv{});
  EXPECT_NEAR(r.value[aug(2, false)], closed_form, 1e-8);
  EXPECT_NEAR(r.value[aug(2, false)], 0.208, 1e-3);
  EXPECT_LT(r.residual, 1e-10);
}

TEST(Oracle, VisitedStatesAreWorthOneAndTerminalZero) {
  const auto r = oracle_value_iteration(ChainEnv{});
  for (std::size_t pos = 2; pos <= 6; ++pos) EXPECT_NEAR(r.value[aug(pos, true)], 1.0, 1e-8);
  EXPECT_EQ(r.value[aug(1, false)], 0.0);
  EXPECT_EQ(r.value[aug(1, true)], 0.0);
}

TEST(Oracle, UnvisitedStatesFollowTheRuinFormula) {
  // From position p (2..5) the chance of hitting s6 first is (p - 1) / 5.
  const auto r = oracle_value_iteration(ChainEnv{});
  for (std::size_t pos = 2; pos <= 5; ++pos) {
    const double p = static_cast<double>(pos - 1) / 5.0;
    EXPECT_NEAR(r.value[aug(pos, false)], p + (1 - p) * 0.01, 1e-8) << pos;
    EXPECT_EQ(r.policy[aug(pos, false)], ChainEnv::kRight.index);
  }
}

TEST(Oracle, ValueIterationOnHandMdp) {
  // One state, two actions: action 0 ends with 1, action 1 ends with 2.
  FiniteMdp m(2, 2);
  m.terminal[1] = true;
  m.transitions[0][0] = {{1.0, 1, 1.0}};
  m.transitions[0][1] = {{0.5, 1, 2.0}, {0.5, 1, 2.0}};
  const auto r = value_iteration(m, 0.5);
  EXPECT_DOUBLE_EQ(r.value[0], 2.0);
  EXPECT_EQ(r.policy[0], 1u);
}

TEST(Oracle, SampledQLearningAgreesWithExactValues) {
  const auto exact = oracle_value_iteration(ChainEnv{}, 1.0);
  const auto q = test::sampled_chain_q(1.0, 4'000'000, 11);
  for (std::size_t s = 2; s < 12; ++s) {
    if (!test::reachable_nonterminal(s)) continue;
    for (std::size_t a = 0; a < 2; ++a) EXPECT_NEAR(q.at(StateId{s}, 0, a), exact.q[s][a], 1e-3) << s << ' ' << a;
  }
}
