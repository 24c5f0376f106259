#ifndef HDQN_CHAIN_HPP
#define HDQN_CHAIN_HPP

#include "hdqn/core.hpp"

namespace hdqn {

/// Six-state stochastic chain. The agent starts at s2; `left` moves one state
/// left, `right` moves one state right with probability 0.5 and left
/// otherwise. s1 is terminal and pays 1.0 if s6 was visited during the
/// episode, 0.01 otherwise. `right` at s6 stays at s6 on success.
///
/// Observed StateId is position - 1; the visited-s6 flag is hidden.
class ChainEnv {
 public:
  static constexpr std::size_t kLength = 6;
  static constexpr std::size_t kStart = 2;
  static constexpr ActionId kLeft{0};
  static constexpr ActionId kRight{1};
  static constexpr double kRewardVisited = 1.0;
  static constexpr double kRewardDirect = 0.01;
  static constexpr double kRightSuccess = 0.5;

  std::size_t state_count() const { return kLength; }
  std::size_t action_count() const { return 2; }

  StateId reset(RngStream&) {
    position_ = kStart;
    visited_last_ = false;
    terminal_ = false;
    return state();
  }

  StepOutcome step(ActionId a, RngStream& rng) {
    require(!terminal_, "ChainEnv::step: episode is terminal; reset first");
    require(a.index < 2, "ChainEnv::step: action out of range");
    if (a == kRight && rng.bernoulli(kRightSuccess)) {
      if (position_ < kLength) ++position_;
    } else {
      --position_;
    }
    if (position_ == kLength) visited_last_ = true;
    StepOutcome out{state(), 0.0, false};
    if (position_ == 1) {
      terminal_ = true;
      out.terminal = true;
      out.extrinsic_reward = visited_last_ ? kRewardVisited : kRewardDirect;
    }
    return out;
  }

  StateId state() const { return StateId{position_ - 1}; }
  bool terminal() const { return terminal_; }

  /// 1-based position, as in s1..s6.
  std::size_t position() const { return position_; }
  bool visited_last() const { return visited_last_; }

  /// Puts the chain into an arbitrary augmented state. Used by verification
  /// code that needs a generative model of the augmented process.
  void place(std::size_t position, bool visited_last) {
    require(position >= 1 && position <= kLength, "ChainEnv::place: position out of range");
    position_ = position;
    visited_last_ = visited_last || position == kLength;
    terminal_ = position == 1;
  }

  /// Index into the 12-state augmented space (position x visited flag).
  std::size_t augmented_index() const { return (position_ - 1) * 2 + (visited_last_ ? 1 : 0); }

 private:
  std::size_t position_ = kStart;
  bool visited_last_ = false;
  bool terminal_ = false;
};

}  // namespace hdqn

#endif  // HDQN_CHAIN_HPP
