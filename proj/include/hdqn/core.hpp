#ifndef HDQN_CORE_HPP
#define HDQN_CORE_HPP

#include <compare>
#include <concepts>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>

namespace hdqn {

/// Raised when a caller breaks an operation's precondition (stepping a
/// terminal episode, out-of-range indices, sampling an empty buffer...).
class ContractViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Raised when training produces a non-finite loss or metric.
class DivergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline void require(bool condition, const char* what) {
  if (!condition) throw ContractViolation(what);
}

namespace detail {

template <typename Tag>
struct StrongIndex {
  std::size_t index = 0;

  constexpr StrongIndex() = default;
  constexpr explicit StrongIndex(std::size_t i) : index(i) {}

  friend constexpr auto operator<=>(const StrongIndex&, const StrongIndex&) = default;
};

}  // namespace detail

struct StateTag {};
struct ActionTag {};
struct GoalTag {};

/// Canonical index of an environment state.
using StateId = detail::StrongIndex<StateTag>;
/// Index into an environment's action set.
using ActionId = detail::StrongIndex<ActionTag>;
/// Stable index of a goal within an environment's goal set.
using GoalId = detail::StrongIndex<GoalTag>;

struct StepOutcome {
  StateId next_state;
  double extrinsic_reward = 0.0;
  bool terminal = false;
};

/// Consumers of randomness; each gets an independent stream for a given seed.
enum class StreamId : std::uint32_t {
  environment = 0,
  controller_exploration = 1,
  meta_exploration = 2,
  replay_sampling = 3,
  initialization = 4,
  evaluation = 5,
};

/// Seeded random stream. Identical (seed, stream) pairs yield identical
/// sequences; streams are decorrelated by hashing the pair through splitmix64.
class RngStream {
 public:
  using result_type = std::uint64_t;

  RngStream(std::uint64_t seed, StreamId stream)
      : seed_(seed), stream_(stream), engine_(mix(seed, static_cast<std::uint64_t>(stream))) {}

  std::uint64_t seed() const { return seed_; }
  StreamId stream() const { return stream_; }

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }
  result_type operator()() { return engine_(); }

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Uniform integer in [0, n). Unbiased (rejection on the top range).
  std::size_t below(std::size_t n) {
    if (n == 0) throw ContractViolation("RngStream::below: empty range");
    const std::uint64_t bound = static_cast<std::uint64_t>(n);
    const std::uint64_t limit = max() - (max() % bound);
    std::uint64_t x = engine_();
    while (x >= limit) x = engine_();
    return static_cast<std::size_t>(x % bound);
  }

  bool bernoulli(double p) { return uniform() < p; }

 private:
  static std::uint64_t splitmix(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
  }
  static std::uint64_t mix(std::uint64_t seed, std::uint64_t stream) {
    return splitmix(splitmix(seed) ^ splitmix(stream + 0x632be59bd9b4e019ULL));
  }

  std::uint64_t seed_;
  StreamId stream_;
  std::mt19937_64 engine_;
};

/// Environment contract shared by every task.
template <typename E>
concept Environment = requires(E env, const E cenv, ActionId a, RngStream& rng) {
  { env.reset(rng) } -> std::same_as<StateId>;
  { env.step(a, rng) } -> std::same_as<StepOutcome>;
  { cenv.state_count() } -> std::convertible_to<std::size_t>;
  { cenv.action_count() } -> std::convertible_to<std::size_t>;
  { cenv.state() } -> std::same_as<StateId>;
  { cenv.terminal() } -> std::same_as<bool>;
};

}  // namespace hdqn

#endif  // HDQN_CORE_HPP
