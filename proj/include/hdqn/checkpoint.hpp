#ifndef HDQN_CHECKPOINT_HPP
#define HDQN_CHECKPOINT_HPP

#include <fstream>
#include <optional>
#include <string>

#include "hdqn/agent.hpp"
#include "hdqn/binary_io.hpp"
#include "hdqn/exploration.hpp"
#include "hdqn/value_function.hpp"

namespace hdqn {

// Checkpoint layout (little-endian):
//   "HDQNCKP1" u32 version
//   u32 agent kind (0 h-DQN, 1 flat)
//   u64 state count, u64 action count, u64 goal count (0 for flat)
//   u64 primitive steps, u64 joint-phase steps
//   h-DQN: u32 backend, controller blob, u32 backend, meta blob, tracker section
//   flat:  u32 backend, table blob
// Value-function blobs are QTable::save / MlpQ::save. Tracker section:
//   "TRCK" u64 goals, u64 window, f64 floor, then per goal u64 n followed by
//   n u32 outcomes (0/1), oldest first.

inline constexpr std::string_view kCheckpointMagic = "HDQNCKP1";
inline constexpr std::uint32_t kCheckpointVersion = 1;

/// Everything needed to restore or evaluate a trained agent.
struct Checkpoint {
  enum class Kind : std::uint32_t { hdqn = 0, flat = 1 };

  Kind kind = Kind::hdqn;
  std::uint64_t state_count = 0;
  std::uint64_t action_count = 0;
  std::uint64_t goal_count = 0;
  std::uint64_t primitive_steps = 0;
  std::uint64_t joint_steps = 0;
  std::optional<ValueFunction> controller;  // h-DQN Q1, or the flat table
  std::optional<ValueFunction> meta;        // h-DQN only
  std::optional<GoalSuccessTracker> tracker;
};

namespace detail {

inline void save_tracker(BinaryWriter& w, const GoalSuccessTracker& t) {
  w.magic("TRCK");
  w.u64(t.goal_count());
  w.u64(t.window());
  w.f64(t.floor());
  for (std::size_t g = 0; g < t.goal_count(); ++g) {
    const auto& h = t.history(GoalId{g});
    w.u64(h.size());
    for (bool ok : h) w.u32(ok ? 1 : 0);
  }
}

inline GoalSuccessTracker load_tracker(BinaryReader& r) {
  r.expect_magic("TRCK");
  const std::uint64_t goals = r.u64();
  const std::uint64_t window = r.u64();
  const double floor = r.f64();
  if (window == 0) throw FormatError("tracker: zero window");
  GoalSuccessTracker t(goals, window, floor);
  for (std::size_t g = 0; g < goals; ++g) {
    const std::uint64_t n = r.u64();
    if (n > window) throw FormatError("tracker: history longer than window");
    for (std::uint64_t i = 0; i < n; ++i) t.record(GoalId{g}, r.u32() != 0);
  }
  return t;
}

inline void save_value_function(BinaryWriter& w, const ValueFunction& f) {
  w.u32(f.backend() == Backend::tabular ? 0 : 1);
  f.save(w);
}

inline ValueFunction load_value_function(BinaryReader& r) {
  const std::uint32_t tag = r.u32();
  if (tag > 1) throw FormatError("unknown value-function backend tag");
  return ValueFunction::load(r, tag == 0 ? Backend::tabular : Backend::mlp);
}

}  // namespace detail

inline void write_checkpoint(std::ostream& out, const Checkpoint& c) {
  BinaryWriter w(out);
  w.magic(kCheckpointMagic);
  w.u32(kCheckpointVersion);
  w.u32(static_cast<std::uint32_t>(c.kind));
  w.u64(c.state_count);
  w.u64(c.action_count);
  w.u64(c.goal_count);
  w.u64(c.primitive_steps);
  w.u64(c.joint_steps);
  if (!c.controller) throw FormatError("checkpoint: missing controller value function");
  detail::save_value_function(w, *c.controller);
  if (c.kind == Checkpoint::Kind::hdqn) {
    if (!c.meta || !c.tracker) throw FormatError("checkpoint: h-DQN checkpoint needs meta and tracker");
    detail::save_value_function(w, *c.meta);
    detail::save_tracker(w, *c.tracker);
  }
  w.check();
}

inline Checkpoint read_checkpoint(std::istream& in) {
  BinaryReader r(in);
  r.expect_magic(kCheckpointMagic);
  if (r.u32() != kCheckpointVersion) throw FormatError("checkpoint: unsupported version");
  Checkpoint c;
  const std::uint32_t kind = r.u32();
  if (kind > 1) throw FormatError("checkpoint: unknown agent kind");
  c.kind = static_cast<Checkpoint::Kind>(kind);
  c.state_count = r.u64();
  c.action_count = r.u64();
  c.goal_count = r.u64();
  c.primitive_steps = r.u64();
  c.joint_steps = r.u64();
  c.controller = detail::load_value_function(r);
  if (c.kind == Checkpoint::Kind::hdqn) {
    c.meta = detail::load_value_function(r);
    c.tracker = detail::load_tracker(r);
  }
  return c;
}

inline void save_checkpoint(const std::string& path, const Checkpoint& c) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot open '" + path + "' for writing");
  write_checkpoint(out, c);
}

inline Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open checkpoint '" + path + "'");
  return read_checkpoint(in);
}

template <typename Agent>
Checkpoint make_checkpoint(const Agent& agent, std::size_t state_count, std::size_t action_count) {
  Checkpoint c;
  c.kind = Checkpoint::Kind::hdqn;
  c.state_count = state_count;
  c.action_count = action_count;
  c.goal_count = agent.meta().shape().outputs;
  c.primitive_steps = agent.primitive_steps();
  c.joint_steps = agent.joint_steps();
  c.controller = agent.controller();
  c.meta = agent.meta();
  c.tracker = agent.tracker();
  return c;
}

/// Rebuilds an h-DQN agent from a checkpoint; replay memories start empty.
template <Environment Env, Critic Crit>
HdqnAgent<Env, Crit> restore_agent(const Checkpoint& c, HdqnOptions options, std::uint64_t seed) {
  if (c.kind != Checkpoint::Kind::hdqn) throw FormatError("checkpoint does not hold an h-DQN agent");
  options.success_window = c.tracker->window();
  options.controller_epsilon_floor = c.tracker->floor();
  HdqnAgent<Env, Crit> agent(*c.controller, *c.meta, options, seed);
  agent.tracker() = *c.tracker;
  agent.set_counters(c.primitive_steps, c.joint_steps);
  return agent;
}

}  // namespace hdqn

#endif  // HDQN_CHECKPOINT_HPP
