#ifndef HDQN_CONFIG_HPP
#define HDQN_CONFIG_HPP

#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "hdqn/agent.hpp"
#include "hdqn/keydoor.hpp"
#include "hdqn/value_function.hpp"

namespace hdqn {

/// Bad configuration. `line` is 1-based, 0 when the problem is not tied to a line.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::size_t line, const std::string& what)
      : std::runtime_error(line ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

enum class EnvKind { chain, keydoor };
enum class AgentKind { hdqn, flat };

inline std::string_view to_string(EnvKind e) { return e == EnvKind::chain ? "chain" : "keydoor"; }
inline std::string_view to_string(AgentKind a) { return a == AgentKind::hdqn ? "hdqn" : "flat"; }

/// Complete description of a training run. The defaults are the chain
/// experiment: tabular h-DQN, 10 seeds, 50,000 episodes.
struct ExperimentConfig {
  EnvKind env = EnvKind::chain;
  AgentKind agent = AgentKind::hdqn;
  Backend backend = Backend::tabular;
  std::vector<std::uint64_t> seeds = {0, 1, 2, 3, 4, 5, 6, 7, 8, 9};

  std::uint64_t episodes = 50'000;    // joint-phase episode budget; 0 = use joint_steps
  std::uint64_t joint_steps = 0;      // joint-phase primitive step budget when episodes == 0
  std::uint64_t pretrain_steps = 0;   // meta exploration pinned to 1 for this many steps

  double gamma = 0.99;
  double learning_rate = 0.00025;
  std::size_t minibatch = 32;
  std::size_t warmup = 100;
  std::size_t controller_capacity = 100'000;
  std::size_t meta_capacity = 100'000;

  double epsilon_start = 1.0;
  double epsilon_floor = 0.1;
  std::uint64_t epsilon_horizon = 50'000;
  ControllerEpsilon controller_epsilon = ControllerEpsilon::schedule;
  std::size_t success_window = 100;
  double intrinsic_reward = 1.0;

  std::vector<std::size_t> hidden = {64};
  std::size_t sync_period = 1000;

  std::size_t reward_window = 1000;
  std::size_t log_interval = 100;
  std::size_t eval_episodes = 0;
  double eval_epsilon = 0.1;
  bool save_checkpoints = true;
  std::size_t threads = 0;  // 0 = one per hardware thread

  int step_limit = 500;
  std::vector<std::string> map;  // empty = built-in layout

  /// Line on which each key was last set, for diagnostics.
  std::map<std::string, std::size_t> origin;

  std::size_t line_of(const std::string& key) const {
    const auto it = origin.find(key);
    return it == origin.end() ? 0 : it->second;
  }

  KeyDoorLayout layout() const {
    try {
      return KeyDoorLayout::parse(map.empty() ? KeyDoorLayout::default_map() : map, step_limit);
    } catch (const LayoutError& e) {
      std::size_t line = line_of("map");
      if (e.row() >= 0 && static_cast<std::size_t>(e.row()) < map_lines.size()) line = map_lines[static_cast<std::size_t>(e.row())];
      throw ConfigError(line, std::string("map: ") + e.what());
    }
  }

  std::vector<std::size_t> map_lines;

  HdqnOptions hdqn_options() const {
    HdqnOptions o;
    o.gamma = gamma;
    o.minibatch = minibatch;
    o.warmup = warmup;
    o.controller_capacity = controller_capacity;
    o.meta_capacity = meta_capacity;
    o.meta_epsilon = EpsilonSchedule(epsilon_start, epsilon_floor, epsilon_horizon);
    o.controller_mode = controller_epsilon;
    o.controller_epsilon = EpsilonSchedule(epsilon_start, epsilon_floor, epsilon_horizon);
    o.success_window = success_window;
    o.controller_epsilon_floor = epsilon_floor;
    o.eval_epsilon = eval_epsilon;
    return o;
  }

  MlpOptions mlp_options() const { return MlpOptions{hidden, learning_rate, sync_period}; }

  /// Cross-field checks; throws ConfigError pointing at the offending key.
  void validate() const {
    auto fail = [&](const std::string& key, const std::string& msg) { throw ConfigError(line_of(key), key + ": " + msg); };
    if (seeds.empty()) fail("seeds", "at least one seed is required");
    if (episodes == 0 && joint_steps == 0) fail("episodes", "set episodes or joint_steps to a positive budget");
    if (!(gamma >= 0.0 && gamma < 1.0)) fail("gamma", "must lie in [0, 1)");
    if (!(learning_rate > 0.0)) fail("learning_rate", "must be positive");
    if (backend == Backend::tabular && learning_rate > 1.0) fail("learning_rate", "tabular learning rate must be <= 1");
    if (minibatch == 0) fail("minibatch", "must be positive");
    if (controller_capacity == 0) fail("controller_capacity", "must be positive");
    if (meta_capacity == 0) fail("meta_capacity", "must be positive");
    if (!(epsilon_floor >= 0.0 && epsilon_floor <= epsilon_start && epsilon_start <= 1.0)) {
      fail("epsilon_floor", "need 0 <= epsilon_floor <= epsilon_start <= 1");
    }
    if (epsilon_horizon == 0) fail("epsilon_horizon", "must be positive");
    if (success_window == 0) fail("success_window", "must be positive");
    if (!(intrinsic_reward > 0.0)) fail("intrinsic_reward", "must be positive");
    for (std::size_t h : hidden) {
      if (h == 0) fail("hidden", "layer sizes must be positive");
    }
    if (sync_period == 0) fail("sync_period", "must be positive");
    if (reward_window == 0) fail("reward_window", "must be positive");
    if (log_interval == 0) fail("log_interval", "must be positive");
    if (!(eval_epsilon >= 0.0 && eval_epsilon <= 1.0)) fail("eval_epsilon", "must lie in [0, 1]");
    if (agent == AgentKind::flat && backend == Backend::mlp) fail("backend", "the flat baseline is tabular only");
    if (agent == AgentKind::flat && pretrain_steps > 0) fail("pretrain_steps", "the flat baseline has no pretrain phase");
    if (env == EnvKind::keydoor) (void)layout();
  }
};

namespace detail {

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

template <typename T>
T parse_number(const std::string& text, std::size_t line, const std::string& key) {
  T value{};
  const char* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end) throw ConfigError(line, key + ": cannot parse '" + text + "' as a number");
  return value;
}

template <typename T>
std::vector<T> parse_list(const std::string& text, std::size_t line, const std::string& key) {
  std::vector<T> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_number<T>(trim(item), line, key));
  if (out.empty()) throw ConfigError(line, key + ": empty list");
  return out;
}

inline bool parse_bool(const std::string& text, std::size_t line, const std::string& key) {
  if (text == "true" || text == "1" || text == "yes") return true;
  if (text == "false" || text == "0" || text == "no") return false;
  throw ConfigError(line, key + ": expected true or false, got '" + text + "'");
}

}  // namespace detail

/// Sets one key. Throws ConfigError on unknown keys or malformed values.
inline void apply_setting(ExperimentConfig& cfg, const std::string& key, const std::string& value, std::size_t line) {
  using detail::parse_list;
  using detail::parse_number;
  auto choice = [&](std::initializer_list<const char*> allowed) {
    for (const char* a : allowed) {
      if (value == a) return;
    }
    std::string msg = key + ": '" + value + "' is not one of";
    for (const char* a : allowed) msg += std::string(" ") + a;
    throw ConfigError(line, msg);
  };

  if (key == "env") {
    choice({"chain", "keydoor"});
    cfg.env = value == "chain" ? EnvKind::chain : EnvKind::keydoor;
  } else if (key == "agent") {
    choice({"hdqn", "flat"});
    cfg.agent = value == "hdqn" ? AgentKind::hdqn : AgentKind::flat;
  } else if (key == "backend") {
    choice({"tabular", "mlp"});
    cfg.backend = value == "tabular" ? Backend::tabular : Backend::mlp;
  } else if (key == "seeds") {
    cfg.seeds = parse_list<std::uint64_t>(value, line, key);
  } else if (key == "episodes") {
    cfg.episodes = parse_number<std::uint64_t>(value, line, key);
  } else if (key == "joint_steps") {
    cfg.joint_steps = parse_number<std::uint64_t>(value, line, key);
  } else if (key == "pretrain_steps") {
    cfg.pretrain_steps = parse_number<std::uint64_t>(value, line, key);
  } else if (key == "gamma") {
    cfg.gamma = parse_number<double>(value, line, key);
  } else if (key == "learning_rate") {
    cfg.learning_rate = parse_number<double>(value, line, key);
  } else if (key == "minibatch") {
    cfg.minibatch = parse_number<std::size_t>(value, line, key);
  } else if (key == "warmup") {
    cfg.warmup = parse_number<std::size_t>(value, line, key);
  } else if (key == "controller_capacity") {
    cfg.controller_capacity = parse_number<std::size_t>(value, line, key);
  } else if (key == "meta_capacity") {
    cfg.meta_capacity = parse_number<std::size_t>(value, line, key);
  } else if (key == "epsilon_start") {
    cfg.epsilon_start = parse_number<double>(value, line, key);
  } else if (key == "epsilon_floor") {
    cfg.epsilon_floor = parse_number<double>(value, line, key);
  } else if (key == "epsilon_horizon") {
    cfg.epsilon_horizon = parse_number<std::uint64_t>(value, line, key);
  } else if (key == "controller_epsilon") {
    choice({"schedule", "success_rate"});
    cfg.controller_epsilon = value == "schedule" ? ControllerEpsilon::schedule : ControllerEpsilon::success_rate;
  } else if (key == "success_window") {
    cfg.success_window = parse_number<std::size_t>(value, line, key);
  } else if (key == "intrinsic_reward") {
    cfg.intrinsic_reward = parse_number<double>(value, line, key);
  } else if (key == "hidden") {
    cfg.hidden = parse_list<std::size_t>(value, line, key);
  } else if (key == "sync_period") {
    cfg.sync_period = parse_number<std::size_t>(value, line, key);
  } else if (key == "reward_window") {
    cfg.reward_window = parse_number<std::size_t>(value, line, key);
  } else if (key == "log_interval") {
    cfg.log_interval = parse_number<std::size_t>(value, line, key);
  } else if (key == "eval_episodes") {
    cfg.eval_episodes = parse_number<std::size_t>(value, line, key);
  } else if (key == "eval_epsilon") {
    cfg.eval_epsilon = parse_number<double>(value, line, key);
  } else if (key == "save_checkpoints") {
    cfg.save_checkpoints = detail::parse_bool(value, line, key);
  } else if (key == "threads") {
    cfg.threads = parse_number<std::size_t>(value, line, key);
  } else if (key == "step_limit") {
    cfg.step_limit = parse_number<int>(value, line, key);
  } else if (key == "map") {
    if (cfg.origin.count("map") == 0) {
      cfg.map.clear();
      cfg.map_lines.clear();
    }
    cfg.map.push_back(value);
    cfg.map_lines.push_back(line);
  } else {
    throw ConfigError(line, "unknown key '" + key + "'");
  }
  cfg.origin[key] = line;
}

/// Parses `key = value` lines. `#` starts a comment unless it is part of a
/// `map` value; blank lines are ignored; `map` may repeat, one row per line.
inline ExperimentConfig parse_config(std::istream& in) {
  ExperimentConfig cfg;
  std::string raw;
  std::size_t line = 0;
  while (std::getline(in, raw)) {
    ++line;
    const auto eq = raw.find('=');
    const std::string head = detail::trim(raw.substr(0, eq == std::string::npos ? raw.size() : eq));
    std::string text = raw;
    if (head != "map") {
      const auto hash = text.find('#');
      if (hash != std::string::npos) text.resize(hash);
    }
    if (detail::trim(text).empty()) continue;
    if (eq == std::string::npos) throw ConfigError(line, "expected 'key = value'");
    const std::string key = detail::trim(text.substr(0, eq));
    const std::string value = detail::trim(text.substr(eq + 1));
    if (key.empty()) throw ConfigError(line, "missing key before '='");
    if (value.empty()) throw ConfigError(line, key + ": missing value");
    apply_setting(cfg, key, value, line);
  }
  cfg.validate();
  return cfg;
}

inline ExperimentConfig parse_config_string(const std::string& text) {
  std::istringstream in(text);
  return parse_config(in);
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(0, "cannot open config file '" + path + "'");
  return parse_config(in);
}

}  // namespace hdqn

#endif  // HDQN_CONFIG_HPP
