#ifndef HDQN_EXPERIMENT_HPP
#define HDQN_EXPERIMENT_HPP

#include <array>
#include <atomic>
#include <charconv>
#include <cmath>
#include <exception>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "hdqn/agent.hpp"
#include "hdqn/baseline.hpp"
#include "hdqn/chain.hpp"
#include "hdqn/checkpoint.hpp"
#include "hdqn/config.hpp"
#include "hdqn/critic.hpp"
#include "hdqn/keydoor.hpp"

namespace hdqn {

/// Compact per-episode record kept for metrics.
struct EpisodeRecord {
  double reward = 0.0;
  std::size_t steps = 0;
  std::vector<std::uint32_t> visits;     // per StateId (chain only)
  std::vector<std::uint32_t> picks;      // per goal
  std::vector<std::uint32_t> successes;  // per goal
};

/// One logged point of a training curve.
struct MetricRow {
  std::uint64_t seed = 0;
  std::uint64_t episode = 0;  // episodes completed in the logged phase, 1-based
  double reward_ma = 0.0;
  std::vector<double> visits;        // chain: mean visits to s3..s6 per episode
  std::vector<double> pick_frac;     // per goal
  std::vector<double> success_rate;  // per goal
};

struct EvalSummary {
  std::size_t episodes = 0;
  double mean = 0.0;
  double std_error = 0.0;
  double ci95 = 0.0;          // half-width of the normal 95% interval
  double full_score_frac = 0.0;  // fraction of episodes reaching the task's top score
  std::vector<std::string> goal_names;
  std::vector<std::uint64_t> goal_picks;
  std::vector<double> goal_success;
};

struct SeedResult {
  std::uint64_t seed = 0;
  std::vector<EpisodeRecord> pretrain;
  std::vector<EpisodeRecord> training;  // joint phase (or all episodes for the flat agent)
  std::vector<MetricRow> rows;
  std::optional<EvalSummary> eval;
  std::optional<Checkpoint> checkpoint;
};

struct ExperimentResult {
  std::vector<SeedResult> seeds;
  std::vector<std::string> files;
};

/// Chain visits columns cover s3..s6.
inline constexpr std::size_t kChainFirstLoggedState = 2;
inline constexpr std::size_t kChainLoggedStates = 4;

inline double top_score(EnvKind env) {
  return env == EnvKind::chain ? ChainEnv::kRewardVisited : KeyDoorEnv::kKeyReward + KeyDoorEnv::kDoorReward;
}

/// Shortest text that parses back to exactly `v`.
inline std::string csv_number(double v) {
  std::array<char, 32> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), res.ptr);
}

namespace detail {

inline EpisodeRecord record_of(const EpisodeTrace& t, std::size_t goals, bool keep_visits) {
  EpisodeRecord r;
  r.reward = t.extrinsic_reward;
  r.steps = t.steps;
  if (keep_visits) r.visits.assign(t.visits.begin(), t.visits.end());
  r.picks.assign(goals, 0);
  r.successes.assign(goals, 0);
  for (std::size_t i = 0; i < t.goals.size(); ++i) {
    ++r.picks[t.goals[i].index];
    if (t.goal_reached[i]) ++r.successes[t.goals[i].index];
  }
  return r;
}

inline void check_finite(double v, std::uint64_t seed, std::uint64_t episode, const char* what) {
  if (!std::isfinite(v)) {
    throw DivergenceError(std::string("non-finite ") + what + " (seed " + std::to_string(seed) + ", episode " +
                          std::to_string(episode) + ")");
  }
}

/// Trailing-window metrics over records[end - window, end).
inline MetricRow window_row(const std::vector<EpisodeRecord>& records, std::size_t end, std::size_t window,
                            std::uint64_t seed, EnvKind env, std::size_t goals) {
  const std::size_t begin = end > window ? end - window : 0;
  const double n = static_cast<double>(end - begin);
  MetricRow row;
  row.seed = seed;
  row.episode = end;
  std::vector<double> picks(goals, 0.0), successes(goals, 0.0);
  if (env == EnvKind::chain) row.visits.assign(kChainLoggedStates, 0.0);
  for (std::size_t i = begin; i < end; ++i) {
    const auto& r = records[i];
    row.reward_ma += r.reward;
    if (env == EnvKind::chain && !r.visits.empty()) {
      for (std::size_t k = 0; k < kChainLoggedStates; ++k) row.visits[k] += r.visits[kChainFirstLoggedState + k];
    }
    for (std::size_t g = 0; g < goals && g < r.picks.size(); ++g) {
      picks[g] += r.picks[g];
      successes[g] += r.successes[g];
    }
  }
  row.reward_ma /= n;
  for (double& v : row.visits) v /= n;
  double total = 0.0;
  for (double p : picks) total += p;
  row.pick_frac.resize(goals);
  row.success_rate.resize(goals);
  for (std::size_t g = 0; g < goals; ++g) {
    row.pick_frac[g] = total > 0 ? picks[g] / total : 0.0;
    row.success_rate[g] = picks[g] > 0 ? successes[g] / picks[g] : 0.0;
  }
  check_finite(row.reward_ma, seed, end, "reward");
  return row;
}

inline std::vector<MetricRow> metric_rows(const std::vector<EpisodeRecord>& records, const ExperimentConfig& cfg,
                                          std::uint64_t seed, std::size_t goals) {
  std::vector<MetricRow> rows;
  for (std::size_t end = 1; end <= records.size(); ++end) {
    if (end % cfg.log_interval == 0 || end == records.size()) {
      rows.push_back(window_row(records, end, cfg.reward_window, seed, cfg.env, goals));
    }
  }
  return rows;
}

inline EvalSummary summarize_eval(const std::vector<EpisodeTrace>& traces, EnvKind env,
                                  const std::vector<GoalSpec>& goals) {
  EvalSummary s;
  s.episodes = traces.size();
  const double n = static_cast<double>(traces.size());
  double sum = 0.0, sq = 0.0;
  std::size_t full = 0;
  const double top = top_score(env);
  for (const auto& g : goals) s.goal_names.push_back(g.name());
  s.goal_picks.assign(goals.size(), 0);
  std::vector<double> succ(goals.size(), 0.0);
  for (const auto& t : traces) {
    sum += t.extrinsic_reward;
    sq += t.extrinsic_reward * t.extrinsic_reward;
    if (t.extrinsic_reward >= top - 1e-9) ++full;
    for (std::size_t i = 0; i < t.goals.size(); ++i) {
      ++s.goal_picks[t.goals[i].index];
      if (t.goal_reached[i]) succ[t.goals[i].index] += 1.0;
    }
  }
  if (traces.empty()) return s;
  s.mean = sum / n;
  const double var = n > 1 ? std::max(0.0, (sq - n * s.mean * s.mean) / (n - 1)) : 0.0;
  s.std_error = std::sqrt(var / n);
  s.ci95 = 1.96 * s.std_error;
  s.full_score_frac = static_cast<double>(full) / n;
  s.goal_success.resize(goals.size());
  for (std::size_t g = 0; g < goals.size(); ++g) {
    s.goal_success[g] = s.goal_picks[g] ? succ[g] / static_cast<double>(s.goal_picks[g]) : 0.0;
  }
  return s;
}

inline ValueFunction make_value_function(const ExperimentConfig& cfg, QShape shape, RngStream& init) {
  if (cfg.backend == Backend::tabular) return ValueFunction(QTable(shape, cfg.learning_rate));
  return ValueFunction(MlpQ(shape, cfg.mlp_options(), init));
}

/// Builds the environment and critic named by the config and hands them to `fn`.
template <typename Fn>
decltype(auto) with_task(const ExperimentConfig& cfg, Fn&& fn) {
  if (cfg.env == EnvKind::chain) {
    ChainEnv env;
    ChainCritic critic(env, cfg.intrinsic_reward);
    return fn(env, critic);
  }
  KeyDoorEnv env(cfg.layout());
  KeyDoorCritic critic(env, cfg.intrinsic_reward);
  return fn(env, critic);
}

template <typename Env, typename Crit>
HdqnAgent<Env, Crit> new_hdqn_agent(const ExperimentConfig& cfg, const Env& env, const Crit& critic,
                                    std::uint64_t seed) {
  RngStream init(seed, StreamId::initialization);
  const std::size_t states = env.state_count();
  const std::size_t goals = critic.goal_set().size();
  auto q1 = make_value_function(cfg, QShape{states, goals, env.action_count()}, init);
  auto q2 = make_value_function(cfg, QShape{states, 0, goals}, init);
  return HdqnAgent<Env, Crit>(std::move(q1), std::move(q2), cfg.hdqn_options(), seed);
}

inline FlatOptions flat_options(const ExperimentConfig& cfg) {
  return FlatOptions{cfg.learning_rate, cfg.gamma,
                     EpsilonSchedule(cfg.epsilon_start, cfg.epsilon_floor, cfg.epsilon_horizon)};
}

template <typename Env, typename Crit>
std::vector<EpisodeTrace> rollouts(const Checkpoint& ckpt, const ExperimentConfig& cfg, Env& env,
                                   const Crit& critic, std::size_t episodes, double epsilon, std::uint64_t seed) {
  if (ckpt.state_count != env.state_count() || ckpt.action_count != env.action_count()) {
    throw FormatError("checkpoint was trained on " + std::to_string(ckpt.state_count) + " states / " +
                      std::to_string(ckpt.action_count) + " actions, but the configured environment has " +
                      std::to_string(env.state_count()) + " / " + std::to_string(env.action_count()));
  }
  std::vector<EpisodeTrace> traces;
  RngStream env_rng(seed, StreamId::evaluation);
  if (ckpt.kind == Checkpoint::Kind::hdqn) {
    if (ckpt.goal_count != critic.goal_set().size()) {
      throw FormatError("checkpoint has " + std::to_string(ckpt.goal_count) + " goals, the environment has " +
                        std::to_string(critic.goal_set().size()));
    }
    HdqnOptions opt = cfg.hdqn_options();
    opt.eval_epsilon = epsilon;
    auto agent = restore_agent<Env, Crit>(ckpt, opt, seed);
    for (std::size_t i = 0; i < episodes; ++i) traces.push_back(agent.run_episode(env, critic, Phase::evaluate, env_rng));
  } else {
    const QTable* table = ckpt.controller->table();
    if (!table) throw FormatError("flat checkpoint must hold a table");
    FlatAgent<Env> agent(*table, flat_options(cfg), seed);
    for (std::size_t i = 0; i < episodes; ++i) traces.push_back(agent.run_episode(env, env_rng, false, epsilon));
  }
  return traces;
}

template <typename Env, typename Crit>
SeedResult train_seed(const ExperimentConfig& cfg, Env env, const Crit& critic, std::uint64_t seed) {
  SeedResult result;
  result.seed = seed;
  RngStream env_rng(seed, StreamId::environment);
  const std::size_t goals = cfg.agent == AgentKind::hdqn ? critic.goal_set().size() : 0;
  const bool keep_visits = cfg.env == EnvKind::chain;
  auto budget_left = [&](std::uint64_t episodes_done, std::uint64_t steps_done) {
    return cfg.episodes > 0 ? episodes_done < cfg.episodes : steps_done < cfg.joint_steps;
  };

  if (cfg.agent == AgentKind::hdqn) {
    auto agent = new_hdqn_agent(cfg, env, critic, seed);
    while (agent.primitive_steps() < cfg.pretrain_steps) {
      result.pretrain.push_back(
          record_of(agent.run_episode(env, critic, Phase::pretrain, env_rng), goals, keep_visits));
    }
    while (budget_left(result.training.size(), agent.joint_steps())) {
      const auto trace = agent.run_episode(env, critic, Phase::joint, env_rng);
      check_finite(trace.extrinsic_reward, seed, result.training.size(), "reward");
      if (auto loss = agent.last_controller_loss()) check_finite(*loss, seed, result.training.size(), "controller loss");
      if (auto loss = agent.last_meta_loss()) check_finite(*loss, seed, result.training.size(), "meta loss");
      result.training.push_back(record_of(trace, goals, keep_visits));
    }
    result.checkpoint = make_checkpoint(agent, env.state_count(), env.action_count());
  } else {
    FlatAgent<Env> agent(env.state_count(), env.action_count(), flat_options(cfg), seed);
    while (budget_left(result.training.size(), agent.steps())) {
      const auto trace = agent.run_episode(env, env_rng);
      check_finite(trace.extrinsic_reward, seed, result.training.size(), "reward");
      result.training.push_back(record_of(trace, 0, keep_visits));
    }
    Checkpoint c;
    c.kind = Checkpoint::Kind::flat;
    c.state_count = env.state_count();
    c.action_count = env.action_count();
    c.primitive_steps = agent.steps();
    c.controller = ValueFunction(agent.table());
    result.checkpoint = std::move(c);
  }
  result.rows = metric_rows(result.training, cfg, seed, goals);
  if (cfg.eval_episodes > 0) {
    const auto traces = rollouts(*result.checkpoint, cfg, env, critic, cfg.eval_episodes, cfg.eval_epsilon, seed);
    result.eval = summarize_eval(traces, cfg.env, cfg.agent == AgentKind::hdqn ? critic.goal_set()
                                                                              : std::vector<GoalSpec>{});
  }
  return result;
}

}  // namespace detail

/// Trains one seed of the configured experiment in the calling thread.
inline SeedResult run_seed(const ExperimentConfig& cfg, std::uint64_t seed) {
  return detail::with_task(cfg, [&](auto& env, const auto& critic) { return detail::train_seed(cfg, env, critic, seed); });
}

/// Names of the goal columns for the configured task.
inline std::vector<std::string> goal_names(const ExperimentConfig& cfg) {
  if (cfg.agent != AgentKind::hdqn) return {};
  return detail::with_task(cfg, [](auto&, const auto& critic) {
    std::vector<std::string> names;
    for (const auto& g : critic.goal_set()) names.push_back(g.name());
    return names;
  });
}

inline std::string run_name(const ExperimentConfig& cfg) {
  return std::string(to_string(cfg.env)) + "_" + std::string(to_string(cfg.agent));
}

// ---------------------------------------------------------------- CSV output

inline void write_seed_csv(std::ostream& out, const ExperimentConfig& cfg, const SeedResult& r) {
  if (cfg.env == EnvKind::chain) {
    out << "seed,episode,reward_ma,visits_s3,visits_s4,visits_s5,visits_s6\n";
    for (const auto& row : r.rows) {
      out << row.seed << ',' << row.episode << ',' << csv_number(row.reward_ma);
      for (double v : row.visits) out << ',' << csv_number(v);
      out << '\n';
    }
    return;
  }
  const auto names = goal_names(cfg);
  out << "seed,episode,reward_ma,goal,pick_frac,success_rate\n";
  for (const auto& row : r.rows) {
    if (names.empty()) {
      out << row.seed << ',' << row.episode << ',' << csv_number(row.reward_ma) << ",none,0,0\n";
      continue;
    }
    for (std::size_t g = 0; g < names.size(); ++g) {
      out << row.seed << ',' << row.episode << ',' << csv_number(row.reward_ma) << ',' << names[g] << ','
          << csv_number(row.pick_frac[g]) << ',' << csv_number(row.success_rate[g]) << '\n';
    }
  }
}

struct MeanSe {
  double mean = 0.0;
  double se = 0.0;
};

inline MeanSe mean_se(const std::vector<double>& xs) {
  MeanSe m;
  if (xs.empty()) return m;
  const double n = static_cast<double>(xs.size());
  for (double x : xs) m.mean += x;
  m.mean /= n;
  if (xs.size() > 1) {
    double ss = 0.0;
    for (double x : xs) ss += (x - m.mean) * (x - m.mean);
    m.se = std::sqrt(ss / (n - 1) / n);
  }
  return m;
}

/// Cross-seed mean and standard error at every logged episode index. Seeds
/// that never reached an index do not contribute to it.
inline void write_aggregate_csv(std::ostream& out, const ExperimentConfig& cfg, const std::vector<SeedResult>& seeds) {
  std::map<std::uint64_t, std::vector<const MetricRow*>> by_episode;
  for (const auto& s : seeds) {
    for (const auto& row : s.rows) by_episode[row.episode].push_back(&row);
  }
  auto column = [](const std::vector<const MetricRow*>& rows, auto get) {
    std::vector<double> xs;
    for (const auto* r : rows) xs.push_back(get(*r));
    return mean_se(xs);
  };
  auto emit = [&](MeanSe m) { out << ',' << csv_number(m.mean) << ',' << csv_number(m.se); };

  if (cfg.env == EnvKind::chain) {
    out << "episode,seeds,reward_ma_mean,reward_ma_se";
    for (std::size_t k = 0; k < kChainLoggedStates; ++k) {
      const auto s = std::to_string(kChainFirstLoggedState + k + 1);
      out << ",visits_s" << s << "_mean,visits_s" << s << "_se";
    }
    out << '\n';
    for (const auto& [episode, rows] : by_episode) {
      out << episode << ',' << rows.size();
      emit(column(rows, [](const MetricRow& r) { return r.reward_ma; }));
      for (std::size_t k = 0; k < kChainLoggedStates; ++k) {
        emit(column(rows, [k](const MetricRow& r) { return r.visits[k]; }));
      }
      out << '\n';
    }
    return;
  }
  const auto names = goal_names(cfg);
  out << "episode,goal,seeds,reward_ma_mean,reward_ma_se,pick_frac_mean,pick_frac_se,success_rate_mean,"
         "success_rate_se\n";
  for (const auto& [episode, rows] : by_episode) {
    const auto reward = column(rows, [](const MetricRow& r) { return r.reward_ma; });
    if (names.empty()) {
      out << episode << ",none," << rows.size();
      emit(reward);
      out << ",0,0,0,0\n";
      continue;
    }
    for (std::size_t g = 0; g < names.size(); ++g) {
      out << episode << ',' << names[g] << ',' << rows.size();
      emit(reward);
      emit(column(rows, [g](const MetricRow& r) { return r.pick_frac[g]; }));
      emit(column(rows, [g](const MetricRow& r) { return r.success_rate[g]; }));
      out << '\n';
    }
  }
}

inline void write_summary_csv(std::ostream& out, const std::vector<SeedResult>& seeds, std::size_t final_window) {
  out << "seed,pretrain_episodes,episodes,final_reward_mean,eval_episodes,eval_mean,eval_ci95,eval_full_score_frac\n";
  for (const auto& s : seeds) {
    const std::size_t n = s.training.size();
    const std::size_t begin = n > final_window ? n - final_window : 0;
    double sum = 0.0;
    for (std::size_t i = begin; i < n; ++i) sum += s.training[i].reward;
    out << s.seed << ',' << s.pretrain.size() << ',' << n << ','
        << csv_number(n > begin ? sum / static_cast<double>(n - begin) : 0.0);
    if (s.eval) {
      out << ',' << s.eval->episodes << ',' << csv_number(s.eval->mean) << ',' << csv_number(s.eval->ci95) << ','
          << csv_number(s.eval->full_score_frac);
    } else {
      out << ",0,0,0,0";
    }
    out << '\n';
  }
}

/// Trains every configured seed (in parallel when threads allow) and returns
/// results ordered by position in `cfg.seeds`.
inline std::vector<SeedResult> train_all(const ExperimentConfig& cfg) {
  std::vector<SeedResult> results(cfg.seeds.size());
  std::size_t workers = cfg.threads ? cfg.threads : std::max(1u, std::thread::hardware_concurrency());
  workers = std::min(workers, cfg.seeds.size());
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto work = [&] {
    for (std::size_t i = next++; i < cfg.seeds.size(); i = next++) {
      try {
        results[i] = run_seed(cfg, cfg.seeds[i]);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next = cfg.seeds.size();
      }
    }
  };
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
  }
  if (failure) std::rethrow_exception(failure);
  return results;
}

/// Trains, then writes per-seed CSVs, the cross-seed aggregate, a summary and
/// (optionally) one checkpoint per seed into `out_dir`.
inline ExperimentResult run_experiment(const ExperimentConfig& cfg, const std::filesystem::path& out_dir) {
  cfg.validate();
  ExperimentResult result;
  result.seeds = train_all(cfg);
  std::filesystem::create_directories(out_dir);
  const std::string name = run_name(cfg);
  auto open = [&](const std::string& file) {
    const auto path = out_dir / file;
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
    result.files.push_back(path.string());
    return out;
  };
  for (const auto& s : result.seeds) {
    auto out = open(name + "_seed" + std::to_string(s.seed) + ".csv");
    write_seed_csv(out, cfg, s);
    if (cfg.save_checkpoints && s.checkpoint) {
      const auto path = out_dir / (name + "_seed" + std::to_string(s.seed) + ".ckpt");
      save_checkpoint(path.string(), *s.checkpoint);
      result.files.push_back(path.string());
    }
  }
  {
    auto out = open(name + "_aggregate.csv");
    write_aggregate_csv(out, cfg, result.seeds);
  }
  {
    auto out = open(name + "_summary.csv");
    write_summary_csv(out, result.seeds, cfg.reward_window);
  }
  return result;
}

/// Frozen-policy rollouts of a saved agent on the configured environment.
inline EvalSummary evaluate_policy(const Checkpoint& ckpt, const ExperimentConfig& cfg, std::size_t episodes,
                                   double epsilon, std::uint64_t seed) {
  require(episodes > 0, "evaluate_policy: need at least one episode");
  require(epsilon >= 0.0 && epsilon <= 1.0, "evaluate_policy: epsilon must lie in [0, 1]");
  return detail::with_task(cfg, [&](auto& env, const auto& critic) {
    const auto traces = detail::rollouts(ckpt, cfg, env, critic, episodes, epsilon, seed);
    return detail::summarize_eval(
        traces, cfg.env, ckpt.kind == Checkpoint::Kind::hdqn ? critic.goal_set() : std::vector<GoalSpec>{});
  });
}

}  // namespace hdqn

#endif  // HDQN_EXPERIMENT_HPP
