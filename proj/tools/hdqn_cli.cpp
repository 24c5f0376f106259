// Command-line front end: `run` trains and writes CSV metrics, `eval` rolls
// out a saved agent, `oracle` prints exact values of the augmented chain.

#include <filesystem>
#include <iomanip>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "hdqn/config.hpp"
#include "hdqn/experiment.hpp"
#include "hdqn/oracle.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitRuntime = 2;

hdqn::ExperimentConfig load(const std::string& path) {
  return path.empty() ? hdqn::ExperimentConfig{} : hdqn::load_config(path);
}

void apply_overrides(hdqn::ExperimentConfig& cfg, const std::optional<std::uint64_t>& seed,
                     const std::string& backend) {
  if (seed) cfg.seeds = {*seed};
  if (!backend.empty()) hdqn::apply_setting(cfg, "backend", backend, 0);
  cfg.validate();
}

void print_eval(const hdqn::EvalSummary& s) {
  std::cout << "episodes " << s.episodes << "\n"
            << "mean_reward " << hdqn::csv_number(s.mean) << "\n"
            << "ci95 " << hdqn::csv_number(s.ci95) << "\n"
            << "full_score_frac " << hdqn::csv_number(s.full_score_frac) << "\n";
  for (std::size_t g = 0; g < s.goal_names.size(); ++g) {
    std::cout << "goal " << s.goal_names[g] << " picks " << s.goal_picks[g] << " success_rate "
              << hdqn::csv_number(s.goal_success[g]) << "\n";
  }
}

int run(const std::string& config, std::optional<std::uint64_t> seed, const std::string& backend,
        const std::string& out_dir) {
  auto cfg = load(config);
  apply_overrides(cfg, seed, backend);
  const auto result = hdqn::run_experiment(cfg, out_dir);
  for (const auto& s : result.seeds) {
    std::cout << "seed " << s.seed << " episodes " << s.training.size();
    if (!s.rows.empty()) std::cout << " reward_ma " << hdqn::csv_number(s.rows.back().reward_ma);
    if (s.eval) {
      std::cout << " eval_mean " << hdqn::csv_number(s.eval->mean) << " eval_full_score_frac "
                << hdqn::csv_number(s.eval->full_score_frac);
    }
    std::cout << "\n";
  }
  for (const auto& f : result.files) std::cout << "wrote " << f << "\n";
  return kExitOk;
}

int eval(const std::string& config, const std::string& checkpoint, std::optional<std::uint64_t> seed,
         std::size_t episodes, double epsilon) {
  auto cfg = load(config);
  const auto ckpt = hdqn::load_checkpoint(checkpoint);
  print_eval(hdqn::evaluate_policy(ckpt, cfg, episodes, epsilon, seed.value_or(0)));
  return kExitOk;
}

int oracle(double gamma) {
  const auto r = hdqn::oracle_value_iteration(hdqn::ChainEnv{}, gamma);
  std::cout << "position,visited_s6,value,best_action\n";
  for (std::size_t s = 0; s < r.value.size(); ++s) {
    const std::size_t position = s / 2 + 1;
    const bool visited = s % 2 == 1;
    std::cout << position << ',' << (visited ? 1 : 0) << ',' << std::setprecision(12) << r.value[s] << ','
              << (position == 1 ? "-" : (r.policy[s] == hdqn::ChainEnv::kRight.index ? "right" : "left")) << "\n";
  }
  std::cerr << "sweeps " << r.sweeps << " residual " << r.residual << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hierarchical DQN experiments"};
  app.require_subcommand(1);

  std::string config, out_dir = "results", backend, checkpoint;
  std::optional<std::uint64_t> seed;
  std::size_t episodes = 200;
  double epsilon = 0.1, gamma = 1.0;

  auto* run_cmd = app.add_subcommand("run", "train every configured seed and write CSV metrics");
  run_cmd->add_option("--config", config, "config file (defaults reproduce the chain experiment)");
  run_cmd->add_option("--seed", seed, "train only this seed");
  run_cmd->add_option("--out", out_dir, "output directory")->capture_default_str();
  run_cmd->add_option("--backend", backend, "value-function backend")->check(CLI::IsMember({"tabular", "mlp"}));

  auto* eval_cmd = app.add_subcommand("eval", "roll out a saved agent with fixed exploration");
  eval_cmd->add_option("--config", config, "config describing the environment");
  eval_cmd->add_option("--checkpoint", checkpoint, "checkpoint written by `run`")->required();
  eval_cmd->add_option("--seed", seed, "evaluation seed");
  eval_cmd->add_option("--episodes", episodes, "number of episodes")->capture_default_str();
  eval_cmd->add_option("--epsilon", epsilon, "exploration rate for both levels")->capture_default_str();

  auto* oracle_cmd = app.add_subcommand("oracle", "value iteration on the augmented chain");
  oracle_cmd->add_option("--gamma", gamma, "discount")->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run_cmd) return run(config, seed, backend, out_dir);
    if (*eval_cmd) return eval(config, checkpoint, seed, episodes, epsilon);
    if (*oracle_cmd) return oracle(gamma);
  } catch (const hdqn::ConfigError& e) {
    std::cerr << (config.empty() ? "config" : config) << ": " << e.what() << "\n";
    return kExitConfig;
  } catch (const hdqn::FormatError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const hdqn::DivergenceError& e) {
    std::cerr << "diverged: " << e.what() << "\n";
    return kExitRuntime;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitOk;
}
