#include <cstdio>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "robustrl/cli/commands.hpp"
#include "robustrl/common/errors.hpp"

using robustrl::cli::CommonOptions;
using robustrl::cli::RunConfig;

int main(int argc, char** argv) {
  CLI::App app{"Robust PPO training, perturbation grids, and smoothness analysis"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out;
  std::string checkpoint;
  std::string states_from;
  std::uint64_t seed = 0;
  int workers = 1;
  bool strict = false;
  int episodes = 0;
  std::vector<std::string> label_dirs;

  CLI::App* train = app.add_subcommand("train", "Train one run per seed from a config file");
  train->add_option("--config", config_path, "Run config file (JSON)")->required();
  train->add_option("--out", out, "Output directory (overrides the config's 'out')");
  CLI::Option* train_seed =
      train->add_option("--seed", seed, "Single seed (overrides the config's 'seeds')");
  train->add_option("--workers", workers, "Worker threads (ROBUSTRL_THREADS caps this)");
  train->add_flag("--strict-alg1", strict,
                  "Worst-case solver returns its final iterate instead of the best");

  CLI::App* grid = app.add_subcommand("grid", "Perturbation-grid sweep for a checkpoint");
  grid->add_option("--checkpoint", checkpoint, "Policy checkpoint")->required();
  grid->add_option("--config", config_path, "Run config file (grid section)");
  grid->add_option("--out", out, "Output directory")->required();
  CLI::Option* grid_seed =
      grid->add_option("--seed", seed, "Evaluation master seed (default: checkpoint seed)");
  grid->add_option("--workers", workers, "Worker threads");

  CLI::App* eval_cmd =
      app.add_subcommand("eval", "Mean-action episodes with smoothness metrics");
  eval_cmd->add_option("--checkpoint", checkpoint, "Policy checkpoint")->required();
  eval_cmd->add_option("--config", config_path, "Run config file (eval section)");
  CLI::Option* eval_episodes = eval_cmd->add_option("--episodes", episodes, "Episode count");
  eval_cmd->add_option("--out", out, "Output directory")->required();
  CLI::Option* eval_seed =
      eval_cmd->add_option("--seed", seed, "Evaluation master seed (default: checkpoint seed)");
  eval_cmd->add_option("--workers", workers, "Worker threads");

  CLI::App* llc =
      app.add_subcommand("llc", "Local Lipschitz estimates for a checkpoint's actor and critic");
  llc->add_option("--checkpoint", checkpoint, "Policy checkpoint")->required();
  llc->add_option("--config", config_path, "Run config file (llc section)");
  llc->add_option("--states-from", states_from,
                  "Checkpoint whose rollouts provide the probe states (default: the checkpoint)");
  llc->add_option("--out", out, "Output directory")->required();
  CLI::Option* llc_seed =
      llc->add_option("--seed", seed, "Probe master seed (default: checkpoint seed)");
  llc->add_option("--workers", workers, "Worker threads");

  CLI::App* compare =
      app.add_subcommand("compare", "rho-robustness table across grid report directories");
  compare->add_option("runs", label_dirs, "label=dir arguments, one per grid report")
      ->required();
  compare->add_option("--out", out, "Output CSV path")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    CommonOptions opt;
    opt.out = out;
    opt.workers = workers;
    opt.strict_alg1 = strict;

    if (train->parsed()) {
      if (train_seed->count() > 0) opt.seed = seed;
      return robustrl::cli::cmd_train(robustrl::cli::load_run_config(config_path), opt);
    }
    RunConfig run;  // defaults cover the grid/eval/llc sections
    if (!config_path.empty()) run = robustrl::cli::load_run_config(config_path);
    if (grid->parsed()) {
      if (grid_seed->count() > 0) opt.seed = seed;
      return robustrl::cli::cmd_grid(checkpoint, run, opt);
    }
    if (eval_cmd->parsed()) {
      if (eval_seed->count() > 0) opt.seed = seed;
      const int n = eval_episodes->count() > 0 ? episodes : run.eval_episodes;
      return robustrl::cli::cmd_eval(checkpoint, n, opt);
    }
    if (llc->parsed()) {
      if (llc_seed->count() > 0) opt.seed = seed;
      std::optional<std::filesystem::path> source;
      if (!states_from.empty()) source = states_from;
      return robustrl::cli::cmd_llc(checkpoint, run, source, opt);
    }
    if (compare->parsed()) {
      return robustrl::cli::cmd_compare(label_dirs, opt);
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}
