#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>

#include "robustrl/cli/config.hpp"

namespace robustrl::cli {

struct CommonOptions {
  std::filesystem::path out;          // run directory (compare: output file)
  std::optional<std::uint64_t> seed;  // overrides the config's seed list
  int workers = 1;
  bool strict_alg1 = false;
};

// One training run per seed, each in <out>/seed_<s>/. Returns 0 when every
// run completes, 1 when any diverged (its partial artifacts stay on disk).
int cmd_train(const RunConfig& run, const CommonOptions& opt);

// Sweeps the perturbation grid for a trained policy; writes grid.csv,
// grid.meta.json, and rho.csv into opt.out.
int cmd_grid(const std::filesystem::path& checkpoint_path, const RunConfig& run,
             const CommonOptions& opt);

// Mean-action episodes on the nominal environment; writes smoothness.csv.
int cmd_eval(const std::filesystem::path& checkpoint_path, int n_episodes,
             const CommonOptions& opt);

// Local-Lipschitz estimates for the checkpoint's actor and critic over
// rollout states; writes llc.csv. States come from mean-action rollouts of
// `states_from` when given (so several checkpoints can be probed on one
// shared state set), else of the checkpoint itself.
int cmd_llc(const std::filesystem::path& checkpoint_path, const RunConfig& run,
            const std::optional<std::filesystem::path>& states_from,
            const CommonOptions& opt);

// `label=dir` arguments. Averages the grid matrices of dirs sharing a label
// cell-wise (each dir holds one policy's grid.csv), recomputes ring minima
// from the pooled matrix, and writes one table row per label to opt.out.
int cmd_compare(std::span<const std::string> label_dirs, const CommonOptions& opt);

}  // namespace robustrl::cli
