#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "robustrl/eval/grid.hpp"
#include "robustrl/ppo/train.hpp"

namespace robustrl::cli {

// One run-config file drives every subcommand: env + variant + training
// hyperparameters plus the grid/eval/llc sections the analysis commands
// read. Parsing is strict: unknown keys anywhere are rejected by full path,
// and the variant constrains which uncertainty fields may be nonzero.
struct RunConfig {
  std::string env_name = "cartpole";
  nlohmann::json env_overrides = nlohmann::json::object();
  std::string variant = "ppo";
  std::vector<std::uint64_t> seeds = {1};
  std::filesystem::path out_dir;  // may be overridden by --out

  // Variant-independent training fields; env/solver/seed/out are filled per
  // run by make_train_config.
  ppo::TrainConfig train;

  eval::PerturbationGrid grid = eval::PerturbationGrid::defaults();
  int eval_episodes = 20;
  double llc_epsilon_probe = 0.001;
  long long llc_n_probes = 1000;
  int llc_n_states = 250;

  // FNV-1a of the canonical JSON dump; embedded in artifact metadata.
  std::string config_hash;
};

RunConfig parse_run_config(const std::string& text);
RunConfig load_run_config(const std::filesystem::path& path);

// Maps the variant name onto the worst-case solver it trains with.
wcve::SolverKind solver_for_variant(const std::string& variant);

ppo::TrainConfig make_train_config(const RunConfig& run, std::uint64_t seed,
                                   const std::filesystem::path& out_dir,
                                   int workers, bool strict_alg1);

}  // namespace robustrl::cli
