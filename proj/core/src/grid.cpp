#include "robustrl/eval/grid.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "robustrl/common/errors.hpp"
#include "robustrl/common/parallel.hpp"
#include "robustrl/common/rng.hpp"

namespace robustrl::eval {

PerturbationGrid PerturbationGrid::defaults() {
  PerturbationGrid g;
  g.size = 11;
  g.axis1 = "mass";
  g.axis2 = "damping";
  g.axis1_scales = grid_scales(g.size, 0.2, 1.8);
  g.axis2_scales = grid_scales(g.size, 0.2, 1.8);
  g.episodes_per_cell = 20;
  return g;
}

std::vector<double> grid_scales(int m, double lo, double hi) {
  if (m < 1) throw InvalidInputError("grid_scales: m must be >= 1");
  if (!(lo > 0.0) || !(hi >= lo)) {
    throw InvalidInputError("grid_scales: need 0 < lo <= hi");
  }
  std::vector<double> out(static_cast<std::size_t>(m));
  if (m == 1) {
    out[0] = 1.0;
    return out;
  }
  for (int i = 0; i < m; ++i) {
    out[static_cast<std::size_t>(i)] =
        lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(m - 1);
  }
  if (m % 2 == 1) out[static_cast<std::size_t>(m / 2)] = 1.0;
  return out;
}

void validate_grid(const PerturbationGrid& grid) {
  if (grid.size < 1 || grid.size % 2 == 0) {
    throw InvalidInputError("grid: size must be a positive odd number");
  }
  if (grid.episodes_per_cell < 1) {
    throw InvalidInputError("grid: episodes_per_cell must be >= 1");
  }
  const auto m = static_cast<std::size_t>(grid.size);
  if (grid.axis1_scales.size() != m || grid.axis2_scales.size() != m) {
    throw InvalidInputError("grid: each axis needs exactly `size` scales");
  }
  for (double s : grid.axis1_scales) {
    if (!(s > 0.0) || !std::isfinite(s)) {
      throw InvalidInputError("grid: axis1 scales must be positive");
    }
  }
  for (double s : grid.axis2_scales) {
    if (!(s > 0.0) || !std::isfinite(s)) {
      throw InvalidInputError("grid: axis2 scales must be positive");
    }
  }
  const std::size_t c = m / 2;
  if (grid.axis1_scales[c] != 1.0 || grid.axis2_scales[c] != 1.0) {
    throw InvalidInputError("grid: center cell must have both scales exactly 1.0");
  }
}

std::vector<double> rho_robustness(std::span<const double> cell_means, int m) {
  if (m < 1 || m % 2 == 0) {
    throw InvalidInputError("rho_robustness: m must be a positive odd number");
  }
  if (cell_means.size() != static_cast<std::size_t>(m) * static_cast<std::size_t>(m)) {
    throw InvalidInputError("rho_robustness: cell_means must hold m*m entries");
  }
  const int c = m / 2;
  std::vector<double> out(static_cast<std::size_t>(c) + 1,
                          std::numeric_limits<double>::infinity());
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < m; ++j) {
      const int rho = std::max(std::abs(i - c), std::abs(j - c));
      const std::size_t idx =
          static_cast<std::size_t>(i) * static_cast<std::size_t>(m) +
          static_cast<std::size_t>(j);
      auto& slot = out[static_cast<std::size_t>(rho)];
      slot = std::min(slot, cell_means[idx]);
    }
  }
  return out;
}

RobustnessReport run_grid(const ppo::GaussianPolicy& policy, const envs::Env& env,
                          const PerturbationGrid& grid, std::uint64_t seed,
                          int workers) {
  validate_grid(grid);
  if (policy.obs_dim() != env.state_dim() || policy.act_dim() != env.action_dim()) {
    throw InvalidInputError("run_grid: policy dimensions do not match the env");
  }

  const int m = grid.size;
  const std::size_t cells = static_cast<std::size_t>(m) * static_cast<std::size_t>(m);
  RobustnessReport report;
  report.grid = grid;
  report.cell_means.assign(cells, 0.0);
  report.cell_diverged.assign(cells, 0);
  report.master_seed = seed;

  const envs::PhysicsParams nominal = env.nominal_params();
  const int w = resolve_workers(workers);

  parallel_for(cells, w, [&](std::size_t cell) {
    const auto i = cell / static_cast<std::size_t>(m);
    const auto j = cell % static_cast<std::size_t>(m);
    envs::PhysicsParams params = nominal;
    for (double& s : params.mass_scales) s *= grid.axis1_scales[i];
    for (double& s : params.damping_scales) s *= grid.axis2_scales[j];
    const std::unique_ptr<envs::Env> cell_env = env.with_params(params);

    const std::uint64_t cell_seed = derive_seed(seed, "cell", cell);
    diffcore::MlpScratch scratch;
    std::vector<double> obs(static_cast<std::size_t>(cell_env->state_dim()));
    std::vector<double> action(static_cast<std::size_t>(cell_env->action_dim()));
    double total = 0.0;
    bool diverged = false;
    for (int e = 0; e < grid.episodes_per_cell; ++e) {
      const envs::EpisodeResult ep = envs::run_episode(
          *cell_env, derive_seed(cell_seed, "episode", static_cast<std::uint64_t>(e)),
          [&](std::span<const double> raw) {
            envs::normalize_state_into(*cell_env, raw, obs);
            policy.mean_action(obs, scratch, action);
            return action;
          },
          /*record_traces=*/false);
      total += ep.total_reward;
      diverged = diverged || ep.diverged;
    }
    report.cell_means[cell] = total / static_cast<double>(grid.episodes_per_cell);
    report.cell_diverged[cell] = diverged ? 1 : 0;
  });

  report.rho_robustness = rho_robustness(report.cell_means, m);
  return report;
}

}  // namespace robustrl::eval
