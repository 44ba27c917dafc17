#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "robustrl/envs/env.hpp"
#include "robustrl/ppo/policy.hpp"

namespace robustrl::eval {

// M x M sweep over two physical-parameter scale axes. The center cell is the
// nominal system, so for odd M the middle scale on each axis is exactly 1.0.
struct PerturbationGrid {
  int size = 11;  // M, odd
  std::string axis1 = "mass";
  std::string axis2 = "damping";
  std::vector<double> axis1_scales;  // size entries, ascending
  std::vector<double> axis2_scales;
  int episodes_per_cell = 20;

  // 11 x 11 over [0.2, 1.8] on both axes, 20 episodes per cell.
  static PerturbationGrid defaults();
};

void validate_grid(const PerturbationGrid& grid);

// Evenly spaced scales over [lo, hi] with the middle entry forced to exactly
// 1.0 for odd m (the arithmetic midpoint can land one ulp off).
std::vector<double> grid_scales(int m, double lo, double hi);

struct RobustnessReport {
  PerturbationGrid grid;
  // Row-major size x size, row index = axis1 scale index.
  std::vector<double> cell_means;
  std::vector<std::uint8_t> cell_diverged;  // any episode in the cell diverged
  // rho_robustness[rho] = min cell mean over the ring at Linf index distance
  // rho from the center; entry 0 is the center cell itself.
  std::vector<double> rho_robustness;
  std::uint64_t master_seed = 0;
  // Provenance, filled by the caller when known.
  std::string variant;
  double epsilon = 0.0;
  double lambda_lips = 0.0;
  std::vector<std::uint64_t> seeds;
};

std::vector<double> rho_robustness(std::span<const double> cell_means, int m);

// Evaluates the deterministic mean action of `policy` on every perturbed
// variant of `env`. Episode seeds derive from (seed, cell index, episode),
// so the report is identical for any worker count. Divergence inside a cell
// keeps the achieved mean and sets the cell's flag.
RobustnessReport run_grid(const ppo::GaussianPolicy& policy, const envs::Env& env,
                          const PerturbationGrid& grid, std::uint64_t seed,
                          int workers);

}  // namespace robustrl::eval
