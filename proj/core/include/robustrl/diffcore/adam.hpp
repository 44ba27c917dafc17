#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace robustrl::diffcore {

struct AdamConfig {
  double learning_rate = 3e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  AdamConfig config;
  std::uint64_t step_count = 0;
  std::vector<double> m;
  std::vector<double> v;

  static AdamState create(std::size_t n, const AdamConfig& cfg = {});
};

// One bias-corrected update in place. learning_rate = 0 leaves params
// untouched (moments still advance). Throws TrainingDivergedError on a
// non-finite gradient component; the caller decides whether that kills the
// run.
void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state);

}  // namespace robustrl::diffcore
