#pragma once

#include <cstdint>
#include <span>
#include <string>

#include "robustrl/diffcore/mlp.hpp"

namespace robustrl::eval {

// Empirical lower bound on the local Lipschitz constant of a network over a
// set of anchor states, in the Linf -> Linf sense. Two estimators are
// combined: random probes in the Linf ball of radius epsilon_probe, and the
// exact operator norm of the Jacobian at each anchor (max row 1-norm). The
// reported estimate is the larger; it never exceeds a certified upper bound.
struct LlcEstimate {
  std::string network;  // caller-supplied tag, e.g. "actor" or "critic"
  double epsilon_probe = 0.0;
  double estimate = 0.0;
  double probe_estimate = 0.0;     // max over (state, probe) of finite ratios
  double gradient_estimate = 0.0;  // max over states of max-row 1-norm
  int n_states = 0;
  long long n_probes = 0;  // per state
};

// `states` is n_states flattened rows of state_dim. Probe draws come from a
// per-state stream derived from (seed, state index), so for a fixed seed the
// first k probes of a state are a prefix of the first k' > k, making the
// estimate non-decreasing in n_probes, and the result is identical for any
// worker count.
LlcEstimate estimate_llc(const diffcore::MlpNetwork& net,
                         std::span<const double> states, int state_dim,
                         double epsilon_probe, long long n_probes,
                         std::uint64_t seed, int workers);

}  // namespace robustrl::eval
