#pragma once

#include <cstdint>
#include <vector>

#include "robustrl/common/rng.hpp"
#include "robustrl/diffcore/mlp.hpp"
#include "robustrl/envs/env.hpp"
#include "robustrl/ppo/policy.hpp"

namespace robustrl::ppo {

// One iteration's worth of transitions, stored column-wise and lane-major:
// row (lane, t) sits at index lane * steps + t. Observations are in
// normalized units, actions are the raw samples before environment
// clipping (their log-probabilities are what the ratio objective needs).
struct RolloutBuffer {
  int lanes = 0;
  int steps = 0;  // per lane
  int obs_dim = 0;
  int act_dim = 0;

  std::vector<double> obs;        // rows x obs_dim
  std::vector<double> next_obs;   // rows x obs_dim
  std::vector<double> actions;    // rows x act_dim
  std::vector<double> log_probs;  // rows
  std::vector<double> rewards;    // rows
  std::vector<std::uint8_t> terminated;  // failure at t: no bootstrap
  std::vector<std::uint8_t> done;        // episode boundary after t

  // Filled during the update phase.
  std::vector<double> values;             // V(obs)
  std::vector<double> next_values;        // V(next_obs)
  std::vector<double> worst_next_values;  // solver output per row
  std::vector<double> worst_next_states;  // rows x obs_dim solver cache
  std::vector<double> advantages;
  std::vector<double> rewards_to_go;

  std::size_t rows() const {
    return static_cast<std::size_t>(lanes) * static_cast<std::size_t>(steps);
  }
  std::size_t row(int lane, int t) const {
    return static_cast<std::size_t>(lane) * static_cast<std::size_t>(steps) +
           static_cast<std::size_t>(t);
  }
  void resize(int lanes_, int steps_, int obs_dim_, int act_dim_);
};

// Persistent simulation state of one rollout lane. Episode seeds come from a
// per-lane stream, so trajectories depend only on (run seed, lane, episode
// ordinal), never on how lanes are scheduled across workers.
struct LaneState {
  envs::EnvState state;
  Rng action_rng{0};
  std::uint64_t lane_seed = 0;
  std::uint64_t episode_count = 0;
  double episode_return = 0.0;
  int episode_length = 0;
  diffcore::MlpScratch scratch;
  std::vector<double> completed_returns;  // episodes finished in the current collect
};

// Steps `lanes` independent environment instances with the sampling policy.
// Lane state persists across collect calls; episodes straddle collection
// boundaries without bias thanks to bootstrap handling in the advantage
// recursion.
class RolloutCollector {
 public:
  RolloutCollector(const envs::Env& env, std::uint64_t run_seed, int lanes);

  // Advances every lane `steps` transitions into `buffer` (resized here).
  // Returns of episodes that finished during this call are appended to
  // `completed_returns` in lane-major order. Safe to parallelize because
  // each lane only touches its own state and its own buffer rows; the result
  // is identical for every worker count.
  void collect(const GaussianPolicy& policy, int steps, int workers,
               RolloutBuffer& buffer, std::vector<double>& completed_returns);

  int lanes() const { return static_cast<int>(lanes_.size()); }
  const LaneState& lane(int i) const { return lanes_[static_cast<std::size_t>(i)]; }
  LaneState& lane(int i) { return lanes_[static_cast<std::size_t>(i)]; }

 private:
  const envs::Env* env_;
  std::vector<LaneState> lanes_;
};

}  // namespace robustrl::ppo
