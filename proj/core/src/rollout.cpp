#include "robustrl/ppo/rollout.hpp"

#include <algorithm>
#include <span>

#include "robustrl/common/errors.hpp"
#include "robustrl/common/parallel.hpp"

namespace robustrl::ppo {

void RolloutBuffer::resize(int lanes_, int steps_, int obs_dim_, int act_dim_) {
  lanes = lanes_;
  steps = steps_;
  obs_dim = obs_dim_;
  act_dim = act_dim_;
  const std::size_t n = rows();
  obs.assign(n * static_cast<std::size_t>(obs_dim), 0.0);
  next_obs.assign(n * static_cast<std::size_t>(obs_dim), 0.0);
  actions.assign(n * static_cast<std::size_t>(act_dim), 0.0);
  log_probs.assign(n, 0.0);
  rewards.assign(n, 0.0);
  terminated.assign(n, 0);
  done.assign(n, 0);
  values.assign(n, 0.0);
  next_values.assign(n, 0.0);
  worst_next_values.assign(n, 0.0);
  worst_next_states.assign(n * static_cast<std::size_t>(obs_dim), 0.0);
  advantages.assign(n, 0.0);
  rewards_to_go.assign(n, 0.0);
}

RolloutCollector::RolloutCollector(const envs::Env& env, std::uint64_t run_seed,
                                   int lanes)
    : env_(&env) {
  if (lanes < 1) {
    throw InvalidInputError("rollout: lane count must be >= 1");
  }
  lanes_.resize(static_cast<std::size_t>(lanes));
  for (int l = 0; l < lanes; ++l) {
    LaneState& lane = lanes_[static_cast<std::size_t>(l)];
    lane.lane_seed = derive_seed(run_seed, "rollout", static_cast<std::uint64_t>(l));
    lane.action_rng =
        Rng(derive_seed(run_seed, "action", static_cast<std::uint64_t>(l)));
    lane.state = env.reset(derive_seed(lane.lane_seed, "episode", 0));
    lane.episode_count = 0;
  }
}

void RolloutCollector::collect(const GaussianPolicy& policy, int steps, int workers,
                               RolloutBuffer& buffer,
                               std::vector<double>& completed_returns) {
  if (steps < 1) {
    throw InvalidInputError("rollout: steps must be >= 1");
  }
  const int obs_dim = env_->state_dim();
  const int act_dim = env_->action_dim();
  buffer.resize(lanes(), steps, obs_dim, act_dim);

  const envs::Env& env = *env_;
  parallel_for(lanes_.size(), workers, [&](std::size_t l) {
    LaneState& lane = lanes_[l];
    lane.completed_returns.clear();
    std::vector<double> action(static_cast<std::size_t>(act_dim));
    std::vector<double> clipped(static_cast<std::size_t>(act_dim));
    const double limit = env.action_limit();

    for (int t = 0; t < steps; ++t) {
      const std::size_t r = buffer.row(static_cast<int>(l), t);
      auto obs_out = std::span<double>(buffer.obs)
                         .subspan(r * static_cast<std::size_t>(obs_dim),
                                  static_cast<std::size_t>(obs_dim));
      envs::normalize_state_into(env, lane.state.s, obs_out);

      const double logp =
          policy.sample(obs_out, lane.scratch, lane.action_rng, action);
      for (int j = 0; j < act_dim; ++j) {
        const auto uj = static_cast<std::size_t>(j);
        buffer.actions[r * static_cast<std::size_t>(act_dim) + uj] = action[uj];
        clipped[uj] = std::clamp(action[uj], -limit, limit);
      }
      buffer.log_probs[r] = logp;

      const envs::StepResult sr = env.step(lane.state, clipped);
      buffer.rewards[r] = sr.reward;
      buffer.terminated[r] = sr.terminated ? 1 : 0;
      buffer.done[r] = sr.done() ? 1 : 0;
      auto next_out = std::span<double>(buffer.next_obs)
                          .subspan(r * static_cast<std::size_t>(obs_dim),
                                   static_cast<std::size_t>(obs_dim));
      envs::normalize_state_into(env, sr.next.s, next_out);

      lane.episode_return += sr.reward;
      lane.episode_length += 1;
      if (sr.done()) {
        lane.completed_returns.push_back(lane.episode_return);
        lane.episode_return = 0.0;
        lane.episode_length = 0;
        lane.episode_count += 1;
        lane.state = env.reset(
            derive_seed(lane.lane_seed, "episode", lane.episode_count));
      } else {
        lane.state = sr.next;
      }
    }
  });

  // Deterministic merge order regardless of worker scheduling.
  for (LaneState& lane : lanes_) {
    completed_returns.insert(completed_returns.end(), lane.completed_returns.begin(),
                             lane.completed_returns.end());
  }
}

}  // namespace robustrl::ppo
