#include "robustrl/envs/env.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "robustrl/common/errors.hpp"

namespace robustrl::envs {

void validate_params(const PhysicsParams& params, std::size_t bodies, std::size_t joints) {
  if (params.mass_scales.size() != bodies) {
    throw InvalidInputError("expected " + std::to_string(bodies) + " mass scales, got " +
                            std::to_string(params.mass_scales.size()));
  }
  if (params.damping_scales.size() != joints) {
    throw InvalidInputError("expected " + std::to_string(joints) + " damping scales, got " +
                            std::to_string(params.damping_scales.size()));
  }
  for (double s : params.mass_scales) {
    if (!(s > 0.0) || !std::isfinite(s)) throw InvalidInputError("mass scales must be positive");
  }
  for (double s : params.damping_scales) {
    if (!(s > 0.0) || !std::isfinite(s)) throw InvalidInputError("damping scales must be positive");
  }
  if (!std::isfinite(params.gravity)) throw InvalidInputError("gravity must be finite");
  if (!(params.timestep > 0.0) || params.timestep > 0.05) {
    throw InvalidInputError("timestep must lie in (0, 0.05]");
  }
}

std::vector<double> normalize_state(const Env& env, const EnvState& state) {
  std::vector<double> out(state.s.size());
  normalize_state_into(env, state.s, out);
  return out;
}

void normalize_state_into(const Env& env, std::span<const double> raw, std::span<double> out) {
  const auto scale = env.obs_scale();
  if (raw.size() != scale.size() || out.size() != scale.size()) {
    throw InvalidInputError("state size does not match observation scale");
  }
  for (std::size_t i = 0; i < raw.size(); ++i) out[i] = raw[i] / scale[i];
}

EpisodeResult run_episode(const Env& env, std::uint64_t seed,
                          const std::function<std::vector<double>(std::span<const double>)>& act,
                          bool record_traces) {
  EpisodeResult result;
  EnvState state = env.reset(seed);
  const double limit = env.action_limit();

  const auto record_state = [&](const EnvState& st) {
    if (record_traces) result.state_trace.insert(result.state_trace.end(), st.s.begin(), st.s.end());
    if (auto tr = env.tracking(st)) {
      result.has_tracking = true;
      result.tracking_value.insert(result.tracking_value.end(), tr->value.begin(), tr->value.end());
      result.tracking_target.insert(result.tracking_target.end(), tr->target.begin(), tr->target.end());
    }
  };
  record_state(state);

  while (true) {
    std::vector<double> action = act(state.s);
    for (auto& a : action) a = std::clamp(a, -limit, limit);
    StepResult sr;
    try {
      sr = env.step(state, action);
    } catch (const EnvDivergedError&) {
      result.diverged = true;
      break;
    }
    if (record_traces) {
      result.action_trace.insert(result.action_trace.end(), action.begin(), action.end());
    }
    result.total_reward += sr.reward;
    result.length += 1;
    state = std::move(sr.next);
    record_state(state);
    if (sr.terminated || sr.truncated) break;
  }
  return result;
}

}  // namespace robustrl::envs
