#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace robustrl::envs {

// Multiplicative deviations from an environment's nominal physical constants,
// plus the two absolute quantities every integrator needs. Scales of exactly
// 1.0 reproduce the nominal system bit for bit.
struct PhysicsParams {
  std::vector<double> mass_scales;     // one per body, env documents the order
  std::vector<double> damping_scales;  // one per joint or contact
  double gravity = 9.8;                // m/s^2
  double timestep = 0.02;              // s, must lie in (0, 0.05]
};

struct EnvState {
  std::vector<double> s;
  int steps = 0;
};

struct StepResult {
  EnvState next;
  double reward = 0.0;
  bool terminated = false;  // failure condition hit, no bootstrap
  bool truncated = false;   // horizon reached, value bootstrap applies
  bool done() const { return terminated || truncated; }
};

// Quantity being regulated and its commanded value, for tracking-error style
// metrics. Environments without a natural command signal return nothing.
struct TrackingSignal {
  std::vector<double> value;
  std::vector<double> target;
};

// Deterministic rigid-body toy tasks. Instances are immutable: reset and
// step are pure functions of (seed, state, action) given the construction
// parameters, so one instance can serve many threads, and a trajectory is
// fully pinned by (seed, action sequence, params).
class Env {
 public:
  virtual ~Env() = default;

  virtual std::string name() const = 0;
  virtual int state_dim() const = 0;
  virtual int action_dim() const = 0;
  virtual double action_limit() const = 0;  // actions clipped to +-limit
  virtual int horizon() const = 0;

  // Per-dimension denominators that map raw state into roughly [-1, 1] for
  // the networks. Fixed constants, not running statistics, so the map is
  // invertible and stable for the whole run.
  virtual std::span<const double> obs_scale() const = 0;

  virtual EnvState reset(std::uint64_t seed) const = 0;

  // Semi-implicit Euler step. Throws EnvDivergedError if the next state has
  // a non-finite component.
  virtual StepResult step(const EnvState& state, std::span<const double> action) const = 0;

  virtual PhysicsParams nominal_params() const = 0;

  // Same system under perturbed physics. Validates scales > 0 and
  // timestep in (0, 0.05].
  virtual std::unique_ptr<Env> with_params(const PhysicsParams& params) const = 0;

  virtual std::unique_ptr<Env> clone() const = 0;

  virtual std::optional<TrackingSignal> tracking(const EnvState& state) const { (void)state; return std::nullopt; }
};

void validate_params(const PhysicsParams& params, std::size_t bodies, std::size_t joints);

// State divided by obs_scale; what policies and critics consume.
std::vector<double> normalize_state(const Env& env, const EnvState& state);
void normalize_state_into(const Env& env, std::span<const double> raw, std::span<double> out);

struct EpisodeResult {
  double total_reward = 0.0;
  int length = 0;
  bool diverged = false;
  // length+1 states and length actions, flattened.
  std::vector<double> state_trace;
  std::vector<double> action_trace;
  // Present when the environment exposes a tracking signal.
  std::vector<double> tracking_value;
  std::vector<double> tracking_target;
  bool has_tracking = false;
};

// Rolls one episode with a deterministic state -> action map (actions are
// clipped to the environment limits before stepping and recorded as
// applied). Divergence ends the episode early and flags the result.
EpisodeResult run_episode(const Env& env, std::uint64_t seed,
                          const std::function<std::vector<double>(std::span<const double>)>& act,
                          bool record_traces = true);

}  // namespace robustrl::envs
