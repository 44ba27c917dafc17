#include "robustrl/envs/pendulum.hpp"

#include <algorithm>
#include <cmath>

#include "robustrl/common/errors.hpp"
#include "robustrl/common/rng.hpp"

namespace robustrl::envs {

namespace {
constexpr double kPi = 3.14159265358979323846;
}

double PendulumEnv::wrap_angle(double theta) {
  // Maps to (-pi, pi]; both pi and -pi land on pi.
  double w = std::fmod(theta + kPi, 2.0 * kPi);
  if (w <= 0.0) w += 2.0 * kPi;
  return w - kPi;
}

PendulumEnv::PendulumEnv(PendulumConfig config) : config_(config) {
  params_.mass_scales = {1.0};
  params_.damping_scales = {1.0};
  params_.gravity = config_.gravity;
  params_.timestep = config_.timestep;
  validate_params(params_, 1, 1);
  obs_scale_ = {kPi, config_.speed_limit};
}

PendulumEnv::PendulumEnv(PendulumConfig config, PhysicsParams params)
    : config_(config), params_(std::move(params)) {
  validate_params(params_, 1, 1);
  obs_scale_ = {kPi, config_.speed_limit};
}

EnvState PendulumEnv::reset(std::uint64_t seed) const {
  Rng rng(seed);
  EnvState st;
  st.s.resize(2);
  // uniform over (-pi, pi]; u = 0 maps to pi so the closed end is reachable
  st.s[0] = kPi - 2.0 * kPi * rng.uniform();
  st.s[1] = rng.uniform(-config_.init_speed_range, config_.init_speed_range);
  st.steps = 0;
  return st;
}

StepResult PendulumEnv::step(const EnvState& state, std::span<const double> action) const {
  if (state.s.size() != 2) throw InvalidInputError("pendulum state must have 2 components");
  if (action.size() != 1) throw InvalidInputError("pendulum action must have 1 component");

  const double torque = std::clamp(action[0], -config_.torque_limit, config_.torque_limit);

  const double m = config_.mass * params_.mass_scales[0];
  const double c = config_.pivot_damping * params_.damping_scales[0];
  const double g = params_.gravity;
  const double l = config_.length;
  const double dt = params_.timestep;

  const double theta = state.s[0];
  const double theta_dot = state.s[1];

  // Cost on the state the torque is applied in.
  const double a = wrap_angle(theta);
  const double cost = a * a + 0.1 * theta_dot * theta_dot + 0.001 * torque * torque;

  // Point mass on a massless rod, angle from upright: gravity tips away from
  // the top, torque and damping act at the pivot.
  const double theta_acc = (g / l) * std::sin(theta) + (torque - c * theta_dot) / (m * l * l);

  StepResult out;
  out.next.s.resize(2);
  double new_speed = theta_dot + dt * theta_acc;
  new_speed = std::clamp(new_speed, -config_.speed_limit, config_.speed_limit);
  out.next.s[1] = new_speed;
  out.next.s[0] = wrap_angle(theta + dt * new_speed);
  out.next.steps = state.steps + 1;

  for (double v : out.next.s) {
    if (!std::isfinite(v)) throw EnvDivergedError("pendulum state became non-finite");
  }

  out.reward = -cost;
  out.terminated = false;
  out.truncated = out.next.steps >= config_.horizon;
  return out;
}

PhysicsParams PendulumEnv::nominal_params() const {
  PhysicsParams p;
  p.mass_scales = {1.0};
  p.damping_scales = {1.0};
  p.gravity = config_.gravity;
  p.timestep = config_.timestep;
  return p;
}

std::unique_ptr<Env> PendulumEnv::with_params(const PhysicsParams& params) const {
  validate_params(params, 1, 1);
  return std::make_unique<PendulumEnv>(config_, params);
}

std::unique_ptr<Env> PendulumEnv::clone() const {
  return std::make_unique<PendulumEnv>(config_, params_);
}

std::optional<TrackingSignal> PendulumEnv::tracking(const EnvState& state) const {
  TrackingSignal t;
  t.value = {wrap_angle(state.s[0])};
  t.target = {0.0};
  return t;
}

}  // namespace robustrl::envs
