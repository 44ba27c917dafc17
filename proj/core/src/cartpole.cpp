#include "robustrl/envs/cartpole.hpp"

#include <algorithm>
#include <cmath>

#include "robustrl/common/errors.hpp"
#include "robustrl/common/rng.hpp"

namespace robustrl::envs {

CartPoleEnv::CartPoleEnv(CartPoleConfig config) : config_(config) {
  params_.mass_scales = {1.0, 1.0};
  params_.damping_scales = {1.0, 1.0};
  params_.gravity = config_.gravity;
  params_.timestep = config_.timestep;
  validate_params(params_, 2, 2);
  obs_scale_ = {config_.position_limit, 3.0, config_.angle_limit, 3.0};
}

CartPoleEnv::CartPoleEnv(CartPoleConfig config, PhysicsParams params)
    : config_(config), params_(std::move(params)) {
  validate_params(params_, 2, 2);
  obs_scale_ = {config_.position_limit, 3.0, config_.angle_limit, 3.0};
}

EnvState CartPoleEnv::reset(std::uint64_t seed) const {
  Rng rng(seed);
  EnvState st;
  st.s.resize(4);
  for (auto& v : st.s) v = rng.uniform(-config_.init_range, config_.init_range);
  st.steps = 0;
  return st;
}

StepResult CartPoleEnv::step(const EnvState& state, std::span<const double> action) const {
  if (state.s.size() != 4) throw InvalidInputError("cartpole state must have 4 components");
  if (action.size() != 1) throw InvalidInputError("cartpole action must have 1 component");

  const double force = std::clamp(action[0], -config_.force_limit, config_.force_limit);

  const double m_cart = config_.cart_mass * params_.mass_scales[0];
  const double m_pole = config_.pole_mass * params_.mass_scales[1];
  const double c_rail = config_.rail_damping * params_.damping_scales[0];
  const double c_pivot = config_.pivot_damping * params_.damping_scales[1];
  const double g = params_.gravity;
  const double l = config_.half_length;
  const double total_mass = m_cart + m_pole;
  const double dt = params_.timestep;

  const double x = state.s[0];
  const double x_dot = state.s[1];
  const double theta = state.s[2];
  const double theta_dot = state.s[3];

  const double sin_t = std::sin(theta);
  const double cos_t = std::cos(theta);

  // Pole-on-cart equations with viscous damping at both joints; theta is
  // measured from upright, so gravity enters destabilizing.
  const double temp =
      (force + m_pole * l * theta_dot * theta_dot * sin_t - c_rail * x_dot) / total_mass;
  const double theta_acc =
      (g * sin_t - cos_t * temp - c_pivot * theta_dot / (m_pole * l)) /
      (l * (4.0 / 3.0 - m_pole * cos_t * cos_t / total_mass));
  const double x_acc = temp - m_pole * l * theta_acc * cos_t / total_mass;

  StepResult out;
  out.next.s.resize(4);
  // Semi-implicit Euler: velocities first, then positions with the new
  // velocities.
  out.next.s[1] = x_dot + dt * x_acc;
  out.next.s[0] = x + dt * out.next.s[1];
  out.next.s[3] = theta_dot + dt * theta_acc;
  out.next.s[2] = theta + dt * out.next.s[3];
  out.next.steps = state.steps + 1;

  for (double v : out.next.s) {
    if (!std::isfinite(v)) throw EnvDivergedError("cartpole state became non-finite");
  }

  out.reward = 1.0;
  out.terminated = std::fabs(out.next.s[0]) > config_.position_limit ||
                   std::fabs(out.next.s[2]) > config_.angle_limit;
  out.truncated = !out.terminated && out.next.steps >= config_.horizon;
  return out;
}

PhysicsParams CartPoleEnv::nominal_params() const {
  PhysicsParams p;
  p.mass_scales = {1.0, 1.0};
  p.damping_scales = {1.0, 1.0};
  p.gravity = config_.gravity;
  p.timestep = config_.timestep;
  return p;
}

std::unique_ptr<Env> CartPoleEnv::with_params(const PhysicsParams& params) const {
  validate_params(params, 2, 2);
  return std::make_unique<CartPoleEnv>(config_, params);
}

std::unique_ptr<Env> CartPoleEnv::clone() const {
  return std::make_unique<CartPoleEnv>(config_, params_);
}

}  // namespace robustrl::envs
