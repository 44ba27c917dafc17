#pragma once

#include <array>

#include "robustrl/envs/env.hpp"

namespace robustrl::envs {

// Cart with an unactuated pole, continuous horizontal force. Reward is 1 per
// step survived; an episode fails when the cart leaves the track section or
// the pole tips past the angle bound. Dynamics and bounds follow the classic
// benchmark, with viscous damping added on the cart rail and the pole pivot
// so that friction is a meaningful perturbation axis.
//
// State layout: [cart position (m), cart velocity (m/s),
//               pole angle from upright (rad), pole angular velocity (rad/s)]
// Bodies for mass scaling: {cart, pole}. Joints for damping scaling:
// {rail, pivot}.
struct CartPoleConfig {
  double gravity = 9.8;          // m/s^2
  double cart_mass = 1.0;        // kg
  double pole_mass = 0.1;        // kg
  double half_length = 0.5;      // m, pivot to pole center of mass
  double rail_damping = 0.5;     // N s/m
  double pivot_damping = 0.02;   // N m s/rad
  double timestep = 0.02;        // s
  double force_limit = 10.0;     // N
  double position_limit = 2.4;   // m
  double angle_limit = 0.2094395102393195;  // rad, twelve degrees
  double init_range = 0.05;      // all state components uniform in +-this
  int horizon = 500;
};

class CartPoleEnv final : public Env {
 public:
  explicit CartPoleEnv(CartPoleConfig config = {});
  CartPoleEnv(CartPoleConfig config, PhysicsParams params);

  std::string name() const override { return "cartpole"; }
  int state_dim() const override { return 4; }
  int action_dim() const override { return 1; }
  double action_limit() const override { return config_.force_limit; }
  int horizon() const override { return config_.horizon; }
  std::span<const double> obs_scale() const override { return obs_scale_; }

  EnvState reset(std::uint64_t seed) const override;
  StepResult step(const EnvState& state, std::span<const double> action) const override;

  PhysicsParams nominal_params() const override;
  std::unique_ptr<Env> with_params(const PhysicsParams& params) const override;
  std::unique_ptr<Env> clone() const override;

  const CartPoleConfig& config() const { return config_; }

 private:
  CartPoleConfig config_;
  PhysicsParams params_;
  std::array<double, 4> obs_scale_;
};

}  // namespace robustrl::envs
