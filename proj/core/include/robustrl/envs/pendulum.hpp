#pragma once

#include <array>

#include "robustrl/envs/env.hpp"

namespace robustrl::envs {

// Torque-limited pendulum swing-up and stabilization. Quadratic cost on
// angle from upright, angular velocity and applied torque, so all rewards
// are non-positive and the optimum is holding the top. No failure states;
// episodes always run to the horizon.
//
// State layout: [angle from upright wrapped to (-pi, pi] (rad),
//               angular velocity (rad/s)]
// Bodies: {bob}. Joints: {pivot}.
struct PendulumConfig {
  double gravity = 9.8;        // m/s^2
  double mass = 1.0;           // kg
  double length = 1.0;         // m
  double pivot_damping = 0.1;  // N m s/rad
  double timestep = 0.02;      // s
  double torque_limit = 2.0;   // N m
  double speed_limit = 8.0;    // rad/s, angular velocity clamp
  double init_speed_range = 1.0;
  int horizon = 200;
};

class PendulumEnv final : public Env {
 public:
  explicit PendulumEnv(PendulumConfig config = {});
  PendulumEnv(PendulumConfig config, PhysicsParams params);

  std::string name() const override { return "pendulum"; }
  int state_dim() const override { return 2; }
  int action_dim() const override { return 1; }
  double action_limit() const override { return config_.torque_limit; }
  int horizon() const override { return config_.horizon; }
  std::span<const double> obs_scale() const override { return obs_scale_; }

  EnvState reset(std::uint64_t seed) const override;
  StepResult step(const EnvState& state, std::span<const double> action) const override;

  PhysicsParams nominal_params() const override;
  std::unique_ptr<Env> with_params(const PhysicsParams& params) const override;
  std::unique_ptr<Env> clone() const override;

  // The commanded signal is the upright angle, zero.
  std::optional<TrackingSignal> tracking(const EnvState& state) const override;

  const PendulumConfig& config() const { return config_; }

  static double wrap_angle(double theta);

 private:
  PendulumConfig config_;
  PhysicsParams params_;
  std::array<double, 2> obs_scale_;
};

}  // namespace robustrl::envs
