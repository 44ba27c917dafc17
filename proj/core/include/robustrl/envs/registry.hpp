#pragma once

#include <memory>
#include <string_view>

#include <json.hpp>

#include "robustrl/envs/env.hpp"

namespace robustrl::envs {

// Builds an environment by name with optional overrides of its base
// constants. Unknown names and unknown override keys are rejected.
//
// cartpole: gravity, cart_mass, pole_mass, half_length, rail_damping,
//           pivot_damping, timestep, horizon
// pendulum: gravity, mass, length, pivot_damping, timestep, horizon
std::unique_ptr<Env> make_env(std::string_view name, const nlohmann::json& overrides);

std::unique_ptr<Env> make_env(std::string_view name);

}  // namespace robustrl::envs
