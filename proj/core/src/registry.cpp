#include "robustrl/envs/registry.hpp"

#include <cmath>
#include <string>

#include "robustrl/common/errors.hpp"
#include "robustrl/envs/cartpole.hpp"
#include "robustrl/envs/pendulum.hpp"

namespace robustrl::envs {

namespace {

double positive_number(const nlohmann::json& j, const std::string& key) {
  if (!j.is_number()) {
    throw ConfigError("env override '" + key + "' must be a number");
  }
  const double v = j.get<double>();
  if (!(v > 0.0) || !std::isfinite(v)) {
    throw ConfigError("env override '" + key + "' must be a positive finite number");
  }
  return v;
}

double nonnegative_number(const nlohmann::json& j, const std::string& key) {
  if (!j.is_number()) {
    throw ConfigError("env override '" + key + "' must be a number");
  }
  const double v = j.get<double>();
  if (!(v >= 0.0) || !std::isfinite(v)) {
    throw ConfigError("env override '" + key + "' must be a non-negative finite number");
  }
  return v;
}

int positive_int(const nlohmann::json& j, const std::string& key) {
  if (!j.is_number_integer()) {
    throw ConfigError("env override '" + key + "' must be an integer");
  }
  const auto v = j.get<int64_t>();
  if (v <= 0 || v > (1 << 20)) {
    throw ConfigError("env override '" + key + "' out of range");
  }
  return static_cast<int>(v);
}

std::unique_ptr<Env> make_cartpole(const nlohmann::json& overrides) {
  CartPoleConfig cfg;
  for (const auto& [key, value] : overrides.items()) {
    if (key == "gravity") {
      cfg.gravity = positive_number(value, key);
    } else if (key == "cart_mass") {
      cfg.cart_mass = positive_number(value, key);
    } else if (key == "pole_mass") {
      cfg.pole_mass = positive_number(value, key);
    } else if (key == "half_length") {
      cfg.half_length = positive_number(value, key);
    } else if (key == "rail_damping") {
      cfg.rail_damping = nonnegative_number(value, key);
    } else if (key == "pivot_damping") {
      cfg.pivot_damping = nonnegative_number(value, key);
    } else if (key == "timestep") {
      cfg.timestep = positive_number(value, key);
      if (cfg.timestep > 0.05) {
        throw ConfigError("env override 'timestep' must be at most 0.05");
      }
    } else if (key == "horizon") {
      cfg.horizon = positive_int(value, key);
    } else {
      throw ConfigError("unknown cartpole override '" + key + "'");
    }
  }
  return std::make_unique<CartPoleEnv>(cfg);
}

std::unique_ptr<Env> make_pendulum(const nlohmann::json& overrides) {
  PendulumConfig cfg;
  for (const auto& [key, value] : overrides.items()) {
    if (key == "gravity") {
      cfg.gravity = positive_number(value, key);
    } else if (key == "mass") {
      cfg.mass = positive_number(value, key);
    } else if (key == "length") {
      cfg.length = positive_number(value, key);
    } else if (key == "pivot_damping") {
      cfg.pivot_damping = nonnegative_number(value, key);
    } else if (key == "timestep") {
      cfg.timestep = positive_number(value, key);
      if (cfg.timestep > 0.05) {
        throw ConfigError("env override 'timestep' must be at most 0.05");
      }
    } else if (key == "horizon") {
      cfg.horizon = positive_int(value, key);
    } else {
      throw ConfigError("unknown pendulum override '" + key + "'");
    }
  }
  return std::make_unique<PendulumEnv>(cfg);
}

}  // namespace

std::unique_ptr<Env> make_env(std::string_view name, const nlohmann::json& overrides) {
  if (!overrides.is_object() && !overrides.is_null()) {
    throw ConfigError("env overrides must be a JSON object");
  }
  const nlohmann::json empty = nlohmann::json::object();
  const nlohmann::json& ov = overrides.is_null() ? empty : overrides;
  if (name == "cartpole") {
    return make_cartpole(ov);
  }
  if (name == "pendulum") {
    return make_pendulum(ov);
  }
  throw ConfigError("unknown environment '" + std::string(name) +
                    "' (expected 'cartpole' or 'pendulum')");
}

std::unique_ptr<Env> make_env(std::string_view name) {
  return make_env(name, nlohmann::json::object());
}

}  // namespace robustrl::envs
