#pragma once

#include <stdexcept>
#include <string>

namespace robustrl {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Caller passed something that violates an interface contract
// (bad dimension, empty trace, out-of-range hyperparameter, ...).
struct InvalidInputError : Error {
  using Error::Error;
};

// A simulated state stopped being finite. The episode that produced it is
// over; callers decide whether the whole run dies with it.
struct EnvDivergedError : Error {
  using Error::Error;
};

// Non-finite loss or gradient during optimization.
struct TrainingDivergedError : Error {
  using Error::Error;
};

struct CheckpointError : Error {
  using Error::Error;
};

struct ConfigError : Error {
  using Error::Error;
};

}  // namespace robustrl
