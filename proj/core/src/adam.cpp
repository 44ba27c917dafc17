#include "robustrl/diffcore/adam.hpp"

#include <cmath>
#include <string>

#include "robustrl/common/errors.hpp"

namespace robustrl::diffcore {

AdamState AdamState::create(std::size_t n, const AdamConfig& cfg) {
  AdamState s;
  s.config = cfg;
  s.m.assign(n, 0.0);
  s.v.assign(n, 0.0);
  return s;
}

void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state) {
  const std::size_t n = params.size();
  if (grads.size() != n || state.m.size() != n || state.v.size() != n) {
    throw InvalidInputError("adam_step: size mismatch between params, grads and moments");
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (!std::isfinite(grads[i])) {
      throw TrainingDivergedError("non-finite gradient at parameter " + std::to_string(i));
    }
  }

  state.step_count += 1;
  const double b1 = state.config.beta1;
  const double b2 = state.config.beta2;
  const double corr1 = 1.0 - std::pow(b1, static_cast<double>(state.step_count));
  const double corr2 = 1.0 - std::pow(b2, static_cast<double>(state.step_count));
  const double lr = state.config.learning_rate;
  const double eps = state.config.eps;

  for (std::size_t i = 0; i < n; ++i) {
    const double g = grads[i];
    state.m[i] = b1 * state.m[i] + (1.0 - b1) * g;
    state.v[i] = b2 * state.v[i] + (1.0 - b2) * g * g;
    const double mhat = state.m[i] / corr1;
    const double vhat = state.v[i] / corr2;
    params[i] -= lr * mhat / (std::sqrt(vhat) + eps);
  }
}

}  // namespace robustrl::diffcore
