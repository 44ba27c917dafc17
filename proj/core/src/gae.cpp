#include "robustrl/ppo/gae.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "robustrl/common/errors.hpp"
#include "robustrl/common/parallel.hpp"

namespace robustrl::ppo {

void compute_gae(const GaeInputs& in, double gamma, double xi,
                 std::span<double> advantages) {
  const std::size_t n = in.rewards.size();
  if (n == 0) {
    throw InvalidInputError("gae: empty segment");
  }
  if (in.values.size() != n || in.next_values.size() != n ||
      in.terminated.size() != n || in.done.size() != n || advantages.size() != n) {
    throw InvalidInputError("gae: input spans disagree in length");
  }
  if (!(gamma > 0.0 && gamma <= 1.0) || !(xi >= 0.0 && xi <= 1.0)) {
    throw InvalidInputError("gae: gamma must be in (0,1], xi in [0,1]");
  }
  double running = 0.0;
  for (std::size_t k = n; k-- > 0;) {
    const double bootstrap = in.terminated[k] ? 0.0 : in.next_values[k];
    const double delta = in.rewards[k] + gamma * bootstrap - in.values[k];
    running = delta + gamma * xi * (in.done[k] ? 0.0 : running);
    advantages[k] = running;
  }
}

void compute_rewards_to_go(std::span<const double> advantages,
                           std::span<const double> values, std::span<double> out) {
  if (advantages.size() != values.size() || out.size() != values.size()) {
    throw InvalidInputError("rewards_to_go: span lengths disagree");
  }
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = advantages[i] + values[i];
  }
}

NetworkValueFunction::NetworkValueFunction(const diffcore::MlpNetwork& net)
    : net_(&net) {
  if (net.output_dim() != 1) {
    throw InvalidInputError("value function adapter needs a scalar-output network");
  }
}

double NetworkValueFunction::value(std::span<const double> state) const {
  static thread_local diffcore::MlpScratch scratch;
  return diffcore::mlp_forward(*net_, state, scratch)[0];
}

double NetworkValueFunction::value_and_gradient(std::span<const double> state,
                                                std::span<double> grad) const {
  static thread_local diffcore::MlpScratch scratch;
  return diffcore::mlp_value_and_input_gradient(*net_, state, scratch, grad);
}

WorstCaseBatch worst_case_batch(const wcve::ValueFunction& fn, wcve::SolverKind kind,
                                const wcve::UncertaintySet& set,
                                std::span<const double> states, int dim,
                                std::span<const double> cached_values, int workers) {
  if (dim < 1 || states.size() % static_cast<std::size_t>(dim) != 0) {
    throw InvalidInputError("worst_case_batch: states not a whole number of rows");
  }
  const std::size_t rows = states.size() / static_cast<std::size_t>(dim);
  if (cached_values.size() != rows) {
    throw InvalidInputError("worst_case_batch: cached_values length mismatch");
  }

  WorstCaseBatch out;
  out.worst_states.assign(states.begin(), states.end());
  if (kind == wcve::SolverKind::kIdentity || set.epsilon == 0.0) {
    out.worst_values.assign(cached_values.begin(), cached_values.end());
    return out;
  }

  out.worst_values.assign(rows, 0.0);
  std::vector<std::uint8_t> fell_back(rows, 0);
  parallel_for(rows, workers, [&](std::size_t r) {
    const auto row = states.subspan(r * static_cast<std::size_t>(dim),
                                    static_cast<std::size_t>(dim));
    const wcve::WcveSolution sol = wcve::solve(kind, row, set, fn);
    out.worst_values[r] = sol.worst_value;
    std::copy(sol.worst_state.begin(), sol.worst_state.end(),
              out.worst_states.begin() + static_cast<std::ptrdiff_t>(
                                             r * static_cast<std::size_t>(dim)));
    fell_back[r] = sol.fell_back ? 1 : 0;
  });
  for (std::uint8_t f : fell_back) {
    out.fallbacks += f;
  }
  return out;
}

}  // namespace robustrl::ppo
