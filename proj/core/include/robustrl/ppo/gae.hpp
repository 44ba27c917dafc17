#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "robustrl/diffcore/mlp.hpp"
#include "robustrl/wcve/wcve.hpp"

namespace robustrl::ppo {

// Per-step inputs for one contiguous lane segment, aligned by index.
// next_values[t] is whatever value should be bootstrapped at step t: the
// critic's estimate for the standard recursion, the solver's worst-case
// value for the pessimistic one.
struct GaeInputs {
  std::span<const double> rewards;
  std::span<const double> values;
  std::span<const double> next_values;
  std::span<const std::uint8_t> terminated;  // 1 = failure, value target has no bootstrap
  std::span<const std::uint8_t> done;        // 1 = episode boundary, recursion resets
};

// Backward recursion over the segment:
//   delta_t = r_t + gamma * (terminated_t ? 0 : next_values[t]) - values[t]
//   A_t     = delta_t + gamma * xi * (done_t ? 0 : A_{t+1})
// which equals the exponentially weighted sum of TD errors truncated at
// episode boundaries. Steps cut off by the segment end bootstrap through
// their next_values entry, so no value signal is lost at the seam.
void compute_gae(const GaeInputs& in, double gamma, double xi,
                 std::span<double> advantages);

// Critic regression targets: advantages + values, element-wise.
void compute_rewards_to_go(std::span<const double> advantages,
                           std::span<const double> values, std::span<double> out);

// A scalar-output network as a solver target. Evaluation uses a thread-local
// workspace, so a single adapter may be shared by concurrent solver calls.
class NetworkValueFunction final : public wcve::ValueFunction {
 public:
  explicit NetworkValueFunction(const diffcore::MlpNetwork& net);

  int input_dim() const override { return net_->input_dim(); }
  double value(std::span<const double> state) const override;
  double value_and_gradient(std::span<const double> state,
                            std::span<double> grad) const override;

 private:
  const diffcore::MlpNetwork* net_;
};

struct WorstCaseBatch {
  std::vector<double> worst_values;  // one per row
  std::vector<double> worst_states;  // rows x dim
  long long fallbacks = 0;
};

// Runs the solver on every row of `states` (rows x dim, normalized units).
// kind = identity or epsilon = 0 short-circuits to the cached values and the
// unperturbed states without touching the solver, which keeps the reduction
// to the plain algorithm exact to the bit. Rows are independent; the result
// does not depend on the worker count.
WorstCaseBatch worst_case_batch(const wcve::ValueFunction& fn, wcve::SolverKind kind,
                                const wcve::UncertaintySet& set,
                                std::span<const double> states, int dim,
                                std::span<const double> cached_values, int workers);

}  // namespace robustrl::ppo
