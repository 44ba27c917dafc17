#pragma once

#include <span>
#include <string_view>
#include <vector>

namespace robustrl::wcve {

// Scalar function of a state vector, differentiable with respect to its
// input. Implementations must be deterministic: equal inputs give
// bit-equal outputs.
class ValueFunction {
 public:
  virtual ~ValueFunction() = default;
  virtual int input_dim() const = 0;
  virtual double value(std::span<const double> state) const = 0;
  // Writes d value / d state into grad (size input_dim()) and returns the value.
  virtual double value_and_gradient(std::span<const double> state,
                                    std::span<double> grad) const = 0;
};

// Axis-aligned box around a center state: [s - epsilon * mask, s + epsilon *
// mask], with an empty mask meaning all dimensions are perturbable. Radii are
// in the same units as the state passed to the solver, which is normalized
// observation space during training.
struct UncertaintySet {
  double epsilon = 0.0;
  std::vector<double> mask;  // 1 = perturbable, 0 = held fixed
  int pgd_steps = 10;
  double pgd_step_size = 0.0;  // 0 = epsilon / pgd_steps
  // Keep the final iterate instead of the lowest-value iterate seen.
  bool strict_last_iterate = false;

  double radius(int dim) const {
    return mask.empty() ? epsilon : epsilon * mask[static_cast<size_t>(dim)];
  }
};

enum class SolverKind { kIdentity, kGbr, kPgd, kBrute };

SolverKind solver_kind_from_name(std::string_view name);
std::string_view solver_kind_name(SolverKind kind);

struct WcveSolution {
  std::vector<double> worst_state;
  double worst_value = 0.0;
  SolverKind solver = SolverKind::kIdentity;
  // Set when the solver hit a non-finite value or gradient and fell back
  // to the center state.
  bool fell_back = false;
};

// Returns {center, value(center)}; the epsilon = 0 case.
WcveSolution identity_solve(std::span<const double> center, const ValueFunction& fn);

// First-order estimate: value(center) - sum_i radius_i * |grad_i|, with the
// matching corner of the box as the worst state. Exact for linear functions,
// unreliable when curvature matters; kept as the fast baseline.
WcveSolution gbr_estimate(std::span<const double> center, const UncertaintySet& set,
                          const ValueFunction& fn);

// Projected signed-gradient descent from the center: each step moves every
// coordinate by the step size against the gradient sign, then clamps back
// into the box. sign(0) = 0, so flat coordinates stay put. Signed steps can
// overshoot a minimum, so by default the lowest-value iterate seen
// (including the center) is returned; strict_last_iterate returns the final
// iterate unconditionally.
WcveSolution pgd_solve(std::span<const double> center, const UncertaintySet& set,
                       const ValueFunction& fn);

// Exhaustive grid scan with points_per_dim samples per coordinate, endpoints
// included. Ties keep the first state in row-major order (last coordinate
// fastest). Refuses grids above 1e7 evaluations; intended as a test oracle.
WcveSolution brute_solve(std::span<const double> center, const UncertaintySet& set,
                         const ValueFunction& fn, int points_per_dim);

WcveSolution solve(SolverKind kind, std::span<const double> center,
                   const UncertaintySet& set, const ValueFunction& fn);

}  // namespace robustrl::wcve
