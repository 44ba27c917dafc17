#include "robustrl/wcve/wcve.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <string>

#include "robustrl/common/errors.hpp"

namespace robustrl::wcve {

namespace {

double sign_of(double x) {
  if (x > 0.0) return 1.0;
  if (x < 0.0) return -1.0;
  return 0.0;
}

bool all_finite(std::span<const double> xs) {
  for (double x : xs) {
    if (!std::isfinite(x)) return false;
  }
  return true;
}

void validate(std::span<const double> center, const UncertaintySet& set,
              const ValueFunction& fn) {
  const auto dim = static_cast<size_t>(fn.input_dim());
  if (center.size() != dim) {
    throw InvalidInputError("uncertainty solver: center has size " +
                            std::to_string(center.size()) + ", expected " +
                            std::to_string(dim));
  }
  if (!(set.epsilon >= 0.0) || !std::isfinite(set.epsilon)) {
    throw InvalidInputError("uncertainty set: epsilon must be finite and >= 0");
  }
  if (!set.mask.empty() && set.mask.size() != dim) {
    throw InvalidInputError("uncertainty set: mask size does not match state dim");
  }
  for (double m : set.mask) {
    if (!(m >= 0.0) || !std::isfinite(m)) {
      throw InvalidInputError("uncertainty set: mask entries must be finite and >= 0");
    }
  }
  if (set.pgd_steps < 1) {
    throw InvalidInputError("uncertainty set: pgd_steps must be >= 1");
  }
  if (!(set.pgd_step_size >= 0.0) || !std::isfinite(set.pgd_step_size)) {
    throw InvalidInputError("uncertainty set: pgd_step_size must be finite and >= 0");
  }
}

WcveSolution fallback_to_center(std::span<const double> center, const ValueFunction& fn,
                                SolverKind solver) {
  WcveSolution out = identity_solve(center, fn);
  out.solver = solver;
  out.fell_back = true;
  return out;
}

}  // namespace

SolverKind solver_kind_from_name(std::string_view name) {
  if (name == "identity") return SolverKind::kIdentity;
  if (name == "gbr") return SolverKind::kGbr;
  if (name == "pgd") return SolverKind::kPgd;
  if (name == "brute") return SolverKind::kBrute;
  throw InvalidInputError("unknown uncertainty solver '" + std::string(name) + "'");
}

std::string_view solver_kind_name(SolverKind kind) {
  switch (kind) {
    case SolverKind::kIdentity: return "identity";
    case SolverKind::kGbr: return "gbr";
    case SolverKind::kPgd: return "pgd";
    case SolverKind::kBrute: return "brute";
  }
  return "unknown";
}

WcveSolution identity_solve(std::span<const double> center, const ValueFunction& fn) {
  WcveSolution out;
  out.worst_state.assign(center.begin(), center.end());
  out.worst_value = fn.value(center);
  out.solver = SolverKind::kIdentity;
  return out;
}

WcveSolution gbr_estimate(std::span<const double> center, const UncertaintySet& set,
                          const ValueFunction& fn) {
  validate(center, set, fn);
  if (set.epsilon == 0.0) {
    return identity_solve(center, fn);
  }
  const int dim = fn.input_dim();
  std::vector<double> grad(static_cast<size_t>(dim));
  const double v = fn.value_and_gradient(center, grad);
  if (!std::isfinite(v) || !all_finite(grad)) {
    return fallback_to_center(center, fn, SolverKind::kGbr);
  }
  WcveSolution out;
  out.solver = SolverKind::kGbr;
  out.worst_state.assign(center.begin(), center.end());
  double estimate = v;
  for (int i = 0; i < dim; ++i) {
    const double r = set.radius(i);
    const auto u = static_cast<size_t>(i);
    estimate -= r * std::abs(grad[u]);
    out.worst_state[u] -= r * sign_of(grad[u]);
  }
  out.worst_value = estimate;
  return out;
}

WcveSolution pgd_solve(std::span<const double> center, const UncertaintySet& set,
                       const ValueFunction& fn) {
  validate(center, set, fn);
  if (set.epsilon == 0.0) {
    return identity_solve(center, fn);
  }
  const int dim = fn.input_dim();
  const auto udim = static_cast<size_t>(dim);
  const double alpha =
      set.pgd_step_size > 0.0 ? set.pgd_step_size : set.epsilon / set.pgd_steps;

  std::vector<double> lo(udim);
  std::vector<double> hi(udim);
  for (int i = 0; i < dim; ++i) {
    const double r = set.radius(i);
    lo[static_cast<size_t>(i)] = center[static_cast<size_t>(i)] - r;
    hi[static_cast<size_t>(i)] = center[static_cast<size_t>(i)] + r;
  }

  std::vector<double> cur(center.begin(), center.end());
  std::vector<double> grad(udim);
  std::vector<double> best_state;
  double best_value = 0.0;
  bool have_best = false;

  for (int step = 0; step < set.pgd_steps; ++step) {
    const double v = fn.value_and_gradient(cur, grad);
    if (!std::isfinite(v) || !all_finite(grad)) {
      return fallback_to_center(center, fn, SolverKind::kPgd);
    }
    if (!set.strict_last_iterate && (!have_best || v < best_value)) {
      best_state = cur;
      best_value = v;
      have_best = true;
    }
    for (size_t i = 0; i < udim; ++i) {
      // Step against the gradient, then exact per-dimension projection.
      cur[i] = std::clamp(cur[i] - alpha * sign_of(grad[i]), lo[i], hi[i]);
    }
  }
  const double v_final = fn.value(cur);
  if (!std::isfinite(v_final)) {
    return fallback_to_center(center, fn, SolverKind::kPgd);
  }
  WcveSolution out;
  out.solver = SolverKind::kPgd;
  if (set.strict_last_iterate || !have_best || v_final < best_value) {
    out.worst_state = std::move(cur);
    out.worst_value = v_final;
  } else {
    out.worst_state = std::move(best_state);
    out.worst_value = best_value;
  }
  for (size_t i = 0; i < udim; ++i) {
    assert(out.worst_state[i] >= lo[i] && out.worst_state[i] <= hi[i]);
  }
  return out;
}

WcveSolution brute_solve(std::span<const double> center, const UncertaintySet& set,
                         const ValueFunction& fn, int points_per_dim) {
  validate(center, set, fn);
  if (points_per_dim < 2) {
    throw InvalidInputError("brute solver: points_per_dim must be >= 2");
  }
  if (set.epsilon == 0.0) {
    return identity_solve(center, fn);
  }
  const int dim = fn.input_dim();
  const auto udim = static_cast<size_t>(dim);

  double total = 1.0;
  for (int i = 0; i < dim; ++i) {
    total *= points_per_dim;
  }
  if (total > 1e7) {
    throw InvalidInputError("brute solver: grid would need " +
                            std::to_string(static_cast<long long>(total)) +
                            " evaluations (limit 1e7)");
  }
  const auto count = static_cast<long long>(total);

  std::vector<double> point(udim);
  WcveSolution out;
  out.solver = SolverKind::kBrute;
  bool have = false;
  for (long long n = 0; n < count; ++n) {
    long long rem = n;
    for (int i = dim - 1; i >= 0; --i) {
      const int k = static_cast<int>(rem % points_per_dim);
      rem /= points_per_dim;
      const auto u = static_cast<size_t>(i);
      const double r = set.radius(i);
      point[u] = (center[u] - r) +
                 (2.0 * r) * static_cast<double>(k) / (points_per_dim - 1);
    }
    const double v = fn.value(point);
    if (!have || v < out.worst_value) {
      out.worst_state = point;
      out.worst_value = v;
      have = true;
    }
  }
  return out;
}

WcveSolution solve(SolverKind kind, std::span<const double> center,
                   const UncertaintySet& set, const ValueFunction& fn) {
  switch (kind) {
    case SolverKind::kIdentity: return identity_solve(center, fn);
    case SolverKind::kGbr: return gbr_estimate(center, set, fn);
    case SolverKind::kPgd: return pgd_solve(center, set, fn);
    case SolverKind::kBrute: return brute_solve(center, set, fn, 11);
  }
  throw InvalidInputError("unknown uncertainty solver kind");
}

}  // namespace robustrl::wcve
