#include "robustrl/eval/llc.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "robustrl/common/errors.hpp"
#include "robustrl/common/parallel.hpp"
#include "robustrl/common/rng.hpp"

namespace robustrl::eval {

LlcEstimate estimate_llc(const diffcore::MlpNetwork& net,
                         std::span<const double> states, int state_dim,
                         double epsilon_probe, long long n_probes,
                         std::uint64_t seed, int workers) {
  if (state_dim != net.input_dim()) {
    throw InvalidInputError("estimate_llc: state_dim must match the network input");
  }
  const auto d = static_cast<std::size_t>(state_dim);
  if (states.empty() || states.size() % d != 0) {
    throw InvalidInputError("estimate_llc: states must be nonempty rows of state_dim");
  }
  if (!(epsilon_probe > 0.0) || !std::isfinite(epsilon_probe)) {
    throw InvalidInputError("estimate_llc: epsilon_probe must be positive");
  }
  if (n_probes < 1) throw InvalidInputError("estimate_llc: n_probes must be >= 1");

  const std::size_t n_states = states.size() / d;
  const auto out_dim = static_cast<std::size_t>(net.output_dim());
  std::vector<double> probe_max(n_states, 0.0);
  std::vector<double> grad_max(n_states, 0.0);

  parallel_for(n_states, resolve_workers(workers), [&](std::size_t i) {
    const std::span<const double> s = states.subspan(i * d, d);
    diffcore::MlpScratch scratch;

    const std::vector<double> jac = diffcore::mlp_jacobian(net, s, scratch);
    double g = 0.0;
    for (std::size_t r = 0; r < out_dim; ++r) {
      double row = 0.0;
      for (std::size_t c = 0; c < d; ++c) row += std::abs(jac[r * d + c]);
      g = std::max(g, row);
    }
    grad_max[i] = g;

    const std::vector<double> base = diffcore::mlp_forward(net, s, scratch);
    std::vector<double> perturbed(d);
    Rng rng(derive_seed(seed, "probe", i));
    double p = 0.0;
    for (long long k = 0; k < n_probes; ++k) {
      double delta_inf = 0.0;
      for (std::size_t c = 0; c < d; ++c) {
        const double delta = rng.uniform(-epsilon_probe, epsilon_probe);
        perturbed[c] = s[c] + delta;
        delta_inf = std::max(delta_inf, std::abs(delta));
      }
      if (delta_inf == 0.0) continue;
      const std::vector<double>& out = diffcore::mlp_forward(net, perturbed, scratch);
      double diff_inf = 0.0;
      for (std::size_t r = 0; r < out_dim; ++r) {
        diff_inf = std::max(diff_inf, std::abs(out[r] - base[r]));
      }
      p = std::max(p, diff_inf / delta_inf);
    }
    probe_max[i] = p;
  });

  LlcEstimate est;
  est.epsilon_probe = epsilon_probe;
  est.n_states = static_cast<int>(n_states);
  est.n_probes = n_probes;
  for (std::size_t i = 0; i < n_states; ++i) {
    est.probe_estimate = std::max(est.probe_estimate, probe_max[i]);
    est.gradient_estimate = std::max(est.gradient_estimate, grad_max[i]);
  }
  est.estimate = std::max(est.probe_estimate, est.gradient_estimate);
  return est;
}

}  // namespace robustrl::eval
