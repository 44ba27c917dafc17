#include "robustrl/ppo/policy.hpp"

#include <algorithm>
#include <cmath>

#include "robustrl/common/errors.hpp"

namespace robustrl::ppo {

namespace {
constexpr double kLogTwoPi = 1.8378770664093453;  // log(2*pi)
}

GaussianPolicy GaussianPolicy::create(int obs_dim, int act_dim,
                                      std::span<const int> hidden,
                                      diffcore::Activation activation,
                                      double log_std_init, Rng& rng) {
  if (obs_dim < 1 || act_dim < 1) {
    throw InvalidInputError("policy: obs_dim and act_dim must be positive");
  }
  std::vector<int> sizes;
  sizes.push_back(obs_dim);
  sizes.insert(sizes.end(), hidden.begin(), hidden.end());
  sizes.push_back(act_dim);
  GaussianPolicy p;
  p.mean_net = diffcore::MlpNetwork::create(std::move(sizes), activation, rng);
  p.log_std.assign(static_cast<size_t>(act_dim),
                   std::clamp(log_std_init, kLogStdMin, kLogStdMax));
  return p;
}

void GaussianPolicy::clamp_log_std() {
  for (double& v : log_std) {
    v = std::clamp(v, kLogStdMin, kLogStdMax);
  }
}

void GaussianPolicy::mean_action(std::span<const double> obs,
                                 diffcore::MlpScratch& scratch,
                                 std::span<double> out) const {
  const std::vector<double>& mean = diffcore::mlp_forward(mean_net, obs, scratch);
  std::copy(mean.begin(), mean.end(), out.begin());
}

double GaussianPolicy::sample(std::span<const double> obs,
                              diffcore::MlpScratch& scratch, Rng& rng,
                              std::span<double> action_out) const {
  const std::vector<double>& mean = diffcore::mlp_forward(mean_net, obs, scratch);
  const auto n = static_cast<size_t>(act_dim());
  for (size_t i = 0; i < n; ++i) {
    action_out[i] = mean[i] + std::exp(log_std[i]) * rng.normal();
  }
  return log_prob_given_mean(mean, action_out);
}

double GaussianPolicy::log_prob(std::span<const double> obs,
                                std::span<const double> action,
                                diffcore::MlpScratch& scratch) const {
  const std::vector<double>& mean = diffcore::mlp_forward(mean_net, obs, scratch);
  return log_prob_given_mean(mean, action);
}

double GaussianPolicy::log_prob_given_mean(std::span<const double> mean,
                                           std::span<const double> action) const {
  double lp = 0.0;
  const auto n = static_cast<size_t>(act_dim());
  for (size_t i = 0; i < n; ++i) {
    const double sigma = std::exp(log_std[i]);
    const double z = (action[i] - mean[i]) / sigma;
    lp += -0.5 * z * z - log_std[i] - 0.5 * kLogTwoPi;
  }
  return lp;
}

}  // namespace robustrl::ppo
