#pragma once

#include <span>
#include <vector>

#include "robustrl/common/rng.hpp"
#include "robustrl/diffcore/mlp.hpp"

namespace robustrl::ppo {

// Diagonal Gaussian policy: a network maps observations to the action mean,
// the per-dimension log standard deviations are free parameters shared
// across states. Samples are not squashed; the environment clips on
// application while log-probabilities stay those of the raw sample, which is
// what the clipped ratio objective assumes.
struct GaussianPolicy {
  diffcore::MlpNetwork mean_net;
  std::vector<double> log_std;

  static constexpr double kLogStdMin = -20.0;
  static constexpr double kLogStdMax = 2.0;

  static GaussianPolicy create(int obs_dim, int act_dim, std::span<const int> hidden,
                               diffcore::Activation activation, double log_std_init,
                               Rng& rng);

  int obs_dim() const { return mean_net.input_dim(); }
  int act_dim() const { return mean_net.output_dim(); }

  // Projects log_std back into [kLogStdMin, kLogStdMax]; called after every
  // optimizer step so downstream code can assume the bounds hold.
  void clamp_log_std();

  void mean_action(std::span<const double> obs, diffcore::MlpScratch& scratch,
                   std::span<double> out) const;

  // Draws action = mean + exp(log_std) * z with one normal per dimension, in
  // dimension order. Returns the log-probability of the draw.
  double sample(std::span<const double> obs, diffcore::MlpScratch& scratch, Rng& rng,
                std::span<double> action_out) const;

  double log_prob(std::span<const double> obs, std::span<const double> action,
                  diffcore::MlpScratch& scratch) const;

  // Closed-form diagonal Gaussian log-density given a precomputed mean.
  double log_prob_given_mean(std::span<const double> mean,
                             std::span<const double> action) const;
};

}  // namespace robustrl::ppo
