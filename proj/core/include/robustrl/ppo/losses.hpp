#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "robustrl/diffcore/mlp.hpp"
#include "robustrl/ppo/policy.hpp"

namespace robustrl::ppo {

// Minibatches are index views into the full iteration arrays; nothing is
// copied. obs/actions are row-major with the listed widths.
struct ActorBatch {
  std::span<const double> obs;
  std::span<const double> actions;
  std::span<const double> old_log_probs;
  std::span<const double> advantages;  // already normalized by the caller
  std::span<const std::size_t> indices;
  int obs_dim = 0;
  int act_dim = 0;
};

struct ActorLossStats {
  double loss = 0.0;
  double clip_fraction = 0.0;
  long long skipped = 0;  // non-finite ratios, excluded from the mean
};

// Clipped-surrogate loss -mean(min(ratio * A, clip(ratio) * A)) minus an
// optional entropy bonus, with its exact gradient. Gradients are written
// (not accumulated) into mean_net_grad / log_std_grad. Tie conventions
// mirror the tape primitives: min routes to its first argument on equality
// and the clip derivative is zero on the clamped side, so this path and the
// tape reference agree bit-for-bit in structure.
ActorLossStats actor_loss_and_grad(const GaussianPolicy& policy, const ActorBatch& batch,
                                   double eta, double entropy_bonus,
                                   diffcore::MlpScratch& scratch,
                                   std::span<double> mean_net_grad,
                                   std::span<double> log_std_grad);

struct CriticBatch {
  std::span<const double> obs;
  std::span<const double> targets;
  std::span<const std::size_t> indices;
  int obs_dim = 0;
};

struct CriticLossStats {
  double pred_loss = 0.0;         // 1/2 mean squared residual
  double penalty = 0.0;           // lambda * mean (sum_i |dV/ds_i|)^2
  double mean_grad_norm1 = 0.0;   // mean 1-norm of the input gradient
  long long skipped = 0;
};

// Value regression plus the gradient-norm penalty, with the exact parameter
// gradient including the second-order path through the penalty. param_grad
// is written, not accumulated.
CriticLossStats critic_loss_and_grad(const diffcore::MlpNetwork& critic,
                                     const CriticBatch& batch, double lambda_lips,
                                     diffcore::MlpScratch& scratch,
                                     std::span<double> param_grad);

// Reference implementations that build the full computation on the autodiff
// tape and differentiate it numerically. Much slower than the closed-form
// passes above but share no derivation with them; the tests hold both pairs
// together and against finite differences.
ActorLossStats actor_loss_via_tape(const GaussianPolicy& policy, const ActorBatch& batch,
                                   double eta, double entropy_bonus,
                                   std::vector<double>& mean_net_grad,
                                   std::vector<double>& log_std_grad);

CriticLossStats critic_loss_via_tape(const diffcore::MlpNetwork& critic,
                                     const CriticBatch& batch, double lambda_lips,
                                     std::vector<double>& param_grad);

}  // namespace robustrl::ppo
