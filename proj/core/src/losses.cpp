#include "robustrl/ppo/losses.hpp"

#include <algorithm>
#include <cmath>

#include "robustrl/common/errors.hpp"
#include "robustrl/diffcore/tape.hpp"

namespace robustrl::ppo {

namespace {

constexpr double kLogTwoPi = 1.8378770664093453;

bool all_finite(std::span<const double> xs) {
  for (double x : xs) {
    if (!std::isfinite(x)) return false;
  }
  return true;
}

double sign_of(double x) {
  if (x > 0.0) return 1.0;
  if (x < 0.0) return -1.0;
  return 0.0;
}

void check_actor_batch(const GaussianPolicy& policy, const ActorBatch& b,
                       std::size_t mean_grad_size, std::size_t log_std_grad_size) {
  if (b.indices.empty()) {
    throw InvalidInputError("actor loss: empty minibatch");
  }
  if (b.obs_dim != policy.obs_dim() || b.act_dim != policy.act_dim()) {
    throw InvalidInputError("actor loss: batch dims do not match the policy");
  }
  if (mean_grad_size != policy.mean_net.param_count() ||
      log_std_grad_size != static_cast<std::size_t>(policy.act_dim())) {
    throw InvalidInputError("actor loss: gradient buffers have wrong size");
  }
}

// Entropy of a diagonal Gaussian: sum_j (log_std_j + (1 + log 2pi) / 2).
double policy_entropy(const GaussianPolicy& policy) {
  double h = 0.0;
  for (double ls : policy.log_std) {
    h += ls + 0.5 * (1.0 + kLogTwoPi);
  }
  return h;
}

}  // namespace

ActorLossStats actor_loss_and_grad(const GaussianPolicy& policy, const ActorBatch& batch,
                                   double eta, double entropy_bonus,
                                   diffcore::MlpScratch& scratch,
                                   std::span<double> mean_net_grad,
                                   std::span<double> log_std_grad) {
  check_actor_batch(policy, batch, mean_net_grad.size(), log_std_grad.size());
  if (!(eta > 0.0 && eta < 1.0)) {
    throw InvalidInputError("actor loss: eta must be in (0,1)");
  }
  std::fill(mean_net_grad.begin(), mean_net_grad.end(), 0.0);
  std::fill(log_std_grad.begin(), log_std_grad.end(), 0.0);

  const int act_dim = policy.act_dim();
  const auto uact = static_cast<std::size_t>(act_dim);
  std::vector<double> inv_var(uact);
  for (std::size_t j = 0; j < uact; ++j) {
    const double sigma = std::exp(policy.log_std[j]);
    inv_var[j] = 1.0 / (sigma * sigma);
  }

  const double lo = 1.0 - eta;
  const double hi = 1.0 + eta;
  std::vector<double> mean(uact);
  std::vector<double> ybar(uact);
  std::vector<double> ls_accum(uact, 0.0);

  ActorLossStats stats;
  double sum_objective = 0.0;
  long long clipped = 0;

  for (const std::size_t idx : batch.indices) {
    const auto obs_row =
        batch.obs.subspan(idx * static_cast<std::size_t>(batch.obs_dim),
                          static_cast<std::size_t>(batch.obs_dim));
    const auto act_row = batch.actions.subspan(idx * uact, uact);

    const std::vector<double>& mu =
        diffcore::mlp_forward(policy.mean_net, obs_row, scratch);
    std::copy(mu.begin(), mu.end(), mean.begin());

    double lp = 0.0;
    for (std::size_t j = 0; j < uact; ++j) {
      const double d = act_row[j] - mean[j];
      lp += -0.5 * d * d * inv_var[j] - policy.log_std[j] - 0.5 * kLogTwoPi;
    }
    const double ratio = std::exp(lp - batch.old_log_probs[idx]);
    if (!std::isfinite(ratio)) {
      stats.skipped += 1;
      continue;
    }
    const double adv = batch.advantages[idx];
    const double clipped_ratio = std::clamp(ratio, lo, hi);
    const double t1 = ratio * adv;
    const double t2 = clipped_ratio * adv;
    sum_objective += std::min(t1, t2);
    if (ratio < lo || ratio > hi) clipped += 1;

    // min(a, b) = a - relu(a - b): gradient routes to b only when a - b > 0.
    // clamp built from two relus: derivative (ratio > lo) - (ratio > hi).
    const double dclip =
        (ratio > lo ? 1.0 : 0.0) - (ratio > hi ? 1.0 : 0.0);
    const double dobj_dratio = (t1 - t2 > 0.0) ? adv * dclip : adv;
    const double w = dobj_dratio * ratio;  // d objective / d log-prob

    for (std::size_t j = 0; j < uact; ++j) {
      const double d = act_row[j] - mean[j];
      ybar[j] = w * d * inv_var[j];
      ls_accum[j] += w * (d * d * inv_var[j] - 1.0);
    }
    diffcore::mlp_output_vjp(policy.mean_net, obs_row, ybar, scratch, mean_net_grad);
  }

  const long long retained =
      static_cast<long long>(batch.indices.size()) - stats.skipped;
  const double entropy = policy_entropy(policy);
  if (retained == 0) {
    stats.loss = -entropy_bonus * entropy;
    for (std::size_t j = 0; j < uact; ++j) log_std_grad[j] = -entropy_bonus;
    return stats;
  }
  const double inv_r = 1.0 / static_cast<double>(retained);
  for (double& g : mean_net_grad) g *= -inv_r;
  for (std::size_t j = 0; j < uact; ++j) {
    log_std_grad[j] = -ls_accum[j] * inv_r - entropy_bonus;
  }
  stats.loss = -sum_objective * inv_r - entropy_bonus * entropy;
  stats.clip_fraction = static_cast<double>(clipped) / static_cast<double>(retained);
  return stats;
}

CriticLossStats critic_loss_and_grad(const diffcore::MlpNetwork& critic,
                                     const CriticBatch& batch, double lambda_lips,
                                     diffcore::MlpScratch& scratch,
                                     std::span<double> param_grad) {
  if (batch.indices.empty()) {
    throw InvalidInputError("critic loss: empty minibatch");
  }
  if (critic.output_dim() != 1 || batch.obs_dim != critic.input_dim()) {
    throw InvalidInputError("critic loss: batch dims do not match the critic");
  }
  if (param_grad.size() != critic.param_count()) {
    throw InvalidInputError("critic loss: gradient buffer has wrong size");
  }
  if (!(lambda_lips >= 0.0) || !std::isfinite(lambda_lips)) {
    throw InvalidInputError("critic loss: lambda_lips must be finite and >= 0");
  }
  std::fill(param_grad.begin(), param_grad.end(), 0.0);

  const auto uobs = static_cast<std::size_t>(batch.obs_dim);
  std::vector<double> grad(uobs);
  std::vector<double> gbar(uobs);

  CriticLossStats stats;
  double pred_sum = 0.0;
  double pen_sum = 0.0;
  double norm1_sum = 0.0;

  for (const std::size_t idx : batch.indices) {
    const auto row = batch.obs.subspan(idx * uobs, uobs);
    const double v =
        diffcore::mlp_value_and_input_gradient(critic, row, scratch, grad);
    const double resid = v - batch.targets[idx];
    if (!std::isfinite(resid) || !all_finite(grad)) {
      stats.skipped += 1;
      continue;
    }
    double norm1 = 0.0;
    for (double g : grad) norm1 += std::abs(g);

    pred_sum += resid * resid;
    pen_sum += norm1 * norm1;
    norm1_sum += norm1;

    const double ybar = resid;
    diffcore::mlp_output_vjp(critic, row, std::span<const double>(&ybar, 1), scratch,
                             param_grad);
    if (lambda_lips > 0.0) {
      for (std::size_t j = 0; j < uobs; ++j) {
        gbar[j] = 2.0 * lambda_lips * norm1 * sign_of(grad[j]);
      }
      diffcore::mlp_input_gradient_vjp(critic, row, gbar, scratch, param_grad);
    }
  }

  const long long retained =
      static_cast<long long>(batch.indices.size()) - stats.skipped;
  if (retained == 0) {
    return stats;
  }
  const double inv_r = 1.0 / static_cast<double>(retained);
  for (double& g : param_grad) g *= inv_r;
  stats.pred_loss = 0.5 * pred_sum * inv_r;
  stats.penalty = lambda_lips * pen_sum * inv_r;
  stats.mean_grad_norm1 = norm1_sum * inv_r;
  return stats;
}

ActorLossStats actor_loss_via_tape(const GaussianPolicy& policy, const ActorBatch& batch,
                                   double eta, double entropy_bonus,
                                   std::vector<double>& mean_net_grad,
                                   std::vector<double>& log_std_grad) {
  mean_net_grad.assign(policy.mean_net.param_count(), 0.0);
  log_std_grad.assign(static_cast<std::size_t>(policy.act_dim()), 0.0);
  check_actor_batch(policy, batch, mean_net_grad.size(), log_std_grad.size());
  if (!(eta > 0.0 && eta < 1.0)) {
    throw InvalidInputError("actor loss: eta must be in (0,1)");
  }

  using diffcore::Tape;
  Tape tape;
  const std::vector<Tape::NodeId> params =
      diffcore::make_param_nodes(tape, policy.mean_net, true);

  const auto uact = static_cast<std::size_t>(policy.act_dim());
  std::vector<Tape::NodeId> ls_nodes(uact);
  std::vector<Tape::NodeId> sigma_nodes(uact);
  for (std::size_t j = 0; j < uact; ++j) {
    ls_nodes[j] = tape.var(policy.log_std[j]);
    sigma_nodes[j] = tape.exp_(ls_nodes[j]);
  }
  const Tape::NodeId half = tape.constant(0.5);
  const Tape::NodeId half_log_two_pi = tape.constant(0.5 * kLogTwoPi);
  const Tape::NodeId lo = tape.constant(1.0 - eta);
  const Tape::NodeId hi = tape.constant(1.0 + eta);

  ActorLossStats stats;
  Tape::NodeId sum_objective = tape.constant(0.0);
  long long clipped = 0;

  std::vector<Tape::NodeId> inputs(static_cast<std::size_t>(batch.obs_dim));
  for (const std::size_t idx : batch.indices) {
    for (std::size_t i = 0; i < inputs.size(); ++i) {
      inputs[i] = tape.constant(batch.obs[idx * inputs.size() + i]);
    }
    const std::vector<Tape::NodeId> mu =
        diffcore::mlp_graph_forward(tape, policy.mean_net, params, inputs);

    Tape::NodeId lp = tape.constant(0.0);
    for (std::size_t j = 0; j < uact; ++j) {
      const Tape::NodeId a = tape.constant(batch.actions[idx * uact + j]);
      const Tape::NodeId z = tape.div(tape.sub(a, mu[j]), sigma_nodes[j]);
      const Tape::NodeId term = tape.add(
          tape.add(tape.mul(half, tape.square(z)), ls_nodes[j]), half_log_two_pi);
      lp = tape.sub(lp, term);
    }
    const Tape::NodeId ratio =
        tape.exp_(tape.sub(lp, tape.constant(batch.old_log_probs[idx])));
    const double ratio_value = tape.value(ratio);
    if (!std::isfinite(ratio_value)) {
      stats.skipped += 1;
      continue;
    }
    const Tape::NodeId adv = tape.constant(batch.advantages[idx]);
    const Tape::NodeId t1 = tape.mul(ratio, adv);
    const Tape::NodeId t2 = tape.mul(tape.clamp(ratio, lo, hi), adv);
    sum_objective = tape.add(sum_objective, tape.min_(t1, t2));
    if (ratio_value < 1.0 - eta || ratio_value > 1.0 + eta) clipped += 1;
  }

  const long long retained =
      static_cast<long long>(batch.indices.size()) - stats.skipped;

  Tape::NodeId entropy = tape.constant(0.0);
  const Tape::NodeId entropy_offset = tape.constant(0.5 * (1.0 + kLogTwoPi));
  for (std::size_t j = 0; j < uact; ++j) {
    entropy = tape.add(entropy, tape.add(ls_nodes[j], entropy_offset));
  }
  const Tape::NodeId bonus = tape.mul(tape.constant(entropy_bonus), entropy);

  Tape::NodeId loss;
  if (retained == 0) {
    loss = tape.neg(bonus);
  } else {
    loss = tape.sub(
        tape.neg(tape.div(sum_objective,
                          tape.constant(static_cast<double>(retained)))),
        bonus);
  }

  std::vector<Tape::NodeId> wrt(params.begin(), params.end());
  wrt.insert(wrt.end(), ls_nodes.begin(), ls_nodes.end());
  const std::vector<double> grads = tape.gradient(loss, wrt);
  std::copy(grads.begin(), grads.begin() + static_cast<std::ptrdiff_t>(params.size()),
            mean_net_grad.begin());
  std::copy(grads.begin() + static_cast<std::ptrdiff_t>(params.size()), grads.end(),
            log_std_grad.begin());

  stats.loss = tape.value(loss);
  stats.clip_fraction =
      retained == 0 ? 0.0
                    : static_cast<double>(clipped) / static_cast<double>(retained);
  return stats;
}

CriticLossStats critic_loss_via_tape(const diffcore::MlpNetwork& critic,
                                     const CriticBatch& batch, double lambda_lips,
                                     std::vector<double>& param_grad) {
  param_grad.assign(critic.param_count(), 0.0);
  if (batch.indices.empty()) {
    throw InvalidInputError("critic loss: empty minibatch");
  }
  if (critic.output_dim() != 1 || batch.obs_dim != critic.input_dim()) {
    throw InvalidInputError("critic loss: batch dims do not match the critic");
  }

  using diffcore::Tape;
  Tape tape;
  const std::vector<Tape::NodeId> params =
      diffcore::make_param_nodes(tape, critic, true);

  CriticLossStats stats;
  Tape::NodeId pred_sum = tape.constant(0.0);
  Tape::NodeId pen_sum = tape.constant(0.0);
  double norm1_sum = 0.0;

  std::vector<Tape::NodeId> inputs(static_cast<std::size_t>(batch.obs_dim));
  for (const std::size_t idx : batch.indices) {
    const auto hint = static_cast<Tape::NodeId>(tape.size());
    for (std::size_t i = 0; i < inputs.size(); ++i) {
      inputs[i] = tape.var(batch.obs[idx * inputs.size() + i]);
    }
    const std::vector<Tape::NodeId> out =
        diffcore::mlp_graph_forward(tape, critic, params, inputs);
    const Tape::NodeId v = out[0];

    const std::vector<Tape::NodeId> grads =
        tape.input_gradient_nodes(v, inputs, hint);
    bool finite = std::isfinite(tape.value(v));
    for (const Tape::NodeId g : grads) {
      finite = finite && std::isfinite(tape.value(g));
    }
    if (!finite) {
      stats.skipped += 1;
      continue;
    }

    const Tape::NodeId resid = tape.sub(v, tape.constant(batch.targets[idx]));
    pred_sum = tape.add(pred_sum, tape.square(resid));

    Tape::NodeId norm1 = tape.constant(0.0);
    for (const Tape::NodeId g : grads) {
      norm1 = tape.add(norm1, tape.abs_(g));
    }
    pen_sum = tape.add(pen_sum, tape.square(norm1));
    norm1_sum += tape.value(norm1);
  }

  const long long retained =
      static_cast<long long>(batch.indices.size()) - stats.skipped;
  if (retained == 0) {
    return stats;
  }
  const double r = static_cast<double>(retained);
  const Tape::NodeId loss =
      tape.add(tape.div(pred_sum, tape.constant(2.0 * r)),
               tape.mul(tape.constant(lambda_lips),
                        tape.div(pen_sum, tape.constant(r))));

  const std::vector<double> grads = tape.gradient(loss, params);
  std::copy(grads.begin(), grads.end(), param_grad.begin());

  stats.pred_loss = tape.value(pred_sum) / (2.0 * r);
  stats.penalty = lambda_lips * tape.value(pen_sum) / r;
  stats.mean_grad_norm1 = norm1_sum / r;
  return stats;
}

}  // namespace robustrl::ppo
