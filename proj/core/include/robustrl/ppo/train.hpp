#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

#include "robustrl/diffcore/checkpoint.hpp"
#include "robustrl/diffcore/mlp.hpp"
#include "robustrl/ppo/policy.hpp"
#include "robustrl/wcve/wcve.hpp"

namespace robustrl::ppo {

struct IterationStats {
  long long iteration = 0;    // 1-based
  long long transitions = 0;  // cumulative
  double mean_return = 0.0;   // episodes finished this iteration, else carried
  double actor_loss = 0.0;
  double critic_pred_loss = 0.0;
  double critic_lips_loss = 0.0;
  double mean_grad_norm_1 = 0.0;
  long long pgd_fallbacks = 0;
  long long episodes_completed = 0;
  long long skipped_samples = 0;
  double wall_time_s = 0.0;  // kept out of log.csv so logs stay byte-stable
};

struct TrainConfig {
  std::string env_name = "cartpole";
  nlohmann::json env_overrides = nlohmann::json::object();

  // Worst-case machinery. identity + lambda_lips 0 is plain PPO.
  wcve::SolverKind solver = wcve::SolverKind::kIdentity;
  double epsilon = 0.0;
  std::vector<double> perturb_mask;  // empty = every dimension
  int pgd_steps = 10;
  double pgd_step_size = 0.0;  // 0 = epsilon / pgd_steps
  bool strict_last_iterate = false;
  double lambda_lips = 0.0;

  double gamma = 0.99;
  double xi = 0.95;   // advantage estimation decay
  double eta = 0.2;   // surrogate clip ratio
  bool normalize_advantages = true;
  double entropy_bonus = 0.0;

  std::vector<int> hidden = {64, 64};
  diffcore::Activation activation = diffcore::Activation::kTanh;
  double log_std_init = 0.0;

  double actor_lr = 3e-4;
  double critic_lr = 3e-4;
  double max_grad_norm = 0.5;  // global L2 clip per update, 0 disables
  int epochs = 10;
  int minibatch_size = 64;
  int lanes = 8;
  int steps_per_lane = 256;
  long long total_transitions = 300000;

  std::uint64_t seed = 1;
  int workers = 1;

  // Artifacts land here when set: log.csv, timing.csv, last_good.ckpt and,
  // on clean completion, final.ckpt. Empty path writes nothing.
  std::filesystem::path out_dir;
  std::string variant_label = "ppo";
  std::string config_hash;

  std::function<void(const IterationStats&)> on_iteration;
};

void validate_train_config(const TrainConfig& cfg);

struct TrainResult {
  GaussianPolicy policy;
  diffcore::MlpNetwork critic;
  std::vector<IterationStats> log;
  long long iterations = 0;
  long long transitions = 0;
  bool diverged = false;
  std::string divergence_reason;
};

// Full training loop: alternate rollout collection with epochs of minibatch
// updates; write per-iteration logs and checkpoints. On divergence the run
// stops, keeps its artifacts, and flags the result instead of throwing.
TrainResult train(const TrainConfig& cfg);

// The exact rows-and-header CSV serialization of a training log; reused by
// tests to compare runs for equality.
std::string training_log_csv(const std::vector<IterationStats>& log,
                             const TrainConfig& cfg);

diffcore::PolicyCheckpoint make_checkpoint(const TrainConfig& cfg,
                                           const GaussianPolicy& policy,
                                           const diffcore::MlpNetwork& critic,
                                           const diffcore::AdamState& adam_actor,
                                           const diffcore::AdamState& adam_critic,
                                           long long iteration, long long transitions,
                                           std::span<const double> obs_scale);

}  // namespace robustrl::ppo
