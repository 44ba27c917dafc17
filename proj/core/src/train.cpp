#include "robustrl/ppo/train.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <utility>

#include "robustrl/common/errors.hpp"
#include "robustrl/common/io.hpp"
#include "robustrl/common/parallel.hpp"
#include "robustrl/diffcore/adam.hpp"
#include "robustrl/envs/registry.hpp"
#include "robustrl/ppo/gae.hpp"
#include "robustrl/ppo/losses.hpp"
#include "robustrl/ppo/rollout.hpp"
#include "robustrl/version.hpp"

namespace robustrl::ppo {

namespace {

void require(bool ok, const char* what) {
  if (!ok) throw ConfigError(what);
}

void normalize_in_place(std::span<double> xs) {
  const auto n = static_cast<double>(xs.size());
  double mean = 0.0;
  for (double x : xs) mean += x;
  mean /= n;
  double var = 0.0;
  for (double x : xs) var += (x - mean) * (x - mean);
  var /= n;
  const double denom = std::sqrt(var) + 1e-8;
  for (double& x : xs) x = (x - mean) / denom;
}

void clip_grad_norm(std::span<double> grad, double max_norm) {
  if (max_norm <= 0.0) return;
  double sq = 0.0;
  for (double g : grad) sq += g * g;
  const double norm = std::sqrt(sq);
  if (norm <= max_norm) return;
  const double scale = max_norm / norm;
  for (double& g : grad) g *= scale;
}

void fisher_yates(std::span<std::size_t> perm, Rng& rng) {
  for (std::size_t i = perm.size(); i-- > 1;) {
    const std::size_t j = rng.uniform_index(i + 1);
    std::swap(perm[i], perm[j]);
  }
}

std::string timing_csv(const std::vector<IterationStats>& log) {
  std::string out = "iteration,wall_time_s\n";
  for (const IterationStats& st : log) {
    out += std::to_string(st.iteration);
    out += ',';
    out += format_double(st.wall_time_s);
    out += '\n';
  }
  return out;
}

void write_train_artifacts(const TrainConfig& cfg,
                           const std::vector<IterationStats>& log) {
  atomic_write_file(cfg.out_dir / "log.csv", training_log_csv(log, cfg));
  atomic_write_file(cfg.out_dir / "timing.csv", timing_csv(log));
}

}  // namespace

void validate_train_config(const TrainConfig& cfg) {
  require(cfg.gamma > 0.0 && cfg.gamma < 1.0, "train config: gamma must be in (0,1)");
  require(cfg.xi > 0.0 && cfg.xi < 1.0, "train config: xi must be in (0,1)");
  require(cfg.eta > 0.0 && cfg.eta < 1.0, "train config: eta must be in (0,1)");
  require(std::isfinite(cfg.lambda_lips) && cfg.lambda_lips >= 0.0,
          "train config: lambda_lips must be finite and >= 0");
  require(std::isfinite(cfg.epsilon) && cfg.epsilon >= 0.0,
          "train config: epsilon must be finite and >= 0");
  require(cfg.pgd_steps >= 1, "train config: pgd_steps must be >= 1");
  require(std::isfinite(cfg.pgd_step_size) && cfg.pgd_step_size >= 0.0,
          "train config: pgd_step_size must be finite and >= 0");
  require(std::isfinite(cfg.actor_lr) && cfg.actor_lr > 0.0,
          "train config: actor_lr must be positive");
  require(std::isfinite(cfg.critic_lr) && cfg.critic_lr > 0.0,
          "train config: critic_lr must be positive");
  require(std::isfinite(cfg.max_grad_norm) && cfg.max_grad_norm >= 0.0,
          "train config: max_grad_norm must be finite and >= 0");
  require(cfg.epochs >= 1, "train config: epochs must be >= 1");
  require(cfg.minibatch_size >= 1, "train config: minibatch_size must be >= 1");
  require(cfg.lanes >= 1, "train config: lanes must be >= 1");
  require(cfg.steps_per_lane >= 1, "train config: steps_per_lane must be >= 1");
  const long long batch =
      static_cast<long long>(cfg.lanes) * static_cast<long long>(cfg.steps_per_lane);
  require(cfg.total_transitions >= batch,
          "train config: total_transitions must cover at least one iteration");
  for (int h : cfg.hidden) {
    require(h >= 1, "train config: hidden sizes must be positive");
  }
  require(std::isfinite(cfg.log_std_init), "train config: log_std_init must be finite");
  require(std::isfinite(cfg.entropy_bonus) && cfg.entropy_bonus >= 0.0,
          "train config: entropy_bonus must be finite and >= 0");
}

std::string training_log_csv(const std::vector<IterationStats>& log,
                             const TrainConfig& cfg) {
  std::string out;
  out += "# config_hash=" + cfg.config_hash + "\n";
  out += "# library_version=" + std::string(kLibraryVersion) + "\n";
  out += "# variant=" + cfg.variant_label + "\n";
  out += "# solver=" + std::string(wcve::solver_kind_name(cfg.solver)) + "\n";
  out +=
      "iteration,transitions,mean_return,actor_loss,critic_pred_loss,"
      "critic_lips_loss,mean_grad_norm_1,pgd_fallbacks\n";
  for (const IterationStats& st : log) {
    out += std::to_string(st.iteration);
    out += ',';
    out += std::to_string(st.transitions);
    out += ',';
    out += format_double(st.mean_return);
    out += ',';
    out += format_double(st.actor_loss);
    out += ',';
    out += format_double(st.critic_pred_loss);
    out += ',';
    out += format_double(st.critic_lips_loss);
    out += ',';
    out += format_double(st.mean_grad_norm_1);
    out += ',';
    out += std::to_string(st.pgd_fallbacks);
    out += '\n';
  }
  return out;
}

diffcore::PolicyCheckpoint make_checkpoint(const TrainConfig& cfg,
                                           const GaussianPolicy& policy,
                                           const diffcore::MlpNetwork& critic,
                                           const diffcore::AdamState& adam_actor,
                                           const diffcore::AdamState& adam_critic,
                                           long long iteration, long long transitions,
                                           std::span<const double> obs_scale) {
  diffcore::PolicyCheckpoint c;
  c.format_version = kCheckpointFormatVersion;
  c.library_version = kLibraryVersion;
  c.config_hash = cfg.config_hash;
  c.env_name = cfg.env_name;
  c.env_overrides = cfg.env_overrides;
  c.normalize_obs = true;
  c.obs_scale.assign(obs_scale.begin(), obs_scale.end());
  c.variant = cfg.variant_label;
  c.epsilon = cfg.epsilon;
  c.lambda_lips = cfg.lambda_lips;
  c.seed = cfg.seed;
  c.iteration = iteration;
  c.transitions = transitions;
  c.actor_mean = policy.mean_net;
  c.log_std = policy.log_std;
  c.critic = critic;
  c.adam_actor = adam_actor;
  c.adam_critic = adam_critic;
  return c;
}

TrainResult train(const TrainConfig& cfg) {
  validate_train_config(cfg);
  const std::unique_ptr<envs::Env> env = envs::make_env(cfg.env_name, cfg.env_overrides);
  const int obs_dim = env->state_dim();
  const int act_dim = env->action_dim();
  if (!cfg.perturb_mask.empty() &&
      cfg.perturb_mask.size() != static_cast<std::size_t>(obs_dim)) {
    throw ConfigError("train config: perturb_mask length must match the state dim");
  }

  Rng actor_rng(derive_seed(cfg.seed, "init.actor"));
  GaussianPolicy policy = GaussianPolicy::create(
      obs_dim, act_dim, cfg.hidden, cfg.activation, cfg.log_std_init, actor_rng);
  Rng critic_rng(derive_seed(cfg.seed, "init.critic"));
  std::vector<int> critic_sizes;
  critic_sizes.push_back(obs_dim);
  critic_sizes.insert(critic_sizes.end(), cfg.hidden.begin(), cfg.hidden.end());
  critic_sizes.push_back(1);
  diffcore::MlpNetwork critic =
      diffcore::MlpNetwork::create(critic_sizes, cfg.activation, critic_rng);

  const std::size_t mean_count = policy.mean_net.param_count();
  const std::size_t actor_count = mean_count + static_cast<std::size_t>(act_dim);
  diffcore::AdamConfig actor_adam_cfg;
  actor_adam_cfg.learning_rate = cfg.actor_lr;
  diffcore::AdamConfig critic_adam_cfg;
  critic_adam_cfg.learning_rate = cfg.critic_lr;
  diffcore::AdamState adam_actor = diffcore::AdamState::create(actor_count, actor_adam_cfg);
  diffcore::AdamState adam_critic =
      diffcore::AdamState::create(critic.param_count(), critic_adam_cfg);

  const int workers = resolve_workers(cfg.workers);
  RolloutCollector collector(*env, cfg.seed, cfg.lanes);
  RolloutBuffer buffer;
  const long long batch =
      static_cast<long long>(cfg.lanes) * static_cast<long long>(cfg.steps_per_lane);
  const long long iterations = cfg.total_transitions / batch;

  wcve::UncertaintySet set;
  set.epsilon = cfg.epsilon;
  set.mask = cfg.perturb_mask;
  set.pgd_steps = cfg.pgd_steps;
  set.pgd_step_size = cfg.pgd_step_size;
  set.strict_last_iterate = cfg.strict_last_iterate;

  const NetworkValueFunction value_fn(critic);

  TrainResult result;
  double last_mean_return = 0.0;
  std::vector<double> completed;
  std::vector<double> adv_nominal;
  std::vector<std::size_t> perm;
  std::vector<double> actor_flat(actor_count);
  std::vector<double> actor_grad(actor_count);
  std::vector<double> critic_grad(critic.param_count());
  diffcore::MlpScratch scratch;

  auto save_state = [&](long long iter, long long transitions, const char* name) {
    diffcore::PolicyCheckpoint ckpt =
        make_checkpoint(cfg, policy, critic, adam_actor, adam_critic, iter,
                        transitions, env->obs_scale());
    for (int l = 0; l < collector.lanes(); ++l) {
      ckpt.rng_states["action_lane_" + std::to_string(l)] =
          collector.lane(l).action_rng.state();
    }
    save_checkpoint(cfg.out_dir / name, ckpt);
  };

  try {
    for (long long iter = 1; iter <= iterations; ++iter) {
      const auto t_start = std::chrono::steady_clock::now();
      completed.clear();
      collector.collect(policy, cfg.steps_per_lane, workers, buffer, completed);

      const std::size_t rows = buffer.rows();
      const auto uobs = static_cast<std::size_t>(obs_dim);
      parallel_for(rows, workers, [&](std::size_t i) {
        buffer.values[i] =
            value_fn.value(std::span<const double>(buffer.obs).subspan(i * uobs, uobs));
        buffer.next_values[i] = value_fn.value(
            std::span<const double>(buffer.next_obs).subspan(i * uobs, uobs));
      });

      WorstCaseBatch wc = worst_case_batch(value_fn, cfg.solver, set, buffer.next_obs,
                                           obs_dim, buffer.next_values, workers);
      buffer.worst_next_values = std::move(wc.worst_values);
      buffer.worst_next_states = std::move(wc.worst_states);

      adv_nominal.assign(rows, 0.0);
      for (int l = 0; l < cfg.lanes; ++l) {
        const std::size_t off = buffer.row(l, 0);
        const auto len = static_cast<std::size_t>(cfg.steps_per_lane);
        GaeInputs nominal;
        nominal.rewards = std::span<const double>(buffer.rewards).subspan(off, len);
        nominal.values = std::span<const double>(buffer.values).subspan(off, len);
        nominal.next_values =
            std::span<const double>(buffer.next_values).subspan(off, len);
        nominal.terminated =
            std::span<const std::uint8_t>(buffer.terminated).subspan(off, len);
        nominal.done = std::span<const std::uint8_t>(buffer.done).subspan(off, len);
        compute_gae(nominal, cfg.gamma, cfg.xi,
                    std::span<double>(adv_nominal).subspan(off, len));

        GaeInputs worst = nominal;
        worst.next_values =
            std::span<const double>(buffer.worst_next_values).subspan(off, len);
        compute_gae(worst, cfg.gamma, cfg.xi,
                    std::span<double>(buffer.advantages).subspan(off, len));
      }
      compute_rewards_to_go(adv_nominal, buffer.values, buffer.rewards_to_go);
      if (cfg.normalize_advantages) {
        normalize_in_place(buffer.advantages);
      }

      double acc_actor = 0.0;
      double acc_pred = 0.0;
      double acc_pen = 0.0;
      double acc_norm1 = 0.0;
      long long acc_skipped = 0;
      long long updates = 0;

      perm.resize(rows);
      std::iota(perm.begin(), perm.end(), std::size_t{0});
      const auto mb = static_cast<std::size_t>(cfg.minibatch_size);
      for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        Rng shuffle_rng(derive_seed(
            cfg.seed, "shuffle",
            static_cast<std::uint64_t>(iter - 1) *
                    static_cast<std::uint64_t>(cfg.epochs) +
                static_cast<std::uint64_t>(epoch)));
        fisher_yates(perm, shuffle_rng);
        for (std::size_t start = 0; start < rows; start += mb) {
          const std::size_t count = std::min(mb, rows - start);
          const std::span<const std::size_t> idx(perm.data() + start, count);

          ActorBatch ab;
          ab.obs = buffer.obs;
          ab.actions = buffer.actions;
          ab.old_log_probs = buffer.log_probs;
          ab.advantages = buffer.advantages;
          ab.indices = idx;
          ab.obs_dim = obs_dim;
          ab.act_dim = act_dim;
          const ActorLossStats as = actor_loss_and_grad(
              policy, ab, cfg.eta, cfg.entropy_bonus, scratch,
              std::span<double>(actor_grad).first(mean_count),
              std::span<double>(actor_grad).subspan(mean_count));

          clip_grad_norm(actor_grad, cfg.max_grad_norm);
          std::copy(policy.mean_net.params.begin(), policy.mean_net.params.end(),
                    actor_flat.begin());
          std::copy(policy.log_std.begin(), policy.log_std.end(),
                    actor_flat.begin() + static_cast<std::ptrdiff_t>(mean_count));
          diffcore::adam_step(actor_flat, actor_grad, adam_actor);
          std::copy(actor_flat.begin(),
                    actor_flat.begin() + static_cast<std::ptrdiff_t>(mean_count),
                    policy.mean_net.params.begin());
          std::copy(actor_flat.begin() + static_cast<std::ptrdiff_t>(mean_count),
                    actor_flat.end(), policy.log_std.begin());
          policy.clamp_log_std();

          CriticBatch cb;
          cb.obs = buffer.obs;
          cb.targets = buffer.rewards_to_go;
          cb.indices = idx;
          cb.obs_dim = obs_dim;
          const CriticLossStats cs =
              critic_loss_and_grad(critic, cb, cfg.lambda_lips, scratch, critic_grad);
          clip_grad_norm(critic_grad, cfg.max_grad_norm);
          diffcore::adam_step(critic.params, critic_grad, adam_critic);

          acc_actor += as.loss;
          acc_pred += cs.pred_loss;
          acc_pen += cs.penalty;
          acc_norm1 += cs.mean_grad_norm1;
          acc_skipped += as.skipped + cs.skipped;
          updates += 1;
        }
      }

      IterationStats st;
      st.iteration = iter;
      st.transitions = iter * batch;
      st.episodes_completed = static_cast<long long>(completed.size());
      if (!completed.empty()) {
        double sum = 0.0;
        for (double r : completed) sum += r;
        last_mean_return = sum / static_cast<double>(completed.size());
      }
      st.mean_return = last_mean_return;
      const auto u = static_cast<double>(updates);
      st.actor_loss = acc_actor / u;
      st.critic_pred_loss = acc_pred / u;
      st.critic_lips_loss = acc_pen / u;
      st.mean_grad_norm_1 = acc_norm1 / u;
      st.pgd_fallbacks = wc.fallbacks;
      st.skipped_samples = acc_skipped;
      st.wall_time_s =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start)
              .count();
      result.log.push_back(st);
      result.iterations = iter;
      result.transitions = st.transitions;

      if (!cfg.out_dir.empty()) {
        write_train_artifacts(cfg, result.log);
        save_state(iter, st.transitions, "last_good.ckpt");
      }
      if (cfg.on_iteration) {
        cfg.on_iteration(st);
      }
    }
  } catch (const EnvDivergedError& e) {
    result.diverged = true;
    result.divergence_reason = e.what();
  } catch (const TrainingDivergedError& e) {
    result.diverged = true;
    result.divergence_reason = e.what();
  }

  if (!cfg.out_dir.empty()) {
    write_train_artifacts(cfg, result.log);
    if (!result.diverged) {
      save_state(result.iterations, result.transitions, "final.ckpt");
    }
  }
  result.policy = std::move(policy);
  result.critic = std::move(critic);
  return result;
}

}  // namespace robustrl::ppo
