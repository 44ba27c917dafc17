#include "robustrl/cli/commands.hpp"

#include <algorithm>
#include <cstdio>
#include <map>
#include <memory>
#include <vector>

#include "robustrl/common/errors.hpp"
#include "robustrl/common/io.hpp"
#include "robustrl/common/rng.hpp"
#include "robustrl/envs/registry.hpp"
#include "robustrl/eval/llc.hpp"
#include "robustrl/eval/reports.hpp"
#include "robustrl/eval/smoothness.hpp"
#include "robustrl/version.hpp"

namespace robustrl::cli {

namespace {

struct LoadedPolicy {
  diffcore::PolicyCheckpoint ckpt;
  ppo::GaussianPolicy policy;
  std::unique_ptr<envs::Env> env;
};

LoadedPolicy load_policy(const std::filesystem::path& path) {
  LoadedPolicy lp;
  lp.ckpt = diffcore::load_checkpoint(path);
  lp.env = envs::make_env(lp.ckpt.env_name, lp.ckpt.env_overrides);
  lp.policy.mean_net = lp.ckpt.actor_mean;
  lp.policy.log_std = lp.ckpt.log_std;
  if (lp.policy.obs_dim() != lp.env->state_dim() ||
      lp.policy.act_dim() != lp.env->action_dim()) {
    throw CheckpointError("checkpoint: actor dimensions do not match env '" +
                          lp.ckpt.env_name + "'");
  }
  if (lp.ckpt.critic.input_dim() != lp.env->state_dim() ||
      lp.ckpt.critic.output_dim() != 1) {
    throw CheckpointError("checkpoint: critic dimensions do not match env '" +
                          lp.ckpt.env_name + "'");
  }
  return lp;
}

std::string provenance_lines(const std::string& config_hash) {
  std::string out = "# config_hash=" + config_hash + "\n";
  out += "# library_version=" + std::string(kLibraryVersion) + "\n";
  return out;
}

// Normalized states visited by mean-action rollouts on the nominal env,
// truncated to exactly n_states rows.
std::vector<double> collect_rollout_states(const ppo::GaussianPolicy& policy,
                                           const envs::Env& env, int n_states,
                                           std::uint64_t seed) {
  const auto dim = static_cast<std::size_t>(env.state_dim());
  std::vector<double> states;
  states.reserve(static_cast<std::size_t>(n_states) * dim);
  diffcore::MlpScratch scratch;
  std::vector<double> obs(dim);
  std::vector<double> action(static_cast<std::size_t>(env.action_dim()));
  std::uint64_t episode = 0;
  while (states.size() < static_cast<std::size_t>(n_states) * dim) {
    const envs::EpisodeResult ep = envs::run_episode(
        env, derive_seed(seed, "episode", episode),
        [&](std::span<const double> raw) {
          envs::normalize_state_into(env, raw, obs);
          policy.mean_action(obs, scratch, action);
          return action;
        },
        /*record_traces=*/true);
    const std::size_t rows = ep.state_trace.size() / dim;
    for (std::size_t r = 0; r < rows; ++r) {
      if (states.size() >= static_cast<std::size_t>(n_states) * dim) break;
      envs::normalize_state_into(
          env, std::span<const double>(ep.state_trace).subspan(r * dim, dim), obs);
      states.insert(states.end(), obs.begin(), obs.end());
    }
    episode += 1;
    if (episode > 100000) {
      throw Error("state collection did not reach the requested count");
    }
  }
  return states;
}

}  // namespace

int cmd_train(const RunConfig& run, const CommonOptions& opt) {
  const std::filesystem::path out = opt.out.empty() ? run.out_dir : opt.out;
  if (out.empty()) {
    throw ConfigError("train: no output directory (config key 'out' or --out)");
  }
  const std::vector<std::uint64_t> seeds =
      opt.seed ? std::vector<std::uint64_t>{*opt.seed} : run.seeds;
  std::filesystem::create_directories(out);

  int exit_code = 0;
  for (std::uint64_t seed : seeds) {
    const std::filesystem::path run_dir = out / ("seed_" + std::to_string(seed));
    std::filesystem::create_directories(run_dir);
    ppo::TrainConfig cfg =
        make_train_config(run, seed, run_dir, opt.workers, opt.strict_alg1);
    std::printf("train %s seed=%llu -> %s\n", run.variant.c_str(),
                static_cast<unsigned long long>(seed), run_dir.c_str());
    const ppo::TrainResult result = ppo::train(cfg);
    if (result.diverged) {
      std::fprintf(stderr, "train seed=%llu diverged after %lld iterations: %s\n",
                   static_cast<unsigned long long>(seed), result.iterations,
                   result.divergence_reason.c_str());
      exit_code = 1;
    } else {
      const double final_return =
          result.log.empty() ? 0.0 : result.log.back().mean_return;
      std::printf("train seed=%llu done: %lld transitions, mean_return=%s\n",
                  static_cast<unsigned long long>(seed), result.transitions,
                  format_double(final_return).c_str());
    }
  }
  return exit_code;
}

int cmd_grid(const std::filesystem::path& checkpoint_path, const RunConfig& run,
             const CommonOptions& opt) {
  if (opt.out.empty()) throw ConfigError("grid: --out directory required");
  const LoadedPolicy lp = load_policy(checkpoint_path);
  const std::uint64_t master = opt.seed.value_or(lp.ckpt.seed);
  eval::RobustnessReport report = eval::run_grid(
      lp.policy, *lp.env, run.grid, derive_seed(master, "eval"), opt.workers);
  report.variant = lp.ckpt.variant;
  report.epsilon = lp.ckpt.epsilon;
  report.lambda_lips = lp.ckpt.lambda_lips;
  report.seeds = {lp.ckpt.seed};
  eval::write_grid_report(opt.out, report, lp.ckpt.config_hash);
  std::printf("grid %dx%d done: rho0=%s rho_max=%s -> %s\n", run.grid.size,
              run.grid.size, format_double(report.rho_robustness.front()).c_str(),
              format_double(report.rho_robustness.back()).c_str(),
              opt.out.c_str());
  return 0;
}

int cmd_eval(const std::filesystem::path& checkpoint_path, int n_episodes,
             const CommonOptions& opt) {
  if (n_episodes < 1) throw InvalidInputError("eval: n_episodes must be >= 1");
  if (opt.out.empty()) throw ConfigError("eval: --out directory required");
  const LoadedPolicy lp = load_policy(checkpoint_path);
  const envs::Env& env = *lp.env;
  const std::uint64_t eval_seed =
      derive_seed(opt.seed.value_or(lp.ckpt.seed), "eval");

  const envs::EnvState probe = env.reset(derive_seed(eval_seed, "episode", 0));
  const auto track = env.tracking(probe);
  const int track_dim = track ? static_cast<int>(track->value.size()) : 0;

  diffcore::MlpScratch scratch;
  std::vector<double> obs(static_cast<std::size_t>(env.state_dim()));
  std::vector<double> action(static_cast<std::size_t>(env.action_dim()));
  std::vector<eval::EpisodeSmoothness> rows;
  rows.reserve(static_cast<std::size_t>(n_episodes));
  for (int e = 0; e < n_episodes; ++e) {
    const envs::EpisodeResult ep = envs::run_episode(
        env, derive_seed(eval_seed, "episode", static_cast<std::uint64_t>(e)),
        [&](std::span<const double> raw) {
          envs::normalize_state_into(env, raw, obs);
          lp.policy.mean_action(obs, scratch, action);
          return action;
        },
        /*record_traces=*/true);
    eval::EpisodeSmoothness row;
    row.episode = e;
    row.total_reward = ep.total_reward;
    row.length = ep.length;
    row.metrics = eval::smoothness(ep, env.action_dim(), track_dim);
    rows.push_back(row);
  }

  std::string content = provenance_lines(lp.ckpt.config_hash);
  content += "# env=" + lp.ckpt.env_name + "\n";
  content += "# variant=" + lp.ckpt.variant + "\n";
  content += "# seed=" + std::to_string(opt.seed.value_or(lp.ckpt.seed)) + "\n";
  content += eval::smoothness_csv(rows);
  std::filesystem::create_directories(opt.out);
  atomic_write_file(opt.out / "smoothness.csv", content);

  double mean_return = 0.0;
  for (const eval::EpisodeSmoothness& row : rows) mean_return += row.total_reward;
  mean_return /= static_cast<double>(rows.size());
  std::printf("eval %d episodes: mean_return=%s -> %s\n", n_episodes,
              format_double(mean_return).c_str(), opt.out.c_str());
  return 0;
}

int cmd_llc(const std::filesystem::path& checkpoint_path, const RunConfig& run,
            const std::optional<std::filesystem::path>& states_from,
            const CommonOptions& opt) {
  if (opt.out.empty()) throw ConfigError("llc: --out directory required");
  const LoadedPolicy lp = load_policy(checkpoint_path);
  const LoadedPolicy source = states_from ? load_policy(*states_from) : load_policy(checkpoint_path);
  if (source.env->state_dim() != lp.env->state_dim()) {
    throw InvalidInputError("llc: state source env does not match the checkpoint env");
  }
  const std::uint64_t master = opt.seed.value_or(lp.ckpt.seed);
  const std::vector<double> states =
      collect_rollout_states(source.policy, *source.env, run.llc_n_states,
                             derive_seed(master, "llc-states"));

  eval::LlcEstimate actor = eval::estimate_llc(
      lp.policy.mean_net, states, lp.env->state_dim(), run.llc_epsilon_probe,
      run.llc_n_probes, derive_seed(master, "llc-probe.actor"), opt.workers);
  actor.network = "actor";
  eval::LlcEstimate critic = eval::estimate_llc(
      lp.ckpt.critic, states, lp.env->state_dim(), run.llc_epsilon_probe,
      run.llc_n_probes, derive_seed(master, "llc-probe.critic"), opt.workers);
  critic.network = "critic";

  std::string content = provenance_lines(lp.ckpt.config_hash);
  content += "# states_from=" +
             (states_from ? states_from->string() : checkpoint_path.string()) + "\n";
  const eval::LlcEstimate estimates[] = {actor, critic};
  content += eval::llc_csv(estimates);
  std::filesystem::create_directories(opt.out);
  atomic_write_file(opt.out / "llc.csv", content);
  std::printf("llc actor=%s critic=%s -> %s\n", format_double(actor.estimate).c_str(),
              format_double(critic.estimate).c_str(), opt.out.c_str());
  return 0;
}

int cmd_compare(std::span<const std::string> label_dirs, const CommonOptions& opt) {
  if (opt.out.empty()) throw ConfigError("compare: --out file path required");
  if (label_dirs.empty()) {
    throw InvalidInputError("compare: need at least one label=dir argument");
  }

  std::vector<std::string> order;
  std::map<std::string, std::vector<std::filesystem::path>> groups;
  for (const std::string& arg : label_dirs) {
    const std::size_t sep = arg.find('=');
    if (sep == std::string::npos || sep == 0 || sep + 1 == arg.size()) {
      throw InvalidInputError("compare: arguments must look like label=dir, got '" +
                              arg + "'");
    }
    const std::string label = arg.substr(0, sep);
    if (!groups.contains(label)) order.push_back(label);
    groups[label].emplace_back(arg.substr(sep + 1));
  }

  int size = 0;
  std::vector<eval::CompareRow> rows;
  std::string hash_lines;
  for (const std::string& label : order) {
    std::vector<double> pooled;
    std::string hashes;
    for (const std::filesystem::path& dir : groups[label]) {
      const eval::ParsedGrid grid = eval::parse_grid_csv(read_file(dir / "grid.csv"));
      if (size == 0) size = grid.size;
      if (grid.size != size) {
        throw InvalidInputError("compare: grids disagree on size under '" + label + "'");
      }
      if (pooled.empty()) {
        pooled = grid.cell_means;
      } else {
        for (std::size_t i = 0; i < pooled.size(); ++i) {
          pooled[i] += grid.cell_means[i];
        }
      }
      const std::filesystem::path meta_path = dir / "grid.meta.json";
      if (std::filesystem::exists(meta_path)) {
        const auto meta = nlohmann::json::parse(read_file(meta_path), nullptr, false);
        if (!meta.is_discarded() && meta.contains("config_hash")) {
          if (!hashes.empty()) hashes += ';';
          hashes += meta.at("config_hash").get<std::string>();
        }
      }
    }
    const auto runs = static_cast<double>(groups[label].size());
    for (double& v : pooled) v /= runs;
    rows.push_back({label, eval::rho_robustness(pooled, size)});
    hash_lines += "# config_hash_" + label + "=" + hashes + "\n";
  }

  std::string content = "# library_version=" + std::string(kLibraryVersion) + "\n";
  content += hash_lines;
  content += eval::compare_csv(rows);
  if (opt.out.has_parent_path()) {
    std::filesystem::create_directories(opt.out.parent_path());
  }
  atomic_write_file(opt.out, content);
  std::printf("%s", content.c_str());
  return 0;
}

}  // namespace robustrl::cli
