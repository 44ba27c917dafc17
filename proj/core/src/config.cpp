#include "robustrl/cli/config.hpp"

#include <cmath>
#include <initializer_list>
#include <string_view>

#include "robustrl/common/errors.hpp"
#include "robustrl/common/io.hpp"
#include "robustrl/common/rng.hpp"
#include "robustrl/envs/registry.hpp"

namespace robustrl::cli {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& path, const std::string& what) {
  throw ConfigError("config: " + path + " " + what);
}

void check_keys(const json& obj, const std::string& prefix,
                std::initializer_list<std::string_view> allowed) {
  for (const auto& item : obj.items()) {
    bool known = false;
    for (std::string_view key : allowed) known = known || item.key() == key;
    if (!known) {
      const std::string path = prefix.empty() ? item.key() : prefix + "." + item.key();
      throw ConfigError("config: unknown key '" + path + "'");
    }
  }
}

double get_number(const json& obj, const std::string& prefix, const char* key,
                  double fallback) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  if (!v.is_number()) fail(prefix + "." + key, "must be a number");
  const double d = v.get<double>();
  if (!std::isfinite(d)) fail(prefix + "." + key, "must be finite");
  return d;
}

long long get_integer(const json& obj, const std::string& prefix, const char* key,
                      long long fallback) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  if (!v.is_number_integer()) fail(prefix + "." + key, "must be an integer");
  return v.get<long long>();
}

bool get_bool(const json& obj, const std::string& prefix, const char* key,
              bool fallback) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  if (!v.is_boolean()) fail(prefix + "." + key, "must be a boolean");
  return v.get<bool>();
}

std::string get_string(const json& obj, const std::string& prefix, const char* key,
                       const std::string& fallback) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  if (!v.is_string()) fail(prefix + "." + key, "must be a string");
  return v.get<std::string>();
}

void parse_train_section(const json& obj, ppo::TrainConfig& train) {
  const std::string p = "train";
  check_keys(obj, p,
             {"gamma", "xi", "eta", "epsilon", "lambda", "mask", "pgd_steps",
              "pgd_step_size", "strict_alg1", "epochs", "minibatch_size", "lanes",
              "steps_per_lane", "total_transitions", "actor_lr", "critic_lr",
              "max_grad_norm", "hidden", "activation", "log_std_init",
              "normalize_advantages", "entropy_bonus"});
  train.gamma = get_number(obj, p, "gamma", train.gamma);
  train.xi = get_number(obj, p, "xi", train.xi);
  train.eta = get_number(obj, p, "eta", train.eta);
  train.epsilon = get_number(obj, p, "epsilon", train.epsilon);
  train.lambda_lips = get_number(obj, p, "lambda", train.lambda_lips);
  if (obj.contains("mask")) {
    const json& mask = obj.at("mask");
    if (!mask.is_array()) fail("train.mask", "must be an array of 0/1");
    train.perturb_mask.clear();
    for (const json& v : mask) {
      if (!v.is_number()) fail("train.mask", "must contain numbers");
      const double d = v.get<double>();
      if (d != 0.0 && d != 1.0) fail("train.mask", "entries must be 0 or 1");
      train.perturb_mask.push_back(d);
    }
  }
  train.pgd_steps = static_cast<int>(get_integer(obj, p, "pgd_steps", train.pgd_steps));
  train.pgd_step_size = get_number(obj, p, "pgd_step_size", train.pgd_step_size);
  train.strict_last_iterate = get_bool(obj, p, "strict_alg1", train.strict_last_iterate);
  train.epochs = static_cast<int>(get_integer(obj, p, "epochs", train.epochs));
  train.minibatch_size =
      static_cast<int>(get_integer(obj, p, "minibatch_size", train.minibatch_size));
  train.lanes = static_cast<int>(get_integer(obj, p, "lanes", train.lanes));
  train.steps_per_lane =
      static_cast<int>(get_integer(obj, p, "steps_per_lane", train.steps_per_lane));
  train.total_transitions =
      get_integer(obj, p, "total_transitions", train.total_transitions);
  train.actor_lr = get_number(obj, p, "actor_lr", train.actor_lr);
  train.critic_lr = get_number(obj, p, "critic_lr", train.critic_lr);
  train.max_grad_norm = get_number(obj, p, "max_grad_norm", train.max_grad_norm);
  if (obj.contains("hidden")) {
    const json& hidden = obj.at("hidden");
    if (!hidden.is_array() || hidden.empty()) {
      fail("train.hidden", "must be a nonempty array of layer widths");
    }
    train.hidden.clear();
    for (const json& v : hidden) {
      if (!v.is_number_integer() || v.get<long long>() < 1) {
        fail("train.hidden", "widths must be positive integers");
      }
      train.hidden.push_back(static_cast<int>(v.get<long long>()));
    }
  }
  const std::string act = get_string(obj, p, "activation",
                                     diffcore::activation_name(train.activation));
  train.activation = diffcore::activation_from_name(act);
  train.log_std_init = get_number(obj, p, "log_std_init", train.log_std_init);
  train.normalize_advantages =
      get_bool(obj, p, "normalize_advantages", train.normalize_advantages);
  train.entropy_bonus = get_number(obj, p, "entropy_bonus", train.entropy_bonus);
}

void parse_grid_section(const json& obj, eval::PerturbationGrid& grid) {
  const std::string p = "grid";
  check_keys(obj, p, {"size", "scale_min", "scale_max", "episodes_per_cell"});
  grid.size = static_cast<int>(get_integer(obj, p, "size", grid.size));
  const double lo = get_number(obj, p, "scale_min", 0.2);
  const double hi = get_number(obj, p, "scale_max", 1.8);
  grid.axis1_scales = eval::grid_scales(grid.size, lo, hi);
  grid.axis2_scales = grid.axis1_scales;
  grid.episodes_per_cell =
      static_cast<int>(get_integer(obj, p, "episodes_per_cell", grid.episodes_per_cell));
  eval::validate_grid(grid);
}

void validate_variant_fields(const RunConfig& run) {
  const std::string& v = run.variant;
  if (v != "ppo" && v != "ppo-gbr" && v != "ppo-pgd" && v != "ppo-pgdlc") {
    throw ConfigError("config: variant must be one of ppo, ppo-gbr, ppo-pgd, ppo-pgdlc");
  }
  if (v == "ppo") {
    if (run.train.epsilon > 0.0) {
      throw ConfigError("config: train.epsilon must be 0 for variant ppo");
    }
    if (run.train.lambda_lips > 0.0) {
      throw ConfigError("config: train.lambda must be 0 for variant ppo");
    }
  } else if (v == "ppo-gbr" || v == "ppo-pgd") {
    if (run.train.lambda_lips > 0.0) {
      throw ConfigError("config: train.lambda must be 0 for variant " + v);
    }
  } else {  // ppo-pgdlc
    if (!(run.train.epsilon > 0.0)) {
      throw ConfigError("config: variant ppo-pgdlc requires train.epsilon > 0");
    }
  }
}

std::string hash_hex(std::uint64_t h) {
  static const char* digits = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[static_cast<std::size_t>(i)] = digits[h & 0xF];
    h >>= 4;
  }
  return out;
}

}  // namespace

wcve::SolverKind solver_for_variant(const std::string& variant) {
  if (variant == "ppo") return wcve::SolverKind::kIdentity;
  if (variant == "ppo-gbr") return wcve::SolverKind::kGbr;
  if (variant == "ppo-pgd" || variant == "ppo-pgdlc") return wcve::SolverKind::kPgd;
  throw ConfigError("config: unknown variant '" + variant + "'");
}

RunConfig parse_run_config(const std::string& text) {
  json root = json::parse(text, nullptr, /*allow_exceptions=*/false);
  if (root.is_discarded() || !root.is_object()) {
    throw ConfigError("config: file is not a JSON object");
  }
  check_keys(root, "", {"env", "variant", "seeds", "out", "train", "grid", "eval", "llc"});

  RunConfig run;
  if (root.contains("env")) {
    const json& env = root.at("env");
    if (!env.is_object()) fail("env", "must be an object");
    check_keys(env, "env", {"name", "overrides"});
    run.env_name = get_string(env, "env", "name", run.env_name);
    if (env.contains("overrides")) {
      if (!env.at("overrides").is_object()) fail("env.overrides", "must be an object");
      run.env_overrides = env.at("overrides");
    }
  }
  run.variant = get_string(root, "", "variant", run.variant);
  if (root.contains("seeds")) {
    const json& seeds = root.at("seeds");
    if (!seeds.is_array() || seeds.empty()) {
      fail("seeds", "must be a nonempty array of integers");
    }
    run.seeds.clear();
    for (const json& v : seeds) {
      if (!v.is_number_integer() || v.get<long long>() < 0) {
        fail("seeds", "must contain nonnegative integers");
      }
      run.seeds.push_back(v.get<std::uint64_t>());
    }
  }
  run.out_dir = get_string(root, "", "out", "");
  if (root.contains("train")) {
    if (!root.at("train").is_object()) fail("train", "must be an object");
    parse_train_section(root.at("train"), run.train);
  }
  if (root.contains("grid")) {
    if (!root.at("grid").is_object()) fail("grid", "must be an object");
    parse_grid_section(root.at("grid"), run.grid);
  }
  if (root.contains("eval")) {
    const json& ev = root.at("eval");
    if (!ev.is_object()) fail("eval", "must be an object");
    check_keys(ev, "eval", {"episodes"});
    run.eval_episodes =
        static_cast<int>(get_integer(ev, "eval", "episodes", run.eval_episodes));
  }
  if (root.contains("llc")) {
    const json& llc = root.at("llc");
    if (!llc.is_object()) fail("llc", "must be an object");
    check_keys(llc, "llc", {"epsilon_probe", "n_probes", "n_states"});
    run.llc_epsilon_probe =
        get_number(llc, "llc", "epsilon_probe", run.llc_epsilon_probe);
    run.llc_n_probes = get_integer(llc, "llc", "n_probes", run.llc_n_probes);
    run.llc_n_states =
        static_cast<int>(get_integer(llc, "llc", "n_states", run.llc_n_states));
  }

  validate_variant_fields(run);
  // Surface env/hyperparameter problems at parse time, not mid-run.
  (void)envs::make_env(run.env_name, run.env_overrides);
  ppo::TrainConfig check = run.train;
  check.env_name = run.env_name;
  check.env_overrides = run.env_overrides;
  check.solver = solver_for_variant(run.variant);
  validate_train_config(check);
  if (run.eval_episodes < 1) fail("eval.episodes", "must be >= 1");
  if (!(run.llc_epsilon_probe > 0.0)) fail("llc.epsilon_probe", "must be > 0");
  if (run.llc_n_probes < 1) fail("llc.n_probes", "must be >= 1");
  if (run.llc_n_states < 1) fail("llc.n_states", "must be >= 1");

  run.config_hash = hash_hex(fnv1a64(root.dump()));
  return run;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  return parse_run_config(read_file(path));
}

ppo::TrainConfig make_train_config(const RunConfig& run, std::uint64_t seed,
                                   const std::filesystem::path& out_dir,
                                   int workers, bool strict_alg1) {
  ppo::TrainConfig cfg = run.train;
  cfg.env_name = run.env_name;
  cfg.env_overrides = run.env_overrides;
  cfg.solver = solver_for_variant(run.variant);
  cfg.variant_label = run.variant;
  cfg.seed = seed;
  cfg.workers = workers;
  cfg.out_dir = out_dir;
  cfg.config_hash = run.config_hash;
  cfg.strict_last_iterate = cfg.strict_last_iterate || strict_alg1;
  return cfg;
}

}  // namespace robustrl::cli
