#include "robustrl/diffcore/checkpoint.hpp"

#include <charconv>

#include "robustrl/common/errors.hpp"
#include "robustrl/common/io.hpp"
#include "robustrl/version.hpp"

namespace robustrl::diffcore {

using nlohmann::json;

namespace {

std::string u64_to_string(std::uint64_t v) {
  char buf[24];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::uint64_t u64_from_string(const std::string& s) {
  std::uint64_t v = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw CheckpointError("bad unsigned integer: '" + s + "'");
  }
  return v;
}

template <typename T>
T get_field(const json& j, const char* key) {
  if (!j.contains(key)) throw CheckpointError(std::string("missing field: ") + key);
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw CheckpointError(std::string("bad field '") + key + "': " + e.what());
  }
}

}  // namespace

json network_to_json(const MlpNetwork& net) {
  return json{{"layer_sizes", net.layer_sizes},
              {"activation", activation_name(net.activation)},
              {"params", net.params}};
}

MlpNetwork network_from_json(const json& j) {
  MlpNetwork net;
  net.layer_sizes = get_field<std::vector<int>>(j, "layer_sizes");
  net.activation = activation_from_name(get_field<std::string>(j, "activation"));
  net.params = get_field<std::vector<double>>(j, "params");
  try {
    net.validate();
  } catch (const Error& e) {
    throw CheckpointError(std::string("network does not validate: ") + e.what());
  }
  return net;
}

json adam_to_json(const AdamState& s) {
  return json{{"learning_rate", s.config.learning_rate},
              {"beta1", s.config.beta1},
              {"beta2", s.config.beta2},
              {"eps", s.config.eps},
              {"step_count", u64_to_string(s.step_count)},
              {"m", s.m},
              {"v", s.v}};
}

AdamState adam_from_json(const json& j) {
  AdamState s;
  s.config.learning_rate = get_field<double>(j, "learning_rate");
  s.config.beta1 = get_field<double>(j, "beta1");
  s.config.beta2 = get_field<double>(j, "beta2");
  s.config.eps = get_field<double>(j, "eps");
  s.step_count = u64_from_string(get_field<std::string>(j, "step_count"));
  s.m = get_field<std::vector<double>>(j, "m");
  s.v = get_field<std::vector<double>>(j, "v");
  if (s.m.size() != s.v.size()) throw CheckpointError("optimizer moment sizes disagree");
  return s;
}

void save_checkpoint(const std::filesystem::path& path, const PolicyCheckpoint& ckpt) {
  json j;
  j["format_version"] = kCheckpointFormatVersion;
  j["library_version"] = kLibraryVersion;
  j["config_hash"] = ckpt.config_hash;
  j["env"] = json{{"name", ckpt.env_name},
                  {"overrides", ckpt.env_overrides},
                  {"normalize_obs", ckpt.normalize_obs},
                  {"obs_scale", ckpt.obs_scale}};
  j["run"] = json{{"variant", ckpt.variant},
                  {"epsilon", ckpt.epsilon},
                  {"lambda_lips", ckpt.lambda_lips},
                  {"seed", u64_to_string(ckpt.seed)},
                  {"iteration", ckpt.iteration},
                  {"transitions", ckpt.transitions}};
  j["actor_mean"] = network_to_json(ckpt.actor_mean);
  j["log_std"] = ckpt.log_std;
  j["critic"] = network_to_json(ckpt.critic);
  j["adam_actor"] = adam_to_json(ckpt.adam_actor);
  j["adam_critic"] = adam_to_json(ckpt.adam_critic);
  json rng = json::object();
  for (const auto& [name, state] : ckpt.rng_states) {
    rng[name] = json::array({u64_to_string(state[0]), u64_to_string(state[1]),
                             u64_to_string(state[2]), u64_to_string(state[3])});
  }
  j["rng"] = std::move(rng);
  atomic_write_file(path, j.dump(2) + "\n");
}

PolicyCheckpoint load_checkpoint(const std::filesystem::path& path) {
  json j;
  try {
    j = json::parse(read_file(path));
  } catch (const json::exception& e) {
    throw CheckpointError("cannot parse checkpoint " + path.string() + ": " + e.what());
  }

  const int version = get_field<int>(j, "format_version");
  if (version != kCheckpointFormatVersion) {
    throw CheckpointError("checkpoint " + path.string() + " has format_version " +
                          std::to_string(version) + ", this build reads " +
                          std::to_string(kCheckpointFormatVersion));
  }

  PolicyCheckpoint c;
  c.format_version = version;
  c.library_version = get_field<std::string>(j, "library_version");
  c.config_hash = get_field<std::string>(j, "config_hash");

  const json env = get_field<json>(j, "env");
  c.env_name = get_field<std::string>(env, "name");
  c.env_overrides = env.contains("overrides") ? env.at("overrides") : json::object();
  c.normalize_obs = get_field<bool>(env, "normalize_obs");
  c.obs_scale = get_field<std::vector<double>>(env, "obs_scale");

  const json run = get_field<json>(j, "run");
  c.variant = get_field<std::string>(run, "variant");
  c.epsilon = get_field<double>(run, "epsilon");
  c.lambda_lips = get_field<double>(run, "lambda_lips");
  c.seed = u64_from_string(get_field<std::string>(run, "seed"));
  c.iteration = get_field<std::int64_t>(run, "iteration");
  c.transitions = get_field<std::int64_t>(run, "transitions");

  c.actor_mean = network_from_json(get_field<json>(j, "actor_mean"));
  c.log_std = get_field<std::vector<double>>(j, "log_std");
  c.critic = network_from_json(get_field<json>(j, "critic"));
  c.adam_actor = adam_from_json(get_field<json>(j, "adam_actor"));
  c.adam_critic = adam_from_json(get_field<json>(j, "adam_critic"));

  const json rng = get_field<json>(j, "rng");
  for (auto it = rng.begin(); it != rng.end(); ++it) {
    const auto arr = it.value().get<std::vector<std::string>>();
    if (arr.size() != 4) throw CheckpointError("rng state needs four words");
    std::array<std::uint64_t, 4> state{};
    for (int i = 0; i < 4; ++i) state[static_cast<std::size_t>(i)] = u64_from_string(arr[static_cast<std::size_t>(i)]);
    c.rng_states.emplace(it.key(), state);
  }
  return c;
}

}  // namespace robustrl::diffcore
