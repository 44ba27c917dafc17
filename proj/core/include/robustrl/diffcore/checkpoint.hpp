#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "robustrl/diffcore/adam.hpp"
#include "robustrl/diffcore/mlp.hpp"

namespace robustrl::diffcore {

// Everything needed to resume or evaluate a training run: both networks,
// optimizer moments, the positions of the random streams, and enough
// metadata to rebuild the environment the policy was trained on. Stored as
// JSON; doubles are emitted in shortest round-trip form so save/load is
// exact. format_version gates loading.
struct PolicyCheckpoint {
  int format_version = 0;
  std::string library_version;
  std::string config_hash;

  std::string env_name;
  nlohmann::json env_overrides = nlohmann::json::object();
  bool normalize_obs = true;
  std::vector<double> obs_scale;

  std::string variant;
  double epsilon = 0.0;
  double lambda_lips = 0.0;
  std::uint64_t seed = 0;
  std::int64_t iteration = 0;
  std::int64_t transitions = 0;

  MlpNetwork actor_mean;
  std::vector<double> log_std;
  MlpNetwork critic;
  AdamState adam_actor;
  AdamState adam_critic;

  std::map<std::string, std::array<std::uint64_t, 4>> rng_states;
};

nlohmann::json network_to_json(const MlpNetwork& net);
MlpNetwork network_from_json(const nlohmann::json& j);

nlohmann::json adam_to_json(const AdamState& s);
AdamState adam_from_json(const nlohmann::json& j);

void save_checkpoint(const std::filesystem::path& path, const PolicyCheckpoint& ckpt);
PolicyCheckpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace robustrl::diffcore
