#include <doctest.h>

#include <unistd.h>

#include <filesystem>
#include <string>
#include <vector>

#include "robustrl/common/io.hpp"
#include "robustrl/diffcore/checkpoint.hpp"
#include "robustrl/ppo/train.hpp"

using namespace robustrl;
using namespace robustrl::ppo;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("robustrl_train_" + std::to_string(::getpid()) + "_" +
            std::to_string(counter()++));
    fs::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
  static int& counter() {
    static int c = 0;
    return c;
  }
};

// Small but real: 2 lanes x 32 steps, 3 iterations on cartpole.
TrainConfig tiny_config() {
  TrainConfig cfg;
  cfg.env_name = "cartpole";
  cfg.hidden = {8, 8};
  cfg.lanes = 2;
  cfg.steps_per_lane = 32;
  cfg.total_transitions = 192;
  cfg.epochs = 2;
  cfg.minibatch_size = 16;
  cfg.seed = 7;
  return cfg;
}

}  // namespace

TEST_CASE("config validation rejects out-of-range settings") {
  CHECK_NOTHROW(validate_train_config(tiny_config()));
  auto reject = [](auto&& mutate) {
    TrainConfig cfg = tiny_config();
    mutate(cfg);
    CHECK_THROWS_AS(validate_train_config(cfg), InvalidInputError);
  };
  reject([](TrainConfig& c) { c.gamma = 1.0; });
  reject([](TrainConfig& c) { c.gamma = 0.0; });
  reject([](TrainConfig& c) { c.xi = 1.5; });
  reject([](TrainConfig& c) { c.eta = 0.0; });
  reject([](TrainConfig& c) { c.epsilon = -0.01; });
  reject([](TrainConfig& c) { c.lambda_lips = -1.0; });
  reject([](TrainConfig& c) { c.pgd_steps = 0; });
  reject([](TrainConfig& c) { c.actor_lr = 0.0; });
  reject([](TrainConfig& c) { c.critic_lr = -1e-4; });
  reject([](TrainConfig& c) { c.max_grad_norm = -0.5; });
  reject([](TrainConfig& c) { c.epochs = 0; });
  reject([](TrainConfig& c) { c.minibatch_size = 0; });
  reject([](TrainConfig& c) { c.lanes = 0; });
  reject([](TrainConfig& c) { c.steps_per_lane = 0; });
  reject([](TrainConfig& c) { c.total_transitions = 32; });  // below one batch
  reject([](TrainConfig& c) { c.hidden = {8, 0}; });
  reject([](TrainConfig& c) { c.perturb_mask = {1.0, 0.5, 1.0, 1.0}; });
  reject([](TrainConfig& c) { c.perturb_mask = {1.0, 1.0}; });  // wrong length
  reject([](TrainConfig& c) { c.entropy_bonus = -0.1; });
}

TEST_CASE("training runs, logs every iteration, and is reproducible") {
  const TrainConfig cfg = tiny_config();
  const TrainResult a = train(cfg);
  CHECK_FALSE(a.diverged);
  CHECK(a.iterations == 3);
  CHECK(a.transitions == 192);
  REQUIRE(a.log.size() == 3);
  for (std::size_t i = 0; i < a.log.size(); ++i) {
    CHECK(a.log[i].iteration == static_cast<long long>(i) + 1);
    CHECK(a.log[i].transitions == static_cast<long long>(i + 1) * 64);
  }

  const TrainResult b = train(cfg);
  CHECK(training_log_csv(a.log, cfg) == training_log_csv(b.log, cfg));
  CHECK(a.policy.mean_net.params == b.policy.mean_net.params);
  CHECK(a.policy.log_std == b.policy.log_std);
  CHECK(a.critic.params == b.critic.params);

  TrainConfig other = cfg;
  other.seed = 8;
  const TrainResult c = train(other);
  CHECK(a.policy.mean_net.params != c.policy.mean_net.params);
}

TEST_CASE("worker counts do not change the numbers") {
  TrainConfig cfg = tiny_config();
  cfg.solver = wcve::SolverKind::kPgd;
  cfg.epsilon = 0.01;
  cfg.lambda_lips = 1e-3;
  cfg.variant_label = "ppo-pgdlc";
  const TrainResult one = train(cfg);
  cfg.workers = 4;
  const TrainResult four = train(cfg);
  CHECK(training_log_csv(one.log, cfg) == training_log_csv(four.log, cfg));
  CHECK(one.policy.mean_net.params == four.policy.mean_net.params);
  CHECK(one.critic.params == four.critic.params);
}

TEST_CASE("zero radius and zero penalty reduce to the plain algorithm") {
  // The worst-case variant with epsilon 0 and lambda 0 must not just be
  // close to plain training, it must produce the identical byte stream.
  TrainConfig plain = tiny_config();
  const TrainResult base = train(plain);

  TrainConfig reduced = tiny_config();
  reduced.solver = wcve::SolverKind::kPgd;
  reduced.epsilon = 0.0;
  reduced.lambda_lips = 0.0;
  reduced.variant_label = "ppo-pgdlc";
  const TrainResult red = train(reduced);

  // Compare the numeric log through the plain config so the variant metadata
  // line does not mask a numeric difference.
  CHECK(training_log_csv(red.log, plain) == training_log_csv(base.log, plain));
  CHECK(red.policy.mean_net.params == base.policy.mean_net.params);
  CHECK(red.policy.log_std == base.policy.log_std);
  CHECK(red.critic.params == base.critic.params);
}

TEST_CASE("training writes its artifact set and reruns byte-identically") {
  TempDir dir_a;
  TrainConfig cfg = tiny_config();
  cfg.out_dir = dir_a.path;
  cfg.config_hash = "cafe0123cafe0123";
  const TrainResult a = train(cfg);
  CHECK_FALSE(a.diverged);
  CHECK(fs::exists(dir_a.path / "log.csv"));
  CHECK(fs::exists(dir_a.path / "timing.csv"));
  CHECK(fs::exists(dir_a.path / "last_good.ckpt"));
  CHECK(fs::exists(dir_a.path / "final.ckpt"));

  const std::string log = read_file(dir_a.path / "log.csv");
  CHECK(log.find("# config_hash=cafe0123cafe0123\n") != std::string::npos);
  CHECK(log.find("# variant=ppo\n") != std::string::npos);
  CHECK(log.find("iteration,transitions,mean_return,actor_loss,critic_pred_loss,"
                 "critic_lips_loss,mean_grad_norm_1,pgd_fallbacks\n") !=
        std::string::npos);
  // Timing stays out of the log so the log is comparable across machines.
  CHECK(log.find("wall_time") == std::string::npos);
  const std::string timing = read_file(dir_a.path / "timing.csv");
  CHECK(timing.find("iteration,wall_time_s\n") != std::string::npos);

  TempDir dir_b;
  cfg.out_dir = dir_b.path;
  (void)train(cfg);
  CHECK(read_file(dir_b.path / "log.csv") == log);
  CHECK(read_file(dir_b.path / "final.ckpt") == read_file(dir_a.path / "final.ckpt"));

  const diffcore::PolicyCheckpoint ckpt = load_checkpoint(dir_a.path / "final.ckpt");
  CHECK(ckpt.env_name == "cartpole");
  CHECK(ckpt.variant == "ppo");
  CHECK(ckpt.seed == 7);
  CHECK(ckpt.iteration == 3);
  CHECK(ckpt.transitions == 192);
  CHECK(ckpt.config_hash == "cafe0123cafe0123");
  CHECK(ckpt.actor_mean.params == a.policy.mean_net.params);
  CHECK(ckpt.critic.params == a.critic.params);
  CHECK(ckpt.obs_scale == std::vector<double>{2.4, 3.0, 0.2094395102393195, 3.0});
  CHECK(ckpt.rng_states.count("action_lane_0") == 1);
  CHECK(ckpt.rng_states.count("action_lane_1") == 1);
}

TEST_CASE("mean return carries over iterations with no finished episode") {
  // Pendulum episodes take 200 steps; with 64-step lanes the first three
  // iterations finish nothing and the fourth sees both lanes truncate.
  TrainConfig cfg = tiny_config();
  cfg.env_name = "pendulum";
  cfg.lanes = 2;
  cfg.steps_per_lane = 64;
  cfg.total_transitions = 896;  // 7 iterations of 128
  const TrainResult r = train(cfg);
  REQUIRE(r.log.size() == 7);
  CHECK(r.log[0].episodes_completed == 0);
  CHECK(r.log[3].episodes_completed == 2);
  CHECK(r.log[0].mean_return == 0.0);
  CHECK(r.log[1].mean_return == 0.0);
  CHECK(r.log[2].mean_return == 0.0);
  CHECK(r.log[3].mean_return < 0.0);  // pendulum returns are strictly negative
  CHECK(r.log[4].mean_return == r.log[3].mean_return);  // carried forward
  CHECK(r.log[5].mean_return == r.log[3].mean_return);
}

TEST_CASE("a divergent run stops, flags, and keeps its last good checkpoint") {
  TempDir dir;
  TrainConfig cfg = tiny_config();
  // One update per iteration with an absurd learning rate: the first update
  // sends the parameters to ~1e155, the next iteration's critic residuals
  // then overflow the backward pass and the optimizer raises.
  cfg.epochs = 1;
  cfg.minibatch_size = 64;
  cfg.actor_lr = 1e155;
  cfg.critic_lr = 1e155;
  cfg.max_grad_norm = 0.0;  // clipping off, nothing rescues the blow-up
  cfg.total_transitions = 64 * 40;
  cfg.out_dir = dir.path;
  const TrainResult r = train(cfg);
  CHECK(r.diverged);
  CHECK_FALSE(r.divergence_reason.empty());
  CHECK(r.iterations >= 1);
  CHECK(r.iterations < 40);
  CHECK(fs::exists(dir.path / "log.csv"));
  CHECK_FALSE(fs::exists(dir.path / "final.ckpt"));
  const auto ckpt = load_checkpoint(dir.path / "last_good.ckpt");
  CHECK(ckpt.iteration == r.iterations);
  const std::string log = read_file(dir.path / "log.csv");
  CHECK(std::count(log.begin(), log.end(), '\n') ==
        5 + static_cast<long long>(r.iterations));  // 4 metadata + header + rows
}

TEST_CASE("gradient clipping changes updates only when it binds") {
  TrainConfig cfg = tiny_config();
  cfg.max_grad_norm = 0.5;
  const TrainResult clipped = train(cfg);
  cfg.max_grad_norm = 1e9;  // effectively unclipped
  const TrainResult loose = train(cfg);
  // Early cartpole gradients exceed 0.5, so the two runs must part ways.
  CHECK(clipped.policy.mean_net.params != loose.policy.mean_net.params);

  cfg.max_grad_norm = 0.0;  // disabled entirely
  const TrainResult off = train(cfg);
  CHECK(off.policy.mean_net.params == loose.policy.mean_net.params);
}

TEST_CASE("the iteration callback sees every row in order") {
  TrainConfig cfg = tiny_config();
  std::vector<long long> seen;
  cfg.on_iteration = [&](const IterationStats& st) { seen.push_back(st.iteration); };
  (void)train(cfg);
  CHECK(seen == std::vector<long long>{1, 2, 3});
}
