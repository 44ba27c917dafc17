#include <doctest.h>

#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include "robustrl/common/rng.hpp"
#include "robustrl/ppo/losses.hpp"

using namespace robustrl;
using namespace robustrl::ppo;

namespace {

struct ActorFixture {
  GaussianPolicy policy;
  std::vector<double> obs;
  std::vector<double> actions;
  std::vector<double> old_log_probs;
  std::vector<double> advantages;
  std::vector<std::size_t> indices;
  int obs_dim;
  int act_dim;

  ActorBatch batch() const {
    return ActorBatch{obs, actions, old_log_probs, advantages, indices,
                      obs_dim, act_dim};
  }
};

ActorFixture make_actor_fixture(std::uint64_t seed, int rows, int obs_dim = 3,
                                int act_dim = 2, double stale = 0.1) {
  Rng rng(seed);
  ActorFixture f{GaussianPolicy(), {}, {}, {}, {}, {}, obs_dim, act_dim};
  const std::vector<int> hidden = {6, 6};
  f.policy = GaussianPolicy::create(obs_dim, act_dim, hidden,
                                    diffcore::Activation::kTanh, -0.3, rng);
  diffcore::MlpScratch scratch;
  for (int r = 0; r < rows; ++r) {
    std::vector<double> o(static_cast<std::size_t>(obs_dim));
    for (double& v : o) v = rng.uniform(-1.0, 1.0);
    std::vector<double> a(static_cast<std::size_t>(act_dim));
    const double logp = f.policy.sample(o, scratch, rng, a);
    f.obs.insert(f.obs.end(), o.begin(), o.end());
    f.actions.insert(f.actions.end(), a.begin(), a.end());
    // Shift the stored log-probability so ratios spread away from 1 and both
    // clip edges get exercised.
    f.old_log_probs.push_back(logp + rng.uniform(-stale, stale));
    f.advantages.push_back(rng.normal());
    f.indices.push_back(static_cast<std::size_t>(r));
  }
  return f;
}

struct CriticFixture {
  diffcore::MlpNetwork critic;
  std::vector<double> obs;
  std::vector<double> targets;
  std::vector<std::size_t> indices;
  int obs_dim;

  CriticBatch batch() const { return CriticBatch{obs, targets, indices, obs_dim}; }
};

CriticFixture make_critic_fixture(std::uint64_t seed, int rows, int obs_dim = 3) {
  Rng rng(seed);
  CriticFixture f{diffcore::MlpNetwork::create({obs_dim, 6, 6, 1},
                                               diffcore::Activation::kTanh, rng),
                  {},
                  {},
                  {},
                  obs_dim};
  for (int r = 0; r < rows; ++r) {
    for (int d = 0; d < obs_dim; ++d) f.obs.push_back(rng.uniform(-1.0, 1.0));
    f.targets.push_back(rng.normal());
    f.indices.push_back(static_cast<std::size_t>(r));
  }
  return f;
}

double actor_fd_loss(GaussianPolicy policy, const ActorFixture& f, double eta,
                     double entropy_bonus) {
  // Plain re-evaluation of the objective definition, used as the FD oracle.
  diffcore::MlpScratch scratch;
  double acc = 0.0;
  long long used = 0;
  for (std::size_t idx : f.indices) {
    const auto obs = std::span<const double>(f.obs).subspan(
        idx * static_cast<std::size_t>(f.obs_dim), static_cast<std::size_t>(f.obs_dim));
    const auto act = std::span<const double>(f.actions).subspan(
        idx * static_cast<std::size_t>(f.act_dim), static_cast<std::size_t>(f.act_dim));
    const double logp = policy.log_prob(obs, act, scratch);
    const double ratio = std::exp(logp - f.old_log_probs[idx]);
    if (!std::isfinite(ratio)) continue;
    const double adv = f.advantages[idx];
    const double clipped = std::clamp(ratio, 1.0 - eta, 1.0 + eta);
    acc += std::min(ratio * adv, clipped * adv);
    ++used;
  }
  double loss = used > 0 ? -acc / static_cast<double>(used) : 0.0;
  if (entropy_bonus > 0.0) {
    // Diagonal Gaussian entropy depends only on log_std.
    double ent = 0.0;
    for (double ls : policy.log_std) ent += ls + 0.5 * (1.0 + 1.8378770664093453);
    loss -= entropy_bonus * ent;
  }
  return loss;
}

double critic_fd_loss(diffcore::MlpNetwork critic, const CriticFixture& f,
                      double lambda) {
  diffcore::MlpScratch scratch;
  double pred = 0.0;
  double pen = 0.0;
  std::vector<double> grad(static_cast<std::size_t>(f.obs_dim));
  for (std::size_t idx : f.indices) {
    const auto obs = std::span<const double>(f.obs).subspan(
        idx * static_cast<std::size_t>(f.obs_dim), static_cast<std::size_t>(f.obs_dim));
    const double v = diffcore::mlp_value_and_input_gradient(critic, obs, scratch, grad);
    const double r = v - f.targets[idx];
    pred += 0.5 * r * r;
    double n1 = 0.0;
    for (double g : grad) n1 += std::abs(g);
    pen += n1 * n1;
  }
  const auto n = static_cast<double>(f.indices.size());
  return pred / n + lambda * pen / n;
}

}  // namespace

TEST_CASE("analytic actor gradient matches the tape reference bit-close") {
  for (std::uint64_t seed : {11u, 12u, 13u}) {
    CAPTURE(seed);
    const ActorFixture f = make_actor_fixture(seed, 24);
    diffcore::MlpScratch scratch;
    std::vector<double> fast_mean(f.policy.mean_net.param_count());
    std::vector<double> fast_ls(2);
    const ActorLossStats fast = actor_loss_and_grad(f.policy, f.batch(), 0.2, 0.0,
                                                    scratch, fast_mean, fast_ls);

    std::vector<double> ref_mean;
    std::vector<double> ref_ls;
    const ActorLossStats ref =
        actor_loss_via_tape(f.policy, f.batch(), 0.2, 0.0, ref_mean, ref_ls);

    CHECK(fast.loss == doctest::Approx(ref.loss).epsilon(1e-12));
    CHECK(fast.clip_fraction == ref.clip_fraction);
    CHECK(fast.skipped == ref.skipped);
    REQUIRE(ref_mean.size() == fast_mean.size());
    for (std::size_t i = 0; i < fast_mean.size(); ++i) {
      CHECK(fast_mean[i] == doctest::Approx(ref_mean[i]).epsilon(1e-10));
    }
    for (std::size_t i = 0; i < fast_ls.size(); ++i) {
      CHECK(fast_ls[i] == doctest::Approx(ref_ls[i]).epsilon(1e-10));
    }
  }
}

TEST_CASE("actor gradient matches finite differences") {
  const ActorFixture f = make_actor_fixture(21, 16);
  diffcore::MlpScratch scratch;
  std::vector<double> mean_grad(f.policy.mean_net.param_count());
  std::vector<double> ls_grad(2);
  const ActorLossStats stats =
      actor_loss_and_grad(f.policy, f.batch(), 0.2, 0.0, scratch, mean_grad, ls_grad);
  CHECK(stats.loss == doctest::Approx(actor_fd_loss(f.policy, f, 0.2, 0.0))
                          .epsilon(1e-12));

  const double h = 1e-6;
  double worst = 0.0;
  for (std::size_t p = 0; p < mean_grad.size(); ++p) {
    GaussianPolicy up = f.policy;
    up.mean_net.params[p] += h;
    GaussianPolicy dn = f.policy;
    dn.mean_net.params[p] -= h;
    const double fd =
        (actor_fd_loss(up, f, 0.2, 0.0) - actor_fd_loss(dn, f, 0.2, 0.0)) / (2.0 * h);
    worst = std::max(worst, std::abs(mean_grad[p] - fd) / std::max(1.0, std::abs(fd)));
  }
  // The clip kinks make a few FD probes straddle a boundary; stay loose.
  CHECK(worst < 1e-4);

  for (std::size_t p = 0; p < ls_grad.size(); ++p) {
    GaussianPolicy up = f.policy;
    up.log_std[p] += h;
    GaussianPolicy dn = f.policy;
    dn.log_std[p] -= h;
    const double fd =
        (actor_fd_loss(up, f, 0.2, 0.0) - actor_fd_loss(dn, f, 0.2, 0.0)) / (2.0 * h);
    CHECK(ls_grad[p] == doctest::Approx(fd).epsilon(1e-4));
  }
}

TEST_CASE("clipping activates on stale ratios and flattens their gradient") {
  // One row, fixed advantage: push the stored log-probability far down so the
  // ratio sits above 1 + eta. With positive advantage the clipped branch is
  // active and constant, so the whole gradient vanishes.
  ActorFixture f = make_actor_fixture(31, 1);
  f.advantages[0] = 1.0;
  f.old_log_probs[0] -= 1.0;  // ratio e^1 far above the clip window
  diffcore::MlpScratch scratch;
  std::vector<double> mean_grad(f.policy.mean_net.param_count());
  std::vector<double> ls_grad(2);
  const ActorLossStats stats =
      actor_loss_and_grad(f.policy, f.batch(), 0.2, 0.0, scratch, mean_grad, ls_grad);
  CHECK(stats.clip_fraction == 1.0);
  CHECK(stats.loss == doctest::Approx(-(1.0 + 0.2)).epsilon(1e-12));
  for (double g : mean_grad) CHECK(g == 0.0);
  for (double g : ls_grad) CHECK(g == 0.0);

  // Negative advantage, ratio below 1 - eta: same flattening on the low side.
  f.advantages[0] = -1.0;
  f.old_log_probs[0] += 2.0;  // ratio e^-1 below the window
  const ActorLossStats low =
      actor_loss_and_grad(f.policy, f.batch(), 0.2, 0.0, scratch, mean_grad, ls_grad);
  CHECK(low.clip_fraction == 1.0);
  CHECK(low.loss == doctest::Approx(0.8).epsilon(1e-12));
  for (double g : mean_grad) CHECK(g == 0.0);
}

TEST_CASE("unclipped fresh ratios leave the surrogate live") {
  ActorFixture f = make_actor_fixture(32, 1, 3, 2, 0.0);  // old logp exact
  diffcore::MlpScratch scratch;
  std::vector<double> mean_grad(f.policy.mean_net.param_count());
  std::vector<double> ls_grad(2);
  const ActorLossStats stats =
      actor_loss_and_grad(f.policy, f.batch(), 0.2, 0.0, scratch, mean_grad, ls_grad);
  CHECK(stats.clip_fraction == 0.0);
  CHECK(stats.loss == doctest::Approx(-f.advantages[0]).epsilon(1e-12));
  double norm = 0.0;
  for (double g : mean_grad) norm += std::abs(g);
  CHECK(norm > 0.0);
}

TEST_CASE("non-finite ratios are skipped and counted") {
  ActorFixture f = make_actor_fixture(33, 4);
  f.old_log_probs[1] = -std::numeric_limits<double>::infinity();  // ratio overflows
  diffcore::MlpScratch scratch;
  std::vector<double> mean_grad(f.policy.mean_net.param_count());
  std::vector<double> ls_grad(2);
  const ActorLossStats stats =
      actor_loss_and_grad(f.policy, f.batch(), 0.2, 0.0, scratch, mean_grad, ls_grad);
  CHECK(stats.skipped == 1);
  for (double g : mean_grad) CHECK(std::isfinite(g));

  // The surviving rows behave as if the bad row were never there.
  ActorFixture clean = f;
  clean.indices = {0, 2, 3};
  std::vector<double> clean_mean(f.policy.mean_net.param_count());
  std::vector<double> clean_ls(2);
  const ActorLossStats ref = actor_loss_and_grad(clean.policy, clean.batch(), 0.2, 0.0,
                                                 scratch, clean_mean, clean_ls);
  CHECK(stats.loss == ref.loss);
  CHECK(clean_mean == mean_grad);
  CHECK(clean_ls == ls_grad);
}

TEST_CASE("entropy bonus shifts only the log-std gradient") {
  const ActorFixture f = make_actor_fixture(34, 8);
  diffcore::MlpScratch scratch;
  std::vector<double> mean_a(f.policy.mean_net.param_count());
  std::vector<double> ls_a(2);
  const ActorLossStats plain =
      actor_loss_and_grad(f.policy, f.batch(), 0.2, 0.0, scratch, mean_a, ls_a);
  std::vector<double> mean_b(f.policy.mean_net.param_count());
  std::vector<double> ls_b(2);
  const double beta = 0.01;
  const ActorLossStats bonus =
      actor_loss_and_grad(f.policy, f.batch(), 0.2, beta, scratch, mean_b, ls_b);

  // Entropy of a diagonal Gaussian: sum(log_std) + const, so the bonus moves
  // the loss by -beta * entropy and each log_std gradient by exactly -beta.
  double ent = 0.0;
  for (double ls : f.policy.log_std) ent += ls + 0.5 * (1.0 + 1.8378770664093453);
  CHECK(bonus.loss == doctest::Approx(plain.loss - beta * ent).epsilon(1e-12));
  CHECK(mean_b == mean_a);
  for (std::size_t i = 0; i < ls_a.size(); ++i) {
    CHECK(ls_b[i] == doctest::Approx(ls_a[i] - beta).epsilon(1e-12));
  }

  std::vector<double> ref_mean;
  std::vector<double> ref_ls;
  const ActorLossStats ref =
      actor_loss_via_tape(f.policy, f.batch(), 0.2, beta, ref_mean, ref_ls);
  CHECK(bonus.loss == doctest::Approx(ref.loss).epsilon(1e-12));
  for (std::size_t i = 0; i < ls_b.size(); ++i) {
    CHECK(ls_b[i] == doctest::Approx(ref_ls[i]).epsilon(1e-10));
  }
}

TEST_CASE("analytic critic gradient matches the tape reference") {
  for (double lambda : {0.0, 1e-3, 0.1}) {
    CAPTURE(lambda);
    const CriticFixture f = make_critic_fixture(41, 20);
    diffcore::MlpScratch scratch;
    std::vector<double> fast_grad(f.critic.param_count());
    const CriticLossStats fast =
        critic_loss_and_grad(f.critic, f.batch(), lambda, scratch, fast_grad);

    std::vector<double> ref_grad;
    const CriticLossStats ref =
        critic_loss_via_tape(f.critic, f.batch(), lambda, ref_grad);

    CHECK(fast.pred_loss == doctest::Approx(ref.pred_loss).epsilon(1e-12));
    CHECK(fast.penalty == doctest::Approx(ref.penalty).epsilon(1e-12));
    CHECK(fast.mean_grad_norm1 == doctest::Approx(ref.mean_grad_norm1).epsilon(1e-12));
    REQUIRE(ref_grad.size() == fast_grad.size());
    for (std::size_t i = 0; i < fast_grad.size(); ++i) {
      CHECK(fast_grad[i] == doctest::Approx(ref_grad[i]).epsilon(1e-10));
    }
  }
}

TEST_CASE("critic gradient matches finite differences including the penalty") {
  const CriticFixture f = make_critic_fixture(42, 12);
  const double lambda = 5e-3;
  diffcore::MlpScratch scratch;
  std::vector<double> grad(f.critic.param_count());
  const CriticLossStats stats =
      critic_loss_and_grad(f.critic, f.batch(), lambda, scratch, grad);
  CHECK(stats.pred_loss + stats.penalty ==
        doctest::Approx(critic_fd_loss(f.critic, f, lambda)).epsilon(1e-12));

  const double h = 1e-6;
  double worst = 0.0;
  for (std::size_t p = 0; p < grad.size(); ++p) {
    diffcore::MlpNetwork up = f.critic;
    up.params[p] += h;
    diffcore::MlpNetwork dn = f.critic;
    dn.params[p] -= h;
    const double fd = (critic_fd_loss(up, f, lambda) - critic_fd_loss(dn, f, lambda)) /
                      (2.0 * h);
    worst = std::max(worst, std::abs(grad[p] - fd) / std::max(1.0, std::abs(fd)));
  }
  CHECK(worst < 1e-4);
}

TEST_CASE("a linear critic pins the penalty closed form") {
  // V(s) = w . s + b: the input gradient is w everywhere, so the penalty is
  // exactly lambda * (sum |w_i|)^2 for every row and the prediction term is
  // ordinary least squares.
  CriticFixture f = make_critic_fixture(43, 10, 2);
  Rng rng(44);
  f.critic = diffcore::MlpNetwork::create({2, 1}, diffcore::Activation::kTanh, rng);
  f.critic.params = {0.7, -0.4, 0.2};  // w = (0.7, -0.4), b = 0.2
  const double lambda = 0.01;
  diffcore::MlpScratch scratch;
  std::vector<double> grad(3);
  const CriticLossStats stats =
      critic_loss_and_grad(f.critic, f.batch(), lambda, scratch, grad);

  const double n1 = 0.7 + 0.4;
  CHECK(stats.penalty == doctest::Approx(lambda * n1 * n1).epsilon(1e-12));
  CHECK(stats.mean_grad_norm1 == doctest::Approx(n1).epsilon(1e-12));

  double pred = 0.0;
  std::vector<double> want_grad(3, 0.0);
  for (std::size_t r = 0; r < f.indices.size(); ++r) {
    const double v = 0.7 * f.obs[r * 2] - 0.4 * f.obs[r * 2 + 1] + 0.2;
    const double res = v - f.targets[r];
    pred += 0.5 * res * res;
    want_grad[0] += res * f.obs[r * 2];
    want_grad[1] += res * f.obs[r * 2 + 1];
    want_grad[2] += res;
  }
  const auto n = static_cast<double>(f.indices.size());
  CHECK(stats.pred_loss == doctest::Approx(pred / n).epsilon(1e-12));
  // Penalty gradient for linear V: d/dw_i lambda (||w||_1)^2 = 2 lambda
  // ||w||_1 sign(w_i); the bias does not appear.
  want_grad[0] = want_grad[0] / n + 2.0 * lambda * n1 * 1.0;
  want_grad[1] = want_grad[1] / n + 2.0 * lambda * n1 * -1.0;
  want_grad[2] = want_grad[2] / n;
  for (int i = 0; i < 3; ++i) {
    CHECK(grad[static_cast<std::size_t>(i)] ==
          doctest::Approx(want_grad[static_cast<std::size_t>(i)]).epsilon(1e-12));
  }
}

TEST_CASE("zero lambda skips the penalty entirely") {
  const CriticFixture f = make_critic_fixture(45, 8);
  diffcore::MlpScratch scratch;
  std::vector<double> grad(f.critic.param_count());
  const CriticLossStats stats =
      critic_loss_and_grad(f.critic, f.batch(), 0.0, scratch, grad);
  CHECK(stats.penalty == 0.0);
  CHECK(stats.pred_loss > 0.0);
}

TEST_CASE("minibatch indices select rows without copying assumptions") {
  const CriticFixture f = make_critic_fixture(46, 10);
  CriticFixture sub = f;
  sub.indices = {7, 2, 9};
  diffcore::MlpScratch scratch;
  std::vector<double> grad_sub(f.critic.param_count());
  const CriticLossStats stats_sub =
      critic_loss_and_grad(f.critic, sub.batch(), 1e-3, scratch, grad_sub);

  // Rebuild the same three rows as a dense fixture; results must agree.
  CriticFixture dense = f;
  dense.obs.clear();
  dense.targets.clear();
  dense.indices.clear();
  for (std::size_t src : {std::size_t{7}, std::size_t{2}, std::size_t{9}}) {
    for (int d = 0; d < f.obs_dim; ++d) {
      dense.obs.push_back(f.obs[src * static_cast<std::size_t>(f.obs_dim) +
                                static_cast<std::size_t>(d)]);
    }
    dense.targets.push_back(f.targets[src]);
    dense.indices.push_back(dense.indices.size());
  }
  std::vector<double> grad_dense(f.critic.param_count());
  const CriticLossStats stats_dense =
      critic_loss_and_grad(f.critic, dense.batch(), 1e-3, scratch, grad_dense);
  CHECK(stats_sub.pred_loss == stats_dense.pred_loss);
  CHECK(stats_sub.penalty == stats_dense.penalty);
  CHECK(grad_sub == grad_dense);
}
