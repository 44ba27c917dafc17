#include <doctest.h>

#include <cmath>
#include <vector>

#include "robustrl/common/rng.hpp"
#include "robustrl/diffcore/mlp.hpp"
#include "robustrl/diffcore/tape.hpp"

using namespace robustrl;
using namespace robustrl::diffcore;

namespace {

// Independent forward pass: plain nested loops straight off the layout
// description, no shared code with the library implementation.
std::vector<double> naive_forward(const MlpNetwork& net, std::span<const double> input) {
  std::vector<double> cur(input.begin(), input.end());
  for (int layer = 0; layer < net.layer_count(); ++layer) {
    const int rows = net.layer_sizes[layer + 1];
    const int cols = net.layer_sizes[layer];
    const double* w = net.params.data() + net.weight_offset(layer);
    const double* b = net.params.data() + net.bias_offset(layer);
    std::vector<double> next(rows);
    for (int r = 0; r < rows; ++r) {
      double acc = b[r];
      for (int c = 0; c < cols; ++c) acc += w[r * cols + c] * cur[c];
      next[r] = acc;
    }
    if (layer + 1 < net.layer_count()) {
      for (double& v : next) {
        v = net.activation == Activation::kTanh ? std::tanh(v) : std::max(v, 0.0);
      }
    }
    cur = std::move(next);
  }
  return cur;
}

std::vector<double> random_input(int dim, Rng& rng) {
  std::vector<double> x(dim);
  for (double& v : x) v = rng.uniform(-1.5, 1.5);
  return x;
}

}  // namespace

TEST_CASE("forward pass matches a naive matmul oracle") {
  Rng rng(101);
  const std::vector<std::vector<int>> shapes = {
      {3, 1}, {2, 5, 1}, {4, 8, 8, 2}, {1, 3, 3, 3, 1}};
  for (const auto& sizes : shapes) {
    for (Activation act : {Activation::kTanh, Activation::kRelu}) {
      MlpNetwork net = MlpNetwork::create(sizes, act, rng);
      MlpScratch scratch;
      for (int trial = 0; trial < 10; ++trial) {
        const auto x = random_input(net.input_dim(), rng);
        const auto got = mlp_forward(net, x, scratch);
        const auto want = naive_forward(net, x);
        REQUIRE(got.size() == want.size());
        for (std::size_t i = 0; i < got.size(); ++i) {
          CHECK(got[i] == doctest::Approx(want[i]).epsilon(1e-14));
        }
      }
    }
  }
}

TEST_CASE("initialization bounds and reproducibility") {
  Rng rng(7);
  MlpNetwork net = MlpNetwork::create({6, 16, 16, 1}, Activation::kTanh, rng);
  CHECK(net.param_count() == net.params.size());
  CHECK(net.param_count() == (6 * 16 + 16) + (16 * 16 + 16) + (16 * 1 + 1));
  for (int layer = 0; layer < net.layer_count(); ++layer) {
    const int rows = net.layer_sizes[layer + 1];
    const int cols = net.layer_sizes[layer];
    const double bound = 1.0 / std::sqrt(static_cast<double>(cols));
    const double* w = net.params.data() + net.weight_offset(layer);
    for (int i = 0; i < rows * cols; ++i) {
      CHECK(std::abs(w[i]) <= bound);
    }
    const double* b = net.params.data() + net.bias_offset(layer);
    for (int r = 0; r < rows; ++r) CHECK(b[r] == 0.0);
  }

  Rng again(7);
  MlpNetwork twin = MlpNetwork::create({6, 16, 16, 1}, Activation::kTanh, again);
  CHECK(net.params == twin.params);

  Rng other(8);
  MlpNetwork differ = MlpNetwork::create({6, 16, 16, 1}, Activation::kTanh, other);
  CHECK(net.params != differ.params);
}

TEST_CASE("input gradient matches finite differences") {
  Rng rng(55);
  for (int trial = 0; trial < 20; ++trial) {
    MlpNetwork net = MlpNetwork::create({4, 12, 12, 1}, Activation::kTanh, rng);
    MlpScratch scratch;
    auto x = random_input(4, rng);
    std::vector<double> grad(4);
    const double v = mlp_value_and_input_gradient(net, x, scratch, grad);
    CHECK(v == doctest::Approx(naive_forward(net, x)[0]).epsilon(1e-14));

    const double h = 1e-6;
    for (int i = 0; i < 4; ++i) {
      const double keep = x[i];
      x[i] = keep + h;
      const double up = naive_forward(net, x)[0];
      x[i] = keep - h;
      const double dn = naive_forward(net, x)[0];
      x[i] = keep;
      const double fd = (up - dn) / (2.0 * h);
      CHECK(grad[i] == doctest::Approx(fd).epsilon(1e-6));
    }

    const auto convenience = mlp_input_gradient(net, x);
    CHECK(convenience == grad);
  }
}

TEST_CASE("jacobian matches finite differences for vector outputs") {
  Rng rng(56);
  MlpNetwork net = MlpNetwork::create({3, 10, 2}, Activation::kTanh, rng);
  MlpScratch scratch;
  auto x = random_input(3, rng);
  const auto jac = mlp_jacobian(net, x, scratch);
  REQUIRE(jac.size() == 2u * 3u);
  const double h = 1e-6;
  for (int c = 0; c < 3; ++c) {
    const double keep = x[c];
    x[c] = keep + h;
    const auto up = naive_forward(net, x);
    x[c] = keep - h;
    const auto dn = naive_forward(net, x);
    x[c] = keep;
    for (int r = 0; r < 2; ++r) {
      const double fd = (up[r] - dn[r]) / (2.0 * h);
      CHECK(jac[static_cast<std::size_t>(r) * 3 + c] ==
            doctest::Approx(fd).epsilon(1e-6));
    }
  }

  // Scalar network: jacobian row equals the input gradient.
  MlpNetwork scalar = MlpNetwork::create({3, 8, 1}, Activation::kTanh, rng);
  const auto row = mlp_jacobian(scalar, x, scratch);
  CHECK(row == mlp_input_gradient(scalar, x));
}

TEST_CASE("parameter vjp matches tape gradients and accumulates") {
  Rng rng(57);
  for (Activation act : {Activation::kTanh, Activation::kRelu}) {
    MlpNetwork net = MlpNetwork::create({3, 7, 2}, act, rng);
    MlpScratch scratch;
    const auto x = random_input(3, rng);
    const std::vector<double> ybar = {rng.normal(), rng.normal()};

    std::vector<double> got(net.param_count(), 0.0);
    std::vector<double> xgrad(3);
    mlp_output_vjp(net, x, ybar, scratch, got, xgrad);

    Tape tape;
    const auto pnodes = make_param_nodes(tape, net, true);
    std::vector<Tape::NodeId> xnodes;
    for (double v : x) xnodes.push_back(tape.var(v));
    const auto out = mlp_graph_forward(tape, net, pnodes, xnodes);
    REQUIRE(out.size() == 2);
    auto loss = tape.constant(0.0);
    for (int r = 0; r < 2; ++r) {
      loss = tape.add(loss, tape.mul(tape.constant(ybar[r]), out[r]));
    }
    const auto want = tape.gradient(loss, pnodes);
    for (std::size_t i = 0; i < got.size(); ++i) {
      CHECK(got[i] == doctest::Approx(want[i]).epsilon(1e-12));
    }
    const auto want_x = tape.gradient(loss, xnodes);
    for (int i = 0; i < 3; ++i) {
      CHECK(xgrad[i] == doctest::Approx(want_x[i]).epsilon(1e-12));
    }

    // Second call accumulates rather than overwriting.
    mlp_output_vjp(net, x, ybar, scratch, got);
    for (std::size_t i = 0; i < got.size(); ++i) {
      CHECK(got[i] == doctest::Approx(2.0 * want[i]).epsilon(1e-12));
    }
  }
}

TEST_CASE("input-gradient vjp matches finite differences over parameters") {
  // d(gbar . grad_x f)/d(params), the double-backward path behind the
  // smoothness penalty. FD perturbs each parameter and re-evaluates the
  // analytic input gradient.
  Rng rng(58);
  for (Activation act : {Activation::kTanh, Activation::kRelu}) {
    MlpNetwork net = MlpNetwork::create({3, 6, 6, 1}, act, rng);
    MlpScratch scratch;
    const auto x = random_input(3, rng);
    const std::vector<double> gbar = {rng.normal(), rng.normal(), rng.normal()};

    std::vector<double> got(net.param_count(), 0.0);
    mlp_input_gradient_vjp(net, x, gbar, scratch, got);

    const double h = 1e-6;
    double worst = 0.0;
    for (std::size_t p = 0; p < net.param_count(); ++p) {
      const double keep = net.params[p];
      const auto dot = [&](double shift) {
        net.params[p] = keep + shift;
        const auto g = mlp_input_gradient(net, x);
        double acc = 0.0;
        for (int i = 0; i < 3; ++i) acc += gbar[static_cast<std::size_t>(i)] * g[i];
        return acc;
      };
      const double fd = (dot(h) - dot(-h)) / (2.0 * h);
      net.params[p] = keep;
      const double scale = std::max(1.0, std::abs(fd));
      worst = std::max(worst, std::abs(got[p] - fd) / scale);
    }
    CHECK(worst < 1e-4);
  }
}

TEST_CASE("graph forward mirrors the analytic forward bit for bit") {
  Rng rng(59);
  for (Activation act : {Activation::kTanh, Activation::kRelu}) {
    MlpNetwork net = MlpNetwork::create({5, 9, 9, 3}, act, rng);
    const auto x = random_input(5, rng);
    Tape tape;
    const auto pnodes = make_param_nodes(tape, net, false);
    std::vector<Tape::NodeId> xnodes;
    for (double v : x) xnodes.push_back(tape.var(v));
    const auto out = mlp_graph_forward(tape, net, pnodes, xnodes);
    const auto analytic = mlp_forward(net, x);
    REQUIRE(out.size() == analytic.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
      CHECK(tape.value(out[i]) == analytic[i]);
    }
  }
}

TEST_CASE("activation names round-trip and validate") {
  CHECK(activation_from_name("tanh") == Activation::kTanh);
  CHECK(activation_from_name("relu") == Activation::kRelu);
  CHECK(activation_name(Activation::kTanh) == std::string("tanh"));
  CHECK(activation_name(Activation::kRelu) == std::string("relu"));
  CHECK_THROWS_AS(activation_from_name("gelu"), ConfigError);
}

TEST_CASE("validate rejects malformed networks") {
  Rng rng(3);
  MlpNetwork net = MlpNetwork::create({2, 4, 1}, Activation::kTanh, rng);
  CHECK_NOTHROW(net.validate());
  MlpNetwork bad = net;
  bad.params.pop_back();
  CHECK_THROWS_AS(bad.validate(), InvalidInputError);
  MlpNetwork tiny;
  tiny.layer_sizes = {3};
  CHECK_THROWS_AS(tiny.validate(), InvalidInputError);
}
