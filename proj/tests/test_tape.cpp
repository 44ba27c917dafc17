#include <doctest.h>

#include <cmath>
#include <functional>
#include <vector>

#include "robustrl/common/rng.hpp"
#include "robustrl/diffcore/tape.hpp"

using namespace robustrl;
using diffcore::Tape;

namespace {

// Central finite differences over leaf variables; the oracle every gradient
// test is judged against.
std::vector<double> fd_gradient(const std::function<double(std::span<const double>)>& f,
                                std::span<const double> x, double h = 1e-6) {
  std::vector<double> grad(x.size());
  std::vector<double> probe(x.begin(), x.end());
  for (std::size_t i = 0; i < x.size(); ++i) {
    probe[i] = x[i] + h;
    const double up = f(probe);
    probe[i] = x[i] - h;
    const double dn = f(probe);
    probe[i] = x[i];
    grad[i] = (up - dn) / (2.0 * h);
  }
  return grad;
}

double max_rel_err(std::span<const double> got, std::span<const double> want) {
  double worst = 0.0;
  for (std::size_t i = 0; i < got.size(); ++i) {
    const double scale = std::max(1.0, std::abs(want[i]));
    worst = std::max(worst, std::abs(got[i] - want[i]) / scale);
  }
  return worst;
}

}  // namespace

TEST_CASE("every primitive gradient matches finite differences") {
  struct Case {
    const char* name;
    std::function<double(std::span<const double>)> f;
    std::function<Tape::NodeId(Tape&, std::span<const Tape::NodeId>)> build;
    std::vector<double> at;
  };
  const std::vector<Case> cases = {
      {"add", [](auto x) { return x[0] + x[1]; },
       [](Tape& t, auto v) { return t.add(v[0], v[1]); }, {0.3, -1.2}},
      {"sub", [](auto x) { return x[0] - x[1]; },
       [](Tape& t, auto v) { return t.sub(v[0], v[1]); }, {0.7, 2.0}},
      {"mul", [](auto x) { return x[0] * x[1]; },
       [](Tape& t, auto v) { return t.mul(v[0], v[1]); }, {1.4, -0.6}},
      {"neg", [](auto x) { return -x[0]; },
       [](Tape& t, auto v) { return t.neg(v[0]); }, {0.9}},
      {"div", [](auto x) { return x[0] / x[1]; },
       [](Tape& t, auto v) { return t.div(v[0], v[1]); }, {1.1, -1.7}},
      {"tanh", [](auto x) { return std::tanh(x[0]); },
       [](Tape& t, auto v) { return t.tanh_(v[0]); }, {0.4}},
      {"relu+", [](auto x) { return x[0] > 0 ? x[0] : 0.0; },
       [](Tape& t, auto v) { return t.relu(v[0]); }, {0.8}},
      {"relu-", [](auto x) { return x[0] > 0 ? x[0] : 0.0; },
       [](Tape& t, auto v) { return t.relu(v[0]); }, {-0.8}},
      {"exp", [](auto x) { return std::exp(x[0]); },
       [](Tape& t, auto v) { return t.exp_(v[0]); }, {-0.3}},
      {"log", [](auto x) { return std::log(x[0]); },
       [](Tape& t, auto v) { return t.log_(v[0]); }, {2.3}},
      {"square", [](auto x) { return x[0] * x[0]; },
       [](Tape& t, auto v) { return t.square(v[0]); }, {-1.9}},
      {"abs+", [](auto x) { return std::abs(x[0]); },
       [](Tape& t, auto v) { return t.abs_(v[0]); }, {0.5}},
      {"abs-", [](auto x) { return std::abs(x[0]); },
       [](Tape& t, auto v) { return t.abs_(v[0]); }, {-0.5}},
      {"max-first", [](auto x) { return std::max(x[0], x[1]); },
       [](Tape& t, auto v) { return t.max_(v[0], v[1]); }, {2.0, 1.0}},
      {"max-second", [](auto x) { return std::max(x[0], x[1]); },
       [](Tape& t, auto v) { return t.max_(v[0], v[1]); }, {1.0, 2.0}},
      {"min-first", [](auto x) { return std::min(x[0], x[1]); },
       [](Tape& t, auto v) { return t.min_(v[0], v[1]); }, {-1.0, 2.0}},
  };
  for (const Case& c : cases) {
    CAPTURE(c.name);
    Tape tape;
    std::vector<Tape::NodeId> leaves;
    for (double v : c.at) leaves.push_back(tape.var(v));
    const Tape::NodeId out = c.build(tape, leaves);
    CHECK(tape.value(out) == doctest::Approx(c.f(c.at)).epsilon(1e-12));
    const auto grad = tape.gradient(out, leaves);
    const auto fd = fd_gradient(c.f, c.at);
    CHECK(max_rel_err(grad, fd) < 1e-6);
  }
}

TEST_CASE("composite expression gradient matches finite differences") {
  const auto f = [](std::span<const double> x) {
    const double a = std::tanh(x[0] * x[1] + std::exp(x[2] * 0.2));
    const double b = std::abs(x[1] - x[2]) + std::max(x[0], x[2] * x[2]);
    return a * b + std::log(1.0 + x[0] * x[0]) / (2.0 + std::tanh(x[1]));
  };
  Rng rng(31);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> at = {rng.uniform(-2.0, 2.0), rng.uniform(-2.0, 2.0),
                              rng.uniform(-2.0, 2.0)};
    Tape tape;
    const auto x0 = tape.var(at[0]);
    const auto x1 = tape.var(at[1]);
    const auto x2 = tape.var(at[2]);
    const auto a = tape.tanh_(
        tape.add(tape.mul(x0, x1), tape.exp_(tape.mul(x2, tape.constant(0.2)))));
    const auto b =
        tape.add(tape.abs_(tape.sub(x1, x2)), tape.max_(x0, tape.square(x2)));
    const auto out = tape.add(
        tape.mul(a, b),
        tape.div(tape.log_(tape.add(tape.constant(1.0), tape.square(x0))),
                 tape.add(tape.constant(2.0), tape.tanh_(x1))));
    REQUIRE(tape.value(out) == doctest::Approx(f(at)).epsilon(1e-12));
    const std::vector<Tape::NodeId> leaves = {x0, x1, x2};
    const auto grad = tape.gradient(out, leaves);
    const auto fd = fd_gradient(f, at);
    CHECK(max_rel_err(grad, fd) < 1e-6);
  }
}

TEST_CASE("subgradient conventions at kinks route to the stated choices") {
  Tape tape;
  const auto x = tape.var(0.0);
  CHECK(tape.value(tape.sign(x)) == 0.0);
  CHECK(tape.value(tape.step(x)) == 0.0);

  // abs and relu at 0 take derivative 0 (sign(0), step(0)).
  const auto a = tape.abs_(x);
  const auto r = tape.relu(x);
  const std::vector<Tape::NodeId> wrt = {x};
  CHECK(tape.gradient(a, wrt)[0] == 0.0);
  CHECK(tape.gradient(r, wrt)[0] == 0.0);

  // Ties: max picks its second argument's side only on strict dominance, so
  // min (written via relu) routes the gradient to the first argument.
  Tape tie;
  const auto u = tie.var(1.0);
  const auto v = tie.var(1.0);
  const auto mn = tie.min_(u, v);
  const auto g_min = tie.gradient(mn, std::vector<Tape::NodeId>{u, v});
  CHECK(g_min[0] == 1.0);
  CHECK(g_min[1] == 0.0);
  const auto mx = tie.max_(u, v);
  const auto g_max = tie.gradient(mx, std::vector<Tape::NodeId>{u, v});
  CHECK(g_max[0] + g_max[1] == 1.0);
}

TEST_CASE("clamp matches its closed form and derivative regions") {
  for (double xv : {-2.0, 0.3, 2.0}) {
    Tape tape;
    const auto x = tape.var(xv);
    const auto out = tape.clamp(x, tape.constant(-1.0), tape.constant(1.0));
    CHECK(tape.value(out) == doctest::Approx(std::clamp(xv, -1.0, 1.0)));
    const double g = tape.gradient(out, std::vector<Tape::NodeId>{x})[0];
    CHECK(g == ((xv > -1.0 && xv < 1.0) ? 1.0 : 0.0));
  }
}

TEST_CASE("recompute after set_value reproduces a fresh tape bit for bit") {
  Rng rng(77);
  Tape tape;
  const auto x = tape.var(rng.normal());
  const auto y = tape.var(rng.normal());
  const auto out = tape.mul(tape.tanh_(tape.add(x, tape.square(y))),
                            tape.add(tape.abs_(y), tape.constant(0.5)));
  for (int trial = 0; trial < 20; ++trial) {
    const double xv = rng.normal();
    const double yv = rng.normal();
    tape.set_value(x, xv);
    tape.set_value(y, yv);
    tape.recompute();

    Tape fresh;
    const auto fx = fresh.var(xv);
    const auto fy = fresh.var(yv);
    const auto fout = fresh.mul(fresh.tanh_(fresh.add(fx, fresh.square(fy))),
                                fresh.add(fresh.abs_(fy), fresh.constant(0.5)));
    CHECK(tape.value(out) == fresh.value(fout));
  }
}

TEST_CASE("set_value rejects interior nodes") {
  Tape tape;
  const auto x = tape.var(1.0);
  const auto y = tape.square(x);
  CHECK_THROWS_AS(tape.set_value(y, 3.0), InvalidInputError);
}

TEST_CASE("symbolic input gradients equal the numeric reverse sweep") {
  Rng rng(13);
  for (int trial = 0; trial < 25; ++trial) {
    Tape tape;
    std::vector<Tape::NodeId> xs;
    for (int i = 0; i < 4; ++i) xs.push_back(tape.var(rng.uniform(-1.5, 1.5)));
    const auto start = static_cast<Tape::NodeId>(tape.size());
    auto h = tape.constant(0.0);
    for (std::size_t i = 0; i < xs.size(); ++i) {
      const auto w = tape.constant(rng.normal());
      h = tape.add(h, tape.tanh_(tape.mul(w, xs[i])));
    }
    const auto out = tape.add(tape.square(h), tape.abs_(h));

    const auto numeric = tape.gradient(out, xs);
    const auto nodes = tape.input_gradient_nodes(out, xs, start);
    REQUIRE(nodes.size() == xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) {
      CHECK(tape.value(nodes[i]) == doctest::Approx(numeric[i]).epsilon(1e-12));
    }
  }
}

TEST_CASE("gradient nodes stay consistent through recompute") {
  Rng rng(17);
  Tape tape;
  std::vector<Tape::NodeId> xs = {tape.var(0.2), tape.var(-0.4)};
  const auto out =
      tape.add(tape.mul(xs[0], xs[1]), tape.tanh_(tape.square(xs[0])));
  const auto nodes = tape.input_gradient_nodes(out, xs);
  for (int trial = 0; trial < 10; ++trial) {
    tape.set_value(xs[0], rng.normal());
    tape.set_value(xs[1], rng.normal());
    tape.recompute();
    const auto numeric = tape.gradient(out, xs);
    CHECK(tape.value(nodes[0]) == doctest::Approx(numeric[0]).epsilon(1e-12));
    CHECK(tape.value(nodes[1]) == doctest::Approx(numeric[1]).epsilon(1e-12));
  }
}

TEST_CASE("second derivatives through gradient nodes match finite differences") {
  // d/dx of (dy/dx) for y = tanh(w x)^2: builds the first derivative
  // symbolically, then runs the numeric sweep over it.
  const double w = 0.8;
  const auto dydx = [&](double xv) {
    const double t = std::tanh(w * xv);
    return 2.0 * t * (1.0 - t * t) * w;
  };
  Tape tape;
  const auto x = tape.var(0.37);
  const auto y = tape.square(tape.tanh_(tape.mul(tape.constant(w), x)));
  const std::vector<Tape::NodeId> xs = {x};
  const auto gnodes = tape.input_gradient_nodes(y, xs);
  CHECK(tape.value(gnodes[0]) == doctest::Approx(dydx(0.37)).epsilon(1e-12));

  const double second = tape.gradient(gnodes[0], xs)[0];
  const double h = 1e-6;
  const double fd = (dydx(0.37 + h) - dydx(0.37 - h)) / (2.0 * h);
  CHECK(second == doctest::Approx(fd).epsilon(1e-6));
}

TEST_CASE("gradients are zero for unreachable leaves") {
  Tape tape;
  const auto x = tape.var(1.0);
  const auto y = tape.var(2.0);
  const auto out = tape.square(x);
  const auto g = tape.gradient(out, std::vector<Tape::NodeId>{x, y});
  CHECK(g[0] == 2.0);
  CHECK(g[1] == 0.0);
}

TEST_CASE("clear and reserve reset the tape for reuse") {
  Tape tape;
  tape.reserve(64);
  tape.var(1.0);
  CHECK(tape.size() == 1);
  tape.clear();
  CHECK(tape.size() == 0);
  const auto x = tape.var(2.0);
  CHECK(tape.value(x) == 2.0);
}
