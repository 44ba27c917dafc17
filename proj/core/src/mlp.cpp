#include "robustrl/diffcore/mlp.hpp"

#include <cmath>
#include <cstring>
#include <string>

#include "robustrl/common/errors.hpp"

namespace robustrl::diffcore {

const char* activation_name(Activation a) {
  return a == Activation::kTanh ? "tanh" : "relu";
}

Activation activation_from_name(std::string_view name) {
  if (name == "tanh") return Activation::kTanh;
  if (name == "relu") return Activation::kRelu;
  throw InvalidInputError("unknown activation: '" + std::string(name) + "'");
}

MlpNetwork MlpNetwork::create(std::vector<int> sizes, Activation act, Rng& rng) {
  MlpNetwork net;
  net.layer_sizes = std::move(sizes);
  net.activation = act;
  if (net.layer_sizes.size() < 2) throw InvalidInputError("network needs at least two layer sizes");
  for (int s : net.layer_sizes) {
    if (s <= 0) throw InvalidInputError("layer sizes must be positive");
  }
  net.params.assign(net.param_count(), 0.0);
  for (int l = 0; l < net.layer_count(); ++l) {
    const int n_in = net.layer_sizes[l];
    const int n_out = net.layer_sizes[l + 1];
    const double bound = 1.0 / std::sqrt(static_cast<double>(n_in));
    double* w = net.params.data() + net.weight_offset(l);
    for (int i = 0; i < n_out * n_in; ++i) w[i] = rng.uniform(-bound, bound);
    // biases stay zero
  }
  return net;
}

std::size_t MlpNetwork::param_count_for(std::span<const int> sizes) {
  std::size_t n = 0;
  for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
    n += static_cast<std::size_t>(sizes[l] + 1) * static_cast<std::size_t>(sizes[l + 1]);
  }
  return n;
}

std::size_t MlpNetwork::param_count() const { return param_count_for(layer_sizes); }

std::size_t MlpNetwork::weight_offset(int layer) const {
  std::size_t off = 0;
  for (int l = 0; l < layer; ++l) {
    off += static_cast<std::size_t>(layer_sizes[l] + 1) * static_cast<std::size_t>(layer_sizes[l + 1]);
  }
  return off;
}

std::size_t MlpNetwork::bias_offset(int layer) const {
  return weight_offset(layer) +
         static_cast<std::size_t>(layer_sizes[layer]) * static_cast<std::size_t>(layer_sizes[layer + 1]);
}

void MlpNetwork::validate() const {
  if (layer_sizes.size() < 2) throw InvalidInputError("network needs at least two layer sizes");
  for (int s : layer_sizes) {
    if (s <= 0) throw InvalidInputError("layer sizes must be positive");
  }
  if (params.size() != param_count()) {
    throw InvalidInputError("parameter vector has " + std::to_string(params.size()) +
                            " entries, layout needs " + std::to_string(param_count()));
  }
}

void MlpScratch::ensure(const MlpNetwork& net) {
  const std::size_t layers = static_cast<std::size_t>(net.layer_count());
  if (a.size() != layers + 1) {
    a.assign(layers + 1, {});
    z.assign(layers, {});
    u.assign(layers, {});
    ubar.assign(layers, {});
    vbar.assign(layers, {});
    zbar.assign(layers, {});
  }
  for (std::size_t l = 0; l <= layers; ++l) {
    a[l].resize(static_cast<std::size_t>(net.layer_sizes[l]));
  }
  for (std::size_t l = 0; l < layers; ++l) {
    const std::size_t n = static_cast<std::size_t>(net.layer_sizes[l + 1]);
    z[l].resize(n);
    u[l].resize(n);
    ubar[l].resize(n);
    zbar[l].resize(n);
    vbar[l].resize(static_cast<std::size_t>(net.layer_sizes[l]));
  }
}

namespace {

inline double act_value(Activation act, double z) {
  return act == Activation::kTanh ? std::tanh(z) : (z > 0.0 ? z : 0.0);
}

// Derivatives written in terms of the activation value a = act(z); for tanh
// that avoids recomputing the transcendental.
inline double act_deriv(Activation act, double a, double z) {
  return act == Activation::kTanh ? 1.0 - a * a : (z > 0.0 ? 1.0 : 0.0);
}

inline double act_second_deriv(Activation act, double a) {
  return act == Activation::kTanh ? -2.0 * a * (1.0 - a * a) : 0.0;
}

void check_input(const MlpNetwork& net, std::span<const double> input) {
  net.validate();
  if (static_cast<int>(input.size()) != net.input_dim()) {
    throw InvalidInputError("input has " + std::to_string(input.size()) + " entries, network expects " +
                            std::to_string(net.input_dim()));
  }
}

}  // namespace

const std::vector<double>& mlp_forward(const MlpNetwork& net, std::span<const double> input,
                                       MlpScratch& s) {
  check_input(net, input);
  s.ensure(net);
  std::memcpy(s.a[0].data(), input.data(), input.size() * sizeof(double));
  const int L = net.layer_count();
  for (int l = 0; l < L; ++l) {
    const int n_in = net.layer_sizes[l];
    const int n_out = net.layer_sizes[l + 1];
    const double* w = net.params.data() + net.weight_offset(l);
    const double* b = net.params.data() + net.bias_offset(l);
    const double* x = s.a[l].data();
    double* zl = s.z[l].data();
    for (int o = 0; o < n_out; ++o) {
      double acc = b[o];
      const double* row = w + static_cast<std::size_t>(o) * n_in;
      for (int i = 0; i < n_in; ++i) acc += row[i] * x[i];
      zl[o] = acc;
    }
    double* al = s.a[l + 1].data();
    if (l + 1 == L) {
      std::memcpy(al, zl, static_cast<std::size_t>(n_out) * sizeof(double));
    } else {
      for (int o = 0; o < n_out; ++o) al[o] = act_value(net.activation, zl[o]);
    }
  }
  return s.a[static_cast<std::size_t>(L)];
}

std::vector<double> mlp_forward(const MlpNetwork& net, std::span<const double> input) {
  MlpScratch s;
  return mlp_forward(net, input, s);
}

double mlp_value_and_input_gradient(const MlpNetwork& net, std::span<const double> input,
                                    MlpScratch& s, std::span<double> grad_out) {
  if (net.output_dim() != 1) {
    throw InvalidInputError("input gradient needs a scalar-output network");
  }
  if (static_cast<int>(grad_out.size()) != net.input_dim()) {
    throw InvalidInputError("gradient span size mismatch");
  }
  const double value = mlp_forward(net, input, s)[0];

  const int L = net.layer_count();
  // u[l] = d(output)/d(z_{l+1}), walked backwards; v = d(output)/d(a_l).
  s.u[static_cast<std::size_t>(L - 1)][0] = 1.0;
  for (int l = L - 1; l >= 0; --l) {
    const int n_in = net.layer_sizes[l];
    const int n_out = net.layer_sizes[l + 1];
    const double* w = net.params.data() + net.weight_offset(l);
    const double* ul = s.u[static_cast<std::size_t>(l)].data();
    double* v = l > 0 ? s.vbar[static_cast<std::size_t>(l)].data() : grad_out.data();
    for (int i = 0; i < n_in; ++i) v[i] = 0.0;
    for (int o = 0; o < n_out; ++o) {
      const double uo = ul[o];
      if (uo == 0.0) continue;
      const double* row = w + static_cast<std::size_t>(o) * n_in;
      for (int i = 0; i < n_in; ++i) v[i] += row[i] * uo;
    }
    if (l > 0) {
      const double* al = s.a[static_cast<std::size_t>(l)].data();
      const double* zl = s.z[static_cast<std::size_t>(l - 1)].data();
      double* ul_prev = s.u[static_cast<std::size_t>(l - 1)].data();
      for (int i = 0; i < n_in; ++i) {
        ul_prev[i] = v[i] * act_deriv(net.activation, al[i], zl[i]);
      }
    }
  }
  return value;
}

std::vector<double> mlp_input_gradient(const MlpNetwork& net, std::span<const double> input) {
  MlpScratch s;
  std::vector<double> g(static_cast<std::size_t>(net.input_dim()));
  mlp_value_and_input_gradient(net, input, s, g);
  return g;
}

std::vector<double> mlp_jacobian(const MlpNetwork& net, std::span<const double> input,
                                 MlpScratch& s) {
  mlp_forward(net, input, s);
  const int L = net.layer_count();
  const int n_out_total = net.output_dim();
  const int n_in_total = net.input_dim();
  std::vector<double> jac(static_cast<std::size_t>(n_out_total) * n_in_total);
  std::vector<double> row_grad(static_cast<std::size_t>(n_in_total));
  for (int r = 0; r < n_out_total; ++r) {
    auto& u_top = s.u[static_cast<std::size_t>(L - 1)];
    for (auto& x : u_top) x = 0.0;
    u_top[static_cast<std::size_t>(r)] = 1.0;
    for (int l = L - 1; l >= 0; --l) {
      const int n_in = net.layer_sizes[l];
      const int n_out = net.layer_sizes[l + 1];
      const double* w = net.params.data() + net.weight_offset(l);
      const double* ul = s.u[static_cast<std::size_t>(l)].data();
      double* v = l > 0 ? s.vbar[static_cast<std::size_t>(l)].data() : row_grad.data();
      for (int i = 0; i < n_in; ++i) v[i] = 0.0;
      for (int o = 0; o < n_out; ++o) {
        const double uo = ul[o];
        if (uo == 0.0) continue;
        const double* row = w + static_cast<std::size_t>(o) * n_in;
        for (int i = 0; i < n_in; ++i) v[i] += row[i] * uo;
      }
      if (l > 0) {
        const double* al = s.a[static_cast<std::size_t>(l)].data();
        const double* zl = s.z[static_cast<std::size_t>(l - 1)].data();
        double* ul_prev = s.u[static_cast<std::size_t>(l - 1)].data();
        for (int i = 0; i < n_in; ++i) {
          ul_prev[i] = v[i] * act_deriv(net.activation, al[i], zl[i]);
        }
      }
    }
    std::memcpy(jac.data() + static_cast<std::size_t>(r) * n_in_total, row_grad.data(),
                static_cast<std::size_t>(n_in_total) * sizeof(double));
  }
  return jac;
}

void mlp_output_vjp(const MlpNetwork& net, std::span<const double> input,
                    std::span<const double> ybar, MlpScratch& s,
                    std::span<double> param_grad, std::span<double> input_grad_out) {
  if (static_cast<int>(ybar.size()) != net.output_dim()) {
    throw InvalidInputError("cotangent size mismatch");
  }
  if (param_grad.size() != net.param_count()) {
    throw InvalidInputError("parameter gradient span size mismatch");
  }
  mlp_forward(net, input, s);

  const int L = net.layer_count();
  auto& zbar_top = s.zbar[static_cast<std::size_t>(L - 1)];
  std::memcpy(zbar_top.data(), ybar.data(), ybar.size() * sizeof(double));

  for (int l = L - 1; l >= 0; --l) {
    const int n_in = net.layer_sizes[l];
    const int n_out = net.layer_sizes[l + 1];
    const double* w = net.params.data() + net.weight_offset(l);
    const double* x = s.a[static_cast<std::size_t>(l)].data();
    const double* zb = s.zbar[static_cast<std::size_t>(l)].data();
    double* wg = param_grad.data() + net.weight_offset(l);
    double* bg = param_grad.data() + net.bias_offset(l);
    for (int o = 0; o < n_out; ++o) {
      const double c = zb[o];
      bg[o] += c;
      if (c == 0.0) continue;
      double* wrow = wg + static_cast<std::size_t>(o) * n_in;
      for (int i = 0; i < n_in; ++i) wrow[i] += c * x[i];
    }
    double* abar = l > 0 ? s.vbar[static_cast<std::size_t>(l)].data()
                         : (input_grad_out.empty() ? nullptr : input_grad_out.data());
    if (abar == nullptr && l == 0) break;
    for (int i = 0; i < n_in; ++i) abar[i] = 0.0;
    for (int o = 0; o < n_out; ++o) {
      const double c = zb[o];
      if (c == 0.0) continue;
      const double* row = w + static_cast<std::size_t>(o) * n_in;
      for (int i = 0; i < n_in; ++i) abar[i] += row[i] * c;
    }
    if (l > 0) {
      const double* al = s.a[static_cast<std::size_t>(l)].data();
      const double* zl = s.z[static_cast<std::size_t>(l - 1)].data();
      double* zb_prev = s.zbar[static_cast<std::size_t>(l - 1)].data();
      for (int i = 0; i < n_in; ++i) {
        zb_prev[i] = abar[i] * act_deriv(net.activation, al[i], zl[i]);
      }
    }
  }
}

void mlp_input_gradient_vjp(const MlpNetwork& net, std::span<const double> input,
                            std::span<const double> gbar, MlpScratch& s,
                            std::span<double> param_grad) {
  if (net.output_dim() != 1) {
    throw InvalidInputError("input gradient needs a scalar-output network");
  }
  if (static_cast<int>(gbar.size()) != net.input_dim()) {
    throw InvalidInputError("cotangent size mismatch");
  }
  if (param_grad.size() != net.param_count()) {
    throw InvalidInputError("parameter gradient span size mismatch");
  }

  const int L = net.layer_count();
  // Forward plus the input-gradient chain, keeping every intermediate:
  //   u_{L-1} = 1;  v_{l-1} = W_l^T u_l;  u_{l-1} = v_{l-1} .* act'(z_{l-1})
  // The penalty gradient then needs adjoints of that chain as well as of the
  // forward pass, because the parameters enter twice: through the transposed
  // matvecs and through act'(z).
  mlp_forward(net, input, s);

  // vbar here temporarily holds v_l (the chain values); it is reused for
  // adjoints afterwards, so v is kept in a dedicated buffer.
  std::vector<std::vector<double>>& v = s.vbar;
  s.u[static_cast<std::size_t>(L - 1)][0] = 1.0;
  std::vector<double> g(static_cast<std::size_t>(net.input_dim()));
  for (int l = L - 1; l >= 0; --l) {
    const int n_in = net.layer_sizes[l];
    const int n_out = net.layer_sizes[l + 1];
    const double* w = net.params.data() + net.weight_offset(l);
    const double* ul = s.u[static_cast<std::size_t>(l)].data();
    double* vl = l > 0 ? v[static_cast<std::size_t>(l)].data() : g.data();
    for (int i = 0; i < n_in; ++i) vl[i] = 0.0;
    for (int o = 0; o < n_out; ++o) {
      const double uo = ul[o];
      if (uo == 0.0) continue;
      const double* row = w + static_cast<std::size_t>(o) * n_in;
      for (int i = 0; i < n_in; ++i) vl[i] += row[i] * uo;
    }
    if (l > 0) {
      const double* al = s.a[static_cast<std::size_t>(l)].data();
      const double* zl = s.z[static_cast<std::size_t>(l - 1)].data();
      double* ul_prev = s.u[static_cast<std::size_t>(l - 1)].data();
      for (int i = 0; i < n_in; ++i) {
        ul_prev[i] = vl[i] * act_deriv(net.activation, al[i], zl[i]);
      }
    }
  }

  // Adjoint sweep over the chain, ascending through layers. vbar_0 = gbar.
  for (auto& zb : s.zbar) {
    for (auto& x : zb) x = 0.0;
  }
  // tmp carries vbar_{l-1} into iteration l; ubar is d(P)/d(u_l).
  s.tmp.assign(gbar.begin(), gbar.end());
  for (int l = 0; l < L; ++l) {
    const int n_in = net.layer_sizes[l];
    const int n_out = net.layer_sizes[l + 1];
    const double* w = net.params.data() + net.weight_offset(l);
    const double* vbar_in = s.tmp.data();  // adjoint of v_{l} in chain indexing (size n_in)
    const double* ul = s.u[static_cast<std::size_t>(l)].data();
    double* wg = param_grad.data() + net.weight_offset(l);
    double* ub = s.ubar[static_cast<std::size_t>(l)].data();

    // v_{l-1} = W_l^T u_l contributes: Wbar_l += u_l vbar^T, ubar_l = W_l vbar.
    for (int o = 0; o < n_out; ++o) {
      const double uo = ul[o];
      const double* row = w + static_cast<std::size_t>(o) * n_in;
      double* wrow = wg + static_cast<std::size_t>(o) * n_in;
      double acc = 0.0;
      for (int i = 0; i < n_in; ++i) {
        wrow[i] += uo * vbar_in[i];
        acc += row[i] * vbar_in[i];
      }
      ub[o] = acc;
    }
    if (l + 1 <= L - 1) {
      // u_l feeds u via u_l = v_l .* act'(z_l) at the next chain link.
      const int n = net.layer_sizes[l + 1];
      const double* al = s.a[static_cast<std::size_t>(l + 1)].data();
      const double* zl = s.z[static_cast<std::size_t>(l)].data();
      const double* vl = v[static_cast<std::size_t>(l + 1)].data();
      double* zb = s.zbar[static_cast<std::size_t>(l)].data();
      s.tmp.resize(static_cast<std::size_t>(n));
      double* vbar_out = s.tmp.data();
      for (int i = 0; i < n; ++i) {
        const double ai = al[i];
        vbar_out[i] = ub[i] * act_deriv(net.activation, ai, zl[i]);
        zb[i] += ub[i] * vl[i] * act_second_deriv(net.activation, ai);
      }
    }
  }

  // Remaining adjoints flow down the forward pass. zbar_{L-1} is zero: the
  // output value itself does not appear in the input gradient.
  for (int l = L - 1; l >= 0; --l) {
    const int n_in = net.layer_sizes[l];
    const int n_out = net.layer_sizes[l + 1];
    const double* w = net.params.data() + net.weight_offset(l);
    const double* x = s.a[static_cast<std::size_t>(l)].data();
    const double* zb = s.zbar[static_cast<std::size_t>(l)].data();
    double* wg = param_grad.data() + net.weight_offset(l);
    double* bg = param_grad.data() + net.bias_offset(l);
    for (int o = 0; o < n_out; ++o) {
      const double c = zb[o];
      bg[o] += c;
      if (c == 0.0) continue;
      double* wrow = wg + static_cast<std::size_t>(o) * n_in;
      for (int i = 0; i < n_in; ++i) wrow[i] += c * x[i];
    }
    if (l > 0) {
      const double* al = s.a[static_cast<std::size_t>(l)].data();
      const double* zl = s.z[static_cast<std::size_t>(l - 1)].data();
      double* zb_prev = s.zbar[static_cast<std::size_t>(l - 1)].data();
      // abar = W^T zbar, then through the activation.
      s.tmp.assign(static_cast<std::size_t>(n_in), 0.0);
      double* abar = s.tmp.data();
      for (int o = 0; o < n_out; ++o) {
        const double c = zb[o];
        if (c == 0.0) continue;
        const double* row = w + static_cast<std::size_t>(o) * n_in;
        for (int i = 0; i < n_in; ++i) abar[i] += row[i] * c;
      }
      for (int i = 0; i < n_in; ++i) {
        zb_prev[i] += abar[i] * act_deriv(net.activation, al[i], zl[i]);
      }
    }
  }
}

std::vector<Tape::NodeId> make_param_nodes(Tape& tape, const MlpNetwork& net, bool as_variables) {
  net.validate();
  std::vector<Tape::NodeId> ids;
  ids.reserve(net.params.size());
  for (const double p : net.params) {
    ids.push_back(as_variables ? tape.var(p) : tape.constant(p));
  }
  return ids;
}

std::vector<Tape::NodeId> mlp_graph_forward(Tape& tape, const MlpNetwork& net,
                                            std::span<const Tape::NodeId> params,
                                            std::span<const Tape::NodeId> inputs) {
  net.validate();
  if (params.size() != net.param_count()) throw InvalidInputError("param node count mismatch");
  if (static_cast<int>(inputs.size()) != net.input_dim()) {
    throw InvalidInputError("input node count mismatch");
  }
  std::vector<Tape::NodeId> cur(inputs.begin(), inputs.end());
  std::vector<Tape::NodeId> next;
  const int L = net.layer_count();
  for (int l = 0; l < L; ++l) {
    const int n_in = net.layer_sizes[l];
    const int n_out = net.layer_sizes[l + 1];
    const std::size_t w_off = net.weight_offset(l);
    const std::size_t b_off = net.bias_offset(l);
    next.clear();
    next.reserve(static_cast<std::size_t>(n_out));
    for (int o = 0; o < n_out; ++o) {
      Tape::NodeId acc = params[b_off + static_cast<std::size_t>(o)];
      for (int i = 0; i < n_in; ++i) {
        const auto w = params[w_off + static_cast<std::size_t>(o) * n_in + i];
        acc = tape.add(acc, tape.mul(w, cur[static_cast<std::size_t>(i)]));
      }
      if (l + 1 < L) {
        acc = net.activation == Activation::kTanh ? tape.tanh_(acc) : tape.relu(acc);
      }
      next.push_back(acc);
    }
    cur.swap(next);
  }
  return cur;
}

}  // namespace robustrl::diffcore
