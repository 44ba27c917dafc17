#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "robustrl/common/rng.hpp"
#include "robustrl/diffcore/tape.hpp"

namespace robustrl::diffcore {

enum class Activation { kTanh, kRelu };

const char* activation_name(Activation a);
Activation activation_from_name(std::string_view name);

// Fully connected network, all doubles. Hidden layers share one activation,
// the output layer is linear. Parameters live in one flat vector laid out
// layer by layer: the weight matrix in row-major order, then the bias.
struct MlpNetwork {
  std::vector<int> layer_sizes;  // {in, hidden..., out}, at least {in, out}
  Activation activation = Activation::kTanh;
  std::vector<double> params;

  // Weights uniform in +-1/sqrt(fan_in), biases zero, draw order fixed by the
  // flat layout so a seed pins every parameter.
  static MlpNetwork create(std::vector<int> sizes, Activation act, Rng& rng);

  int input_dim() const { return layer_sizes.front(); }
  int output_dim() const { return layer_sizes.back(); }
  int layer_count() const { return static_cast<int>(layer_sizes.size()) - 1; }

  std::size_t param_count() const;
  static std::size_t param_count_for(std::span<const int> sizes);

  std::size_t weight_offset(int layer) const;
  std::size_t bias_offset(int layer) const;

  void validate() const;
};

// Per-thread workspace for the analytic passes. Buffers are grown on demand
// and reused; one scratch must not be shared across threads.
struct MlpScratch {
  std::vector<std::vector<double>> a;     // activations, a[0] is the input
  std::vector<std::vector<double>> z;     // pre-activations, z[l] for layer l+1
  std::vector<std::vector<double>> u;     // first backward chain
  std::vector<std::vector<double>> ubar;  // second backward chain
  std::vector<std::vector<double>> vbar;
  std::vector<std::vector<double>> zbar;
  std::vector<double> tmp;

  void ensure(const MlpNetwork& net);
};

// Forward pass; returns the output activation stored in scratch.
const std::vector<double>& mlp_forward(const MlpNetwork& net, std::span<const double> input,
                                       MlpScratch& scratch);

std::vector<double> mlp_forward(const MlpNetwork& net, std::span<const double> input);

// Scalar-output networks: value and d(output)/d(input) in one pass.
double mlp_value_and_input_gradient(const MlpNetwork& net, std::span<const double> input,
                                    MlpScratch& scratch, std::span<double> grad_out);

std::vector<double> mlp_input_gradient(const MlpNetwork& net, std::span<const double> input);

// Row-major (output_dim x input_dim) Jacobian.
std::vector<double> mlp_jacobian(const MlpNetwork& net, std::span<const double> input,
                                 MlpScratch& scratch);

// Accumulates d(ybar . f(x))/d(params) into param_grad (+=). When
// input_grad_out is non-empty it receives d(ybar . f(x))/d(x) (overwritten).
void mlp_output_vjp(const MlpNetwork& net, std::span<const double> input,
                    std::span<const double> ybar, MlpScratch& scratch,
                    std::span<double> param_grad, std::span<double> input_grad_out = {});

// Second-order path, scalar-output networks. Let g(params; x) be the input
// gradient of the network. Accumulates d(gbar . g)/d(params) into param_grad
// (+=), differentiating through both the forward pass and the backward chain
// that produced g. This is what lets a penalty on the input gradient train
// the parameters. With relu hidden units the activation second derivative is
// zero almost everywhere, so the result is the a.e. derivative.
void mlp_input_gradient_vjp(const MlpNetwork& net, std::span<const double> input,
                            std::span<const double> gbar, MlpScratch& scratch,
                            std::span<double> param_grad);

// Tape interop. Parameter leaves are created in flat layout order; forward
// graph mirrors the analytic forward exactly.
std::vector<Tape::NodeId> make_param_nodes(Tape& tape, const MlpNetwork& net,
                                           bool as_variables);
std::vector<Tape::NodeId> mlp_graph_forward(Tape& tape, const MlpNetwork& net,
                                            std::span<const Tape::NodeId> params,
                                            std::span<const Tape::NodeId> inputs);

}  // namespace robustrl::diffcore
