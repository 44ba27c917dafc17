#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "robustrl/common/errors.hpp"

namespace robustrl::diffcore {

// Reverse-mode autodiff on a flat tape of scalar operations.
//
// Nodes are appended in evaluation order and evaluated eagerly, so the tape
// index order is always a topological order. A numeric backward pass visits
// each node exactly once, giving O(N) gradients for all leaves at once.
//
// For second-order uses, input_gradient_nodes() differentiates symbolically:
// it appends ordinary tape nodes that compute the adjoints of selected
// leaves. Any scalar built from those gradient nodes (a Lipschitz penalty,
// say) can then be pushed through the numeric backward pass to get its
// gradient with respect to other leaves, typically network parameters.
//
// Threading contract: building or re-evaluating a tape is exclusive to one
// thread. The const methods (value, gradient) do not mutate shared state and
// may run concurrently once mutation has stopped. Distinct Tape instances
// are fully independent.
class Tape {
 public:
  using NodeId = std::uint32_t;
  static constexpr NodeId kNone = 0xFFFFFFFFu;

  enum class Op : std::uint8_t {
    kConst,
    kVar,
    kAdd,
    kSub,
    kMul,
    kNeg,
    kDiv,
    kTanh,
    kRelu,
    kExp,
    kLog,
    kSquare,
    kAbs,
    kMax,
    // Zero-derivative helpers. They exist so that the symbolic derivatives of
    // relu, abs and max are expressible on the tape itself; their own
    // derivative is zero everywhere, which encodes the subgradient choices
    // sign(0) = 0 and step(0) = 0.
    kSign,
    kStep,
  };

  NodeId constant(double v) { return push(Op::kConst, kNone, kNone, v); }
  NodeId var(double v) { return push(Op::kVar, kNone, kNone, v); }

  NodeId add(NodeId a, NodeId b) { return push(Op::kAdd, a, b, values_[a] + values_[b]); }
  NodeId sub(NodeId a, NodeId b) { return push(Op::kSub, a, b, values_[a] - values_[b]); }
  NodeId mul(NodeId a, NodeId b) { return push(Op::kMul, a, b, values_[a] * values_[b]); }
  NodeId neg(NodeId a) { return push(Op::kNeg, a, kNone, -values_[a]); }
  NodeId div(NodeId a, NodeId b) { return push(Op::kDiv, a, b, values_[a] / values_[b]); }
  NodeId tanh_(NodeId a) { return push(Op::kTanh, a, kNone, std::tanh(values_[a])); }
  NodeId relu(NodeId a) { return push(Op::kRelu, a, kNone, values_[a] > 0.0 ? values_[a] : 0.0); }
  NodeId exp_(NodeId a) { return push(Op::kExp, a, kNone, std::exp(values_[a])); }
  NodeId log_(NodeId a) { return push(Op::kLog, a, kNone, std::log(values_[a])); }
  NodeId square(NodeId a) { return push(Op::kSquare, a, kNone, values_[a] * values_[a]); }
  NodeId abs_(NodeId a) { return push(Op::kAbs, a, kNone, std::fabs(values_[a])); }
  NodeId max_(NodeId a, NodeId b) {
    return push(Op::kMax, a, b, values_[a] > values_[b] ? values_[a] : values_[b]);
  }
  NodeId sign(NodeId a) { return push(Op::kSign, a, kNone, sign_value(values_[a])); }
  NodeId step(NodeId a) { return push(Op::kStep, a, kNone, values_[a] > 0.0 ? 1.0 : 0.0); }

  // Composites. min and clamp are spelled with relu so that both orders of
  // differentiation fall out of the primitive rules above.
  NodeId min_(NodeId a, NodeId b) { return sub(a, relu(sub(a, b))); }
  NodeId clamp(NodeId x, NodeId lo, NodeId hi) {
    return add(lo, sub(relu(sub(x, lo)), relu(sub(x, hi))));
  }

  double value(NodeId id) const { return values_[id]; }

  // Leaves only; everything downstream is stale until recompute().
  void set_value(NodeId id, double v) {
    const Op op = ops_[id];
    if (op != Op::kVar && op != Op::kConst) {
      throw InvalidInputError("set_value on a non-leaf tape node");
    }
    values_[id] = v;
  }

  // One forward sweep in index order. Re-running on identical leaf values
  // reproduces every node value bit for bit.
  void recompute();

  // d(output)/d(wrt[k]) for every k, by one reverse sweep. Returns zeros for
  // leaves the output does not depend on.
  std::vector<double> gradient(NodeId output, std::span<const NodeId> wrt) const;

  // Same, with caller-owned scratch so hot loops do not allocate. scratch is
  // resized to the node count.
  void gradient_into(NodeId output, std::span<const NodeId> wrt,
                     std::span<double> out, std::vector<double>& scratch) const;

  // Appends nodes computing d(output)/d(inputs[k]) and returns their ids.
  // Adjoint propagation is restricted to nodes between start_hint and output
  // that can reach one of the inputs; pass the index where the relevant
  // subgraph begins to keep the sweep local. The appended nodes reference
  // operand values by id, so a later recompute() keeps gradients consistent.
  std::vector<NodeId> input_gradient_nodes(NodeId output,
                                           std::span<const NodeId> inputs,
                                           NodeId start_hint = 0);

  std::size_t size() const { return ops_.size(); }
  void clear() {
    ops_.clear();
    args_.clear();
    values_.clear();
  }
  void reserve(std::size_t n) {
    ops_.reserve(n);
    args_.reserve(2 * n);
    values_.reserve(n);
  }

  Op op(NodeId id) const { return ops_[id]; }

  static double sign_value(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

 private:
  NodeId push(Op op, NodeId a, NodeId b, double v) {
    if (ops_.size() >= kNone) throw Error("tape node budget exhausted");
    const NodeId id = static_cast<NodeId>(ops_.size());
    ops_.push_back(op);
    args_.push_back(a);
    args_.push_back(b);
    values_.push_back(v);
    return id;
  }

  std::vector<Op> ops_;
  std::vector<NodeId> args_;  // two entries per node
  std::vector<double> values_;
};

}  // namespace robustrl::diffcore
