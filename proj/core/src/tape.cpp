#include "robustrl/diffcore/tape.hpp"

#include <algorithm>

namespace robustrl::diffcore {

void Tape::recompute() {
  const std::size_t n = ops_.size();
  for (std::size_t i = 0; i < n; ++i) {
    const NodeId a = args_[2 * i];
    const NodeId b = args_[2 * i + 1];
    switch (ops_[i]) {
      case Op::kConst:
      case Op::kVar:
        break;
      case Op::kAdd:
        values_[i] = values_[a] + values_[b];
        break;
      case Op::kSub:
        values_[i] = values_[a] - values_[b];
        break;
      case Op::kMul:
        values_[i] = values_[a] * values_[b];
        break;
      case Op::kNeg:
        values_[i] = -values_[a];
        break;
      case Op::kDiv:
        values_[i] = values_[a] / values_[b];
        break;
      case Op::kTanh:
        values_[i] = std::tanh(values_[a]);
        break;
      case Op::kRelu:
        values_[i] = values_[a] > 0.0 ? values_[a] : 0.0;
        break;
      case Op::kExp:
        values_[i] = std::exp(values_[a]);
        break;
      case Op::kLog:
        values_[i] = std::log(values_[a]);
        break;
      case Op::kSquare:
        values_[i] = values_[a] * values_[a];
        break;
      case Op::kAbs:
        values_[i] = std::fabs(values_[a]);
        break;
      case Op::kMax:
        values_[i] = values_[a] > values_[b] ? values_[a] : values_[b];
        break;
      case Op::kSign:
        values_[i] = sign_value(values_[a]);
        break;
      case Op::kStep:
        values_[i] = values_[a] > 0.0 ? 1.0 : 0.0;
        break;
    }
  }
}

void Tape::gradient_into(NodeId output, std::span<const NodeId> wrt,
                         std::span<double> out, std::vector<double>& scratch) const {
  if (output >= ops_.size()) throw InvalidInputError("gradient: output id out of range");
  if (out.size() != wrt.size()) throw InvalidInputError("gradient: output span size mismatch");

  scratch.assign(ops_.size(), 0.0);
  scratch[output] = 1.0;

  // Reverse sweep; each node is visited once, so the pass is O(N) no matter
  // how many paths connect output to a leaf.
  for (std::uint32_t i = output + 1; i-- > 0;) {
    const double aj = scratch[i];
    if (aj == 0.0) continue;
    const NodeId a = args_[2 * i];
    const NodeId b = args_[2 * i + 1];
    switch (ops_[i]) {
      case Op::kConst:
      case Op::kVar:
      case Op::kSign:
      case Op::kStep:
        break;
      case Op::kAdd:
        scratch[a] += aj;
        scratch[b] += aj;
        break;
      case Op::kSub:
        scratch[a] += aj;
        scratch[b] -= aj;
        break;
      case Op::kMul:
        scratch[a] += aj * values_[b];
        scratch[b] += aj * values_[a];
        break;
      case Op::kNeg:
        scratch[a] -= aj;
        break;
      case Op::kDiv:
        scratch[a] += aj / values_[b];
        scratch[b] -= aj * values_[i] / values_[b];
        break;
      case Op::kTanh:
        scratch[a] += aj * (1.0 - values_[i] * values_[i]);
        break;
      case Op::kRelu:
        // Subgradient 0 at the kink, matching step(0) = 0.
        if (values_[a] > 0.0) scratch[a] += aj;
        break;
      case Op::kExp:
        scratch[a] += aj * values_[i];
        break;
      case Op::kLog:
        scratch[a] += aj / values_[a];
        break;
      case Op::kSquare:
        scratch[a] += aj * 2.0 * values_[a];
        break;
      case Op::kAbs:
        scratch[a] += aj * sign_value(values_[a]);
        break;
      case Op::kMax:
        // Ties route to b, consistent with the symbolic step(a - b) form.
        if (values_[a] > values_[b]) {
          scratch[a] += aj;
        } else {
          scratch[b] += aj;
        }
        break;
    }
  }

  for (std::size_t k = 0; k < wrt.size(); ++k) {
    if (wrt[k] >= ops_.size()) throw InvalidInputError("gradient: wrt id out of range");
    out[k] = wrt[k] <= output ? scratch[wrt[k]] : 0.0;
  }
}

std::vector<double> Tape::gradient(NodeId output, std::span<const NodeId> wrt) const {
  std::vector<double> out(wrt.size());
  std::vector<double> scratch;
  gradient_into(output, wrt, out, scratch);
  return out;
}

std::vector<Tape::NodeId> Tape::input_gradient_nodes(NodeId output,
                                                     std::span<const NodeId> inputs,
                                                     NodeId start_hint) {
  if (output >= ops_.size()) throw InvalidInputError("input_gradient_nodes: output out of range");
  NodeId lo = start_hint;
  for (const NodeId id : inputs) {
    if (id >= ops_.size()) throw InvalidInputError("input_gradient_nodes: input out of range");
    lo = std::min(lo, id);
  }
  if (lo > output) lo = output;

  const std::size_t span_len = static_cast<std::size_t>(output) - lo + 1;

  // Reachability from the inputs, forward over the local window. Adjoints are
  // only materialized for reachable nodes; parameters and other leaves still
  // appear inside the appended expressions by id, which is exactly what makes
  // the result differentiable with respect to them later.
  std::vector<std::uint8_t> active(span_len, 0);
  for (const NodeId id : inputs) {
    if (id >= lo) active[id - lo] = 1;
  }
  for (std::size_t i = 0; i < span_len; ++i) {
    const NodeId id = lo + static_cast<NodeId>(i);
    const Op op = ops_[id];
    if (op == Op::kConst || op == Op::kVar) continue;
    const NodeId a = args_[2 * id];
    const NodeId b = args_[2 * id + 1];
    bool act = (a >= lo && a <= output && active[a - lo]);
    if (!act && b != kNone && b >= lo && b <= output) act = active[b - lo];
    if (act) active[i] = 1;
  }

  std::vector<NodeId> adj(span_len, kNone);
  NodeId one = kNone;
  NodeId two = kNone;
  auto lazy_one = [&] { return one != kNone ? one : (one = constant(1.0)); };
  auto lazy_two = [&] { return two != kNone ? two : (two = constant(2.0)); };

  auto acc = [&](NodeId target, NodeId term) {
    if (target < lo || target > output || !active[target - lo]) return;
    NodeId& slot = adj[target - lo];
    slot = (slot == kNone) ? term : add(slot, term);
  };

  if (active[output - lo]) adj[output - lo] = lazy_one();

  for (NodeId id = output;; --id) {
    if (active[id - lo] && adj[id - lo] != kNone) {
      const NodeId aj = adj[id - lo];
      const NodeId a = args_[2 * id];
      const NodeId b = args_[2 * id + 1];
      switch (ops_[id]) {
        case Op::kConst:
        case Op::kVar:
        case Op::kSign:
        case Op::kStep:
          break;
        case Op::kAdd:
          acc(a, aj);
          acc(b, aj);
          break;
        case Op::kSub:
          acc(a, aj);
          acc(b, neg(aj));
          break;
        case Op::kMul:
          acc(a, mul(aj, b));
          acc(b, mul(aj, a));
          break;
        case Op::kNeg:
          acc(a, neg(aj));
          break;
        case Op::kDiv:
          acc(a, div(aj, b));
          acc(b, neg(div(mul(aj, id), b)));
          break;
        case Op::kTanh:
          acc(a, mul(aj, sub(lazy_one(), square(id))));
          break;
        case Op::kRelu:
          acc(a, mul(aj, step(a)));
          break;
        case Op::kExp:
          acc(a, mul(aj, id));
          break;
        case Op::kLog:
          acc(a, div(aj, a));
          break;
        case Op::kSquare:
          acc(a, mul(aj, mul(lazy_two(), a)));
          break;
        case Op::kAbs:
          acc(a, mul(aj, sign(a)));
          break;
        case Op::kMax: {
          const NodeId ge = step(sub(a, b));
          acc(a, mul(aj, ge));
          acc(b, mul(aj, sub(lazy_one(), ge)));
          break;
        }
      }
    }
    if (id == lo) break;
  }

  std::vector<NodeId> out;
  out.reserve(inputs.size());
  for (const NodeId id : inputs) {
    const NodeId g = (id >= lo && id <= output) ? adj[id - lo] : kNone;
    out.push_back(g != kNone ? g : constant(0.0));
  }
  return out;
}

}  // namespace robustrl::diffcore
