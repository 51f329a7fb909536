#include "mif/numerics/tape.hpp"

#include "mif/errors.hpp"

namespace mif {

const Tensor& Var::value() const { return tape->value(id); }

Tape::Tape(const ParameterSet* params, bool record) : params_(params), record_(record) {
  if (params_) param_nodes_.assign(params_->size(), -1);
}

Var Tape::push(Node node) {
  const auto id = std::uint32_t(nodes_.size());
  nodes_.push_back(std::move(node));
  return Var{this, id};
}

Var Tape::constant(Tensor value) {
  Node n;
  n.value = std::move(value);
  return push(std::move(n));
}

Var Tape::variable(Tensor value) {
  Node n;
  n.value = std::move(value);
  n.needs_grad = record_;
  return push(std::move(n));
}

Var Tape::param(ParamId id) {
  if (!params_) throw ContractError("tape has no parameter set bound");
  if (id >= params_->size()) throw IndexError("parameter id " + std::to_string(id) + " out of range");
  if (param_nodes_[id] >= 0) return Var{this, std::uint32_t(param_nodes_[id])};
  Node n;
  n.ref = &params_->value(id);
  n.param = id;
  n.needs_grad = record_;
  Var v = push(std::move(n));
  param_nodes_[id] = v.id;
  return v;
}

Var Tape::record(Tensor value, std::span<const Var> inputs, Backward backward) {
  Node n;
  n.value = std::move(value);
  if (record_) {
    for (const Var& in : inputs) {
      if (in.tape != this) throw ContractError("operation mixes vars from different tapes");
      n.needs_grad = n.needs_grad || nodes_[in.id].needs_grad;
    }
    if (n.needs_grad) n.backward = std::move(backward);
  }
  return push(std::move(n));
}

const Tensor& Tape::value(std::uint32_t id) const {
  const Node& n = nodes_[id];
  return n.ref ? *n.ref : n.value;
}

Tensor& Tape::grad(std::uint32_t id) {
  Node& n = nodes_[id];
  if (n.grad.empty() && !value(id).empty()) n.grad = Tensor(value(id).shape());
  return n.grad;
}

void Tape::backward(Var loss) {
  if (loss.tape != this) throw ContractError("backward: loss belongs to another tape");
  if (value(loss.id).size() != 1) {
    throw ContractError("backward: loss must be a scalar, got shape " +
                        shape_string(value(loss.id).shape()));
  }
  if (backward_done_) throw ContractError("backward: tape already consumed");
  backward_done_ = true;
  if (!nodes_[loss.id].needs_grad) return;
  grad(loss.id)[0] = 1.0;
  for (std::size_t i = loss.id + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (!n.backward || n.grad.empty()) continue;
    n.backward(*this, std::uint32_t(i));
  }
}

GradientTable Tape::parameter_gradients() const {
  if (!params_) return {};
  GradientTable grads = zero_gradients(*params_);
  for (std::size_t p = 0; p < param_nodes_.size(); ++p) {
    if (param_nodes_[p] < 0) continue;
    const Node& n = nodes_[std::size_t(param_nodes_[p])];
    if (!n.grad.empty()) grads[p] = n.grad;
  }
  return grads;
}

Tensor Tape::gradient(Var v) const {
  const Node& n = nodes_[v.id];
  if (n.grad.empty()) return Tensor(value(v.id).shape());
  return n.grad;
}

GradientTable backward(Tape& tape, Var loss) {
  tape.backward(loss);
  return tape.parameter_gradients();
}

}  // namespace mif
