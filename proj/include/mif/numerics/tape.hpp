#pragma once

#include "mif/numerics/parameters.hpp"
#include "mif/numerics/tensor.hpp"

#include <cstdint>
#include <deque>
#include <functional>
#include <initializer_list>
#include <span>

namespace mif {

class Tape;

// Handle to a node recorded on a Tape.
struct Var {
  Tape* tape = nullptr;
  std::uint32_t id = 0;

  const Tensor& value() const;
  std::size_t size() const { return value().size(); }
  double scalar() const { return value()[0]; }
};

// Dynamic reverse-mode tape. A fresh tape is built for every forward pass;
// node references stay stable while the tape grows.
class Tape {
 public:
  using Backward = std::function<void(Tape&, std::uint32_t self)>;

  // With record == false no backward rules are stored (inference mode).
  explicit Tape(const ParameterSet* params = nullptr, bool record = true);

  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Tensor value);
  // Leaf that receives a gradient; used for inputs in tests and grad checks.
  Var variable(Tensor value);
  // Leaf bound to a parameter; repeated calls return the same node.
  Var param(ParamId id);

  // Records a custom operation. `backward` reads grad(self) and accumulates
  // into the grads of its inputs. It is dropped when no input needs a gradient.
  Var record(Tensor value, std::span<const Var> inputs, Backward backward);
  Var record(Tensor value, std::initializer_list<Var> inputs, Backward backward) {
    return record(std::move(value), std::span<const Var>(inputs.begin(), inputs.size()),
                  std::move(backward));
  }

  const Tensor& value(std::uint32_t id) const;
  const Tensor& value(Var v) const { return value(v.id); }
  // Gradient buffer of a node, zero-initialised on first access.
  Tensor& grad(std::uint32_t id);
  bool needs_grad(Var v) const { return nodes_[v.id].needs_grad; }
  bool recording() const noexcept { return record_; }
  std::size_t node_count() const noexcept { return nodes_.size(); }
  const ParameterSet* parameters() const noexcept { return params_; }

  // Seeds d(loss)/d(loss) = 1 and runs every recorded rule once, newest first.
  void backward(Var loss);

  // Gradient for each parameter of the bound set; zero where unreachable.
  GradientTable parameter_gradients() const;
  // Gradient accumulated on a variable leaf (zeros when unreachable).
  Tensor gradient(Var v) const;

 private:
  struct Node {
    Tensor value;
    const Tensor* ref = nullptr;
    Tensor grad;
    Backward backward;
    std::int64_t param = -1;
    bool needs_grad = false;
  };

  Var push(Node node);

  const ParameterSet* params_;
  bool record_;
  bool backward_done_ = false;
  std::deque<Node> nodes_;
  std::vector<std::int64_t> param_nodes_;
};

// backward() followed by parameter_gradients().
GradientTable backward(Tape& tape, Var loss);

}  // namespace mif
