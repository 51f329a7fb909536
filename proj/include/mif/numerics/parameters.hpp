#pragma once

#include "mif/numerics/random.hpp"
#include "mif/numerics/tensor.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace mif {

using ParamId = std::uint32_t;

// Named, ordered collection of trainable tensors. Order is insertion order and
// is what checkpoints, optimizers and gradient tables align on.
class ParameterSet {
 public:
  ParamId add(std::string name, Tensor value);

  std::optional<ParamId> find(std::string_view name) const;
  ParamId id(std::string_view name) const;
  bool contains(std::string_view name) const { return find(name).has_value(); }

  std::size_t size() const noexcept { return values_.size(); }
  const std::string& name(ParamId id) const { return names_.at(id); }
  Tensor& value(ParamId id) { return values_.at(id); }
  const Tensor& value(ParamId id) const { return values_.at(id); }
  Tensor& operator[](std::string_view name) { return values_[id(name)]; }
  const Tensor& operator[](std::string_view name) const { return values_[id(name)]; }

  const std::vector<std::string>& names() const noexcept { return names_; }
  std::size_t scalar_count() const;

  friend bool operator==(const ParameterSet& a, const ParameterSet& b) {
    return a.names_ == b.names_ && a.values_ == b.values_;
  }

 private:
  std::vector<std::string> names_;
  std::vector<Tensor> values_;
  std::unordered_map<std::string, ParamId> index_;
};

// One gradient tensor per parameter, aligned with ParameterSet order.
using GradientTable = std::vector<Tensor>;

GradientTable zero_gradients(const ParameterSet& params);
void accumulate(GradientTable& into, const GradientTable& grads);
void scale(GradientTable& grads, double factor);
double global_norm(const GradientTable& grads);
// Rescales in place so the global L2 norm is at most max_norm; returns the
// norm before clipping.
double clip_global_norm(GradientTable& grads, double max_norm);

// Initializers. Weight matrices use fan-based (Xavier uniform) scaling,
// embeddings uniform(-0.1, 0.1), biases zero.
Tensor xavier_uniform(std::size_t rows, std::size_t cols, Rng& rng);
Tensor uniform_tensor(std::vector<std::size_t> shape, double limit, Rng& rng);

}  // namespace mif
