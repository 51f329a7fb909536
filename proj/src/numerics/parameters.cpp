#include "mif/numerics/parameters.hpp"

#include "mif/errors.hpp"

#include <cmath>

namespace mif {

ParamId ParameterSet::add(std::string name, Tensor value) {
  if (index_.contains(name)) throw ContractError("parameter '" + name + "' already defined");
  const auto id = ParamId(values_.size());
  index_.emplace(name, id);
  names_.push_back(std::move(name));
  values_.push_back(std::move(value));
  return id;
}

std::optional<ParamId> ParameterSet::find(std::string_view name) const {
  auto it = index_.find(std::string(name));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

ParamId ParameterSet::id(std::string_view name) const {
  if (auto found = find(name)) return *found;
  throw NotFoundError("no parameter named '" + std::string(name) + "'");
}

std::size_t ParameterSet::scalar_count() const {
  std::size_t n = 0;
  for (const auto& v : values_) n += v.size();
  return n;
}

GradientTable zero_gradients(const ParameterSet& params) {
  GradientTable grads;
  grads.reserve(params.size());
  for (ParamId i = 0; i < params.size(); ++i) grads.emplace_back(params.value(i).shape());
  return grads;
}

void accumulate(GradientTable& into, const GradientTable& grads) {
  if (into.size() != grads.size()) throw ShapeError("accumulate: gradient table sizes differ");
  for (std::size_t i = 0; i < into.size(); ++i) {
    if (!into[i].same_shape(grads[i])) {
      throw ShapeError("accumulate: gradient " + std::to_string(i) + " shape " +
                       shape_string(grads[i].shape()) + " vs " + shape_string(into[i].shape()));
    }
    into[i].vec() += grads[i].vec();
  }
}

void scale(GradientTable& grads, double factor) {
  for (auto& g : grads) g.vec() *= factor;
}

double global_norm(const GradientTable& grads) {
  double sq = 0.0;
  for (const auto& g : grads) sq += g.vec().squaredNorm();
  return std::sqrt(sq);
}

double clip_global_norm(GradientTable& grads, double max_norm) {
  const double norm = global_norm(grads);
  if (norm > max_norm && norm > 0.0) scale(grads, max_norm / norm);
  return norm;
}

Tensor xavier_uniform(std::size_t rows, std::size_t cols, Rng& rng) {
  const double limit = std::sqrt(6.0 / double(rows + cols));
  return uniform_tensor({rows, cols}, limit, rng);
}

Tensor uniform_tensor(std::vector<std::size_t> shape, double limit, Rng& rng) {
  Tensor t(std::move(shape));
  for (auto& v : t.values()) v = uniform(rng, -limit, limit);
  return t;
}

}  // namespace mif
