#include "mif/numerics/adam.hpp"

#include "mif/errors.hpp"

#include <cmath>

namespace mif {

AdamState AdamState::init(const ParameterSet& params, AdamConfig config) {
  AdamState s;
  s.config = config;
  for (ParamId i = 0; i < params.size(); ++i) {
    s.first_moment.emplace_back(params.value(i).shape());
    s.second_moment.emplace_back(params.value(i).shape());
  }
  return s;
}

void adam_step(ParameterSet& params, const GradientTable& grads, AdamState& state) {
  if (grads.size() != params.size() || state.first_moment.size() != params.size()) {
    throw ShapeError("adam_step: parameter, gradient and state counts differ (" +
                     std::to_string(params.size()) + ", " + std::to_string(grads.size()) + ", " +
                     std::to_string(state.first_moment.size()) + ")");
  }
  for (ParamId i = 0; i < params.size(); ++i) {
    const Tensor& p = params.value(i);
    if (!p.same_shape(grads[i]) || !p.same_shape(state.first_moment[i])) {
      throw ShapeError("adam_step: shape mismatch for '" + params.name(i) + "': param " +
                       shape_string(p.shape()) + ", grad " + shape_string(grads[i].shape()));
    }
  }
  ++state.step;
  const auto& c = state.config;
  const double t = double(state.step);
  const double correction1 = 1.0 - std::pow(c.beta1, t);
  const double correction2 = 1.0 - std::pow(c.beta2, t);
  for (ParamId i = 0; i < params.size(); ++i) {
    auto m = state.first_moment[i].vec().array();
    auto v = state.second_moment[i].vec().array();
    const auto g = grads[i].vec().array();
    m = c.beta1 * m + (1.0 - c.beta1) * g;
    v = c.beta2 * v + (1.0 - c.beta2) * g * g;
    params.value(i).vec().array() -=
        c.learning_rate * (m / correction1) / ((v / correction2).sqrt() + c.epsilon);
  }
}

}  // namespace mif
