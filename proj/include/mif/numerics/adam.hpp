#pragma once

#include "mif/numerics/parameters.hpp"

#include <cstdint>
#include <vector>

namespace mif {

struct AdamConfig {
  double learning_rate = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct AdamState {
  AdamConfig config;
  std::vector<Tensor> first_moment;
  std::vector<Tensor> second_moment;
  std::uint64_t step = 0;

  static AdamState init(const ParameterSet& params, AdamConfig config = {});
};

// One bias-corrected Adam update of every parameter.
void adam_step(ParameterSet& params, const GradientTable& grads, AdamState& state);

}  // namespace mif
