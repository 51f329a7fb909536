#pragma once

#include "mif/numerics/tape.hpp"

#include <functional>
#include <string>
#include <vector>

namespace mif {

// Builds a scalar loss on the given tape; must read parameters via
// tape.param() so perturbations are visible.
using LossClosure = std::function<Var(Tape&)>;

struct GradCheckBlock {
  std::string name;
  double max_relative_error = 0.0;
  std::size_t worst_index = 0;
  double analytic = 0.0;
  double numeric = 0.0;
};

struct GradCheckReport {
  std::vector<GradCheckBlock> blocks;
  double tolerance = 0.0;
  bool passed = true;
  // Name of the block with the largest error.
  std::string worst_block;
  double max_relative_error = 0.0;
};

struct GradCheckOptions {
  double step = 1e-5;
  // Denominator floor; keeps round-off on vanishing gradients from being
  // reported as large relative errors.
  double floor = 1e-5;
  // 0 checks every element; otherwise an evenly strided subset per block.
  std::size_t max_elements_per_block = 0;
};

double relative_error(double analytic, double numeric, double floor = 1e-5);

// Compares tape gradients with central differences for every parameter.
// Throws DeterminismError when two evaluations at the same point disagree.
GradCheckReport grad_check(const LossClosure& loss, ParameterSet& params, double tolerance,
                           const GradCheckOptions& options = {});

}  // namespace mif
