#include "mif/numerics/grad_check.hpp"

#include "mif/errors.hpp"

#include <algorithm>
#include <cmath>

namespace mif {
namespace {

double evaluate(const LossClosure& loss, const ParameterSet& params) {
  Tape tape(&params, false);
  return loss(tape).scalar();
}

}  // namespace

double relative_error(double analytic, double numeric, double floor) {
  const double denom = std::max({std::abs(analytic), std::abs(numeric), floor});
  return std::abs(analytic - numeric) / denom;
}

GradCheckReport grad_check(const LossClosure& loss, ParameterSet& params, double tolerance,
                           const GradCheckOptions& options) {
  GradientTable analytic;
  double base = 0.0;
  {
    Tape tape(&params);
    Var l = loss(tape);
    base = l.scalar();
    analytic = backward(tape, l);
  }
  const double again = evaluate(loss, params);
  if (again != base) {
    throw DeterminismError("grad_check: forward closure is not deterministic (" +
                           std::to_string(base) + " vs " + std::to_string(again) + ")");
  }

  GradCheckReport report;
  report.tolerance = tolerance;
  for (ParamId p = 0; p < params.size(); ++p) {
    GradCheckBlock block;
    block.name = params.name(p);
    Tensor& value = params.value(p);
    const std::size_t n = value.size();
    std::size_t stride = 1;
    if (options.max_elements_per_block > 0 && n > options.max_elements_per_block) {
      stride = (n + options.max_elements_per_block - 1) / options.max_elements_per_block;
    }
    for (std::size_t i = 0; i < n; i += stride) {
      const double saved = value[i];
      value[i] = saved + options.step;
      const double up = evaluate(loss, params);
      value[i] = saved - options.step;
      const double down = evaluate(loss, params);
      value[i] = saved;
      const double numeric = (up - down) / (2.0 * options.step);
      const double err = relative_error(analytic[p][i], numeric, options.floor);
      if (i == 0 || err > block.max_relative_error) {
        block.max_relative_error = err;
        block.worst_index = i;
        block.analytic = analytic[p][i];
        block.numeric = numeric;
      }
    }
    if (block.max_relative_error >= report.max_relative_error) {
      report.max_relative_error = block.max_relative_error;
      report.worst_block = block.name;
    }
    report.blocks.push_back(std::move(block));
  }
  report.passed = report.max_relative_error < tolerance;
  return report;
}

}  // namespace mif
