#include "mif/numerics/nn.hpp"

#include "mif/errors.hpp"

namespace mif::nn {

LstmWeights add_lstm(ParameterSet& params, const std::string& prefix, std::size_t input_dim,
                     std::size_t hidden_dim, Rng& rng) {
  LstmWeights w;
  w.input_dim = input_dim;
  w.hidden_dim = hidden_dim;
  w.weight = params.add(prefix + ".W", xavier_uniform(4 * hidden_dim, input_dim + hidden_dim, rng));
  Tensor bias = Tensor::zeros(4 * hidden_dim);
  for (std::size_t j = hidden_dim; j < 2 * hidden_dim; ++j) bias[j] = 1.0;
  w.bias = params.add(prefix + ".b", std::move(bias));
  return w;
}

LstmWeights find_lstm(const ParameterSet& params, const std::string& prefix) {
  LstmWeights w;
  w.weight = params.id(prefix + ".W");
  w.bias = params.id(prefix + ".b");
  const Tensor& W = params.value(w.weight);
  w.hidden_dim = W.rows() / 4;
  w.input_dim = W.cols() - w.hidden_dim;
  return w;
}

LstmState lstm_cell(Tape& tape, const LstmWeights& weights, Var input, Var h_prev, Var c_prev) {
  const std::size_t H = weights.hidden_dim;
  if (input.value().rank() != 1 || input.size() != weights.input_dim) {
    throw ShapeError("lstm_cell: operand 'input' has shape " + shape_string(input.value().shape()) +
                     ", expected [" + std::to_string(weights.input_dim) + "]");
  }
  if (h_prev.value().rank() != 1 || h_prev.size() != H) {
    throw ShapeError("lstm_cell: operand 'h_prev' has shape " +
                     shape_string(h_prev.value().shape()) + ", expected [" + std::to_string(H) + "]");
  }
  if (c_prev.value().rank() != 1 || c_prev.size() != H) {
    throw ShapeError("lstm_cell: operand 'c_prev' has shape " +
                     shape_string(c_prev.value().shape()) + ", expected [" + std::to_string(H) + "]");
  }
  Var gates = ops::affine(tape.param(weights.weight), ops::concat({input, h_prev}),
                          tape.param(weights.bias));
  Var i = ops::sigmoid(ops::slice(gates, 0, H));
  Var f = ops::sigmoid(ops::slice(gates, H, H));
  Var g = ops::tanh(ops::slice(gates, 2 * H, H));
  Var o = ops::sigmoid(ops::slice(gates, 3 * H, H));
  Var c = ops::add(ops::mul(f, c_prev), ops::mul(i, g));
  Var h = ops::mul(o, ops::tanh(c));
  return {h, c};
}

std::vector<Var> bilstm(Tape& tape, const LstmWeights& forward, const LstmWeights& backward,
                        const std::vector<Var>& inputs) {
  const std::size_t N = inputs.size();
  std::vector<Var> fwd(N), bwd(N);
  LstmState s{tape.constant(Tensor::zeros(forward.hidden_dim)), tape.constant(Tensor::zeros(forward.hidden_dim))};
  for (std::size_t n = 0; n < N; ++n) {
    s = lstm_cell(tape, forward, inputs[n], s.h, s.c);
    fwd[n] = s.h;
  }
  s = {tape.constant(Tensor::zeros(backward.hidden_dim)), tape.constant(Tensor::zeros(backward.hidden_dim))};
  for (std::size_t n = N; n-- > 0;) {
    s = lstm_cell(tape, backward, inputs[n], s.h, s.c);
    bwd[n] = s.h;
  }
  std::vector<Var> out(N);
  for (std::size_t n = 0; n < N; ++n) out[n] = ops::concat({fwd[n], bwd[n]});
  return out;
}

Linear add_linear(ParameterSet& params, const std::string& prefix, std::size_t in, std::size_t out,
                  Rng& rng) {
  Linear l;
  l.weight = params.add(prefix + ".W", xavier_uniform(out, in, rng));
  l.bias = params.add(prefix + ".b", Tensor::zeros(out));
  return l;
}

Linear find_linear(const ParameterSet& params, const std::string& prefix) {
  return {params.id(prefix + ".W"), params.id(prefix + ".b")};
}

Var apply(Tape& tape, const Linear& layer, Var x) {
  return ops::affine(tape.param(layer.weight), x, tape.param(layer.bias));
}

Tensor dropout_mask(std::size_t n, double p, Rng& rng) {
  Tensor mask({n}, 1.0);
  if (p <= 0.0) return mask;
  const double keep = 1.0 / (1.0 - p);
  for (auto& m : mask.values()) m = bernoulli(rng, p) ? 0.0 : keep;
  return mask;
}

}  // namespace mif::nn
