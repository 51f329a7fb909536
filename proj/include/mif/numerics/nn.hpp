#pragma once

#include "mif/numerics/ops.hpp"
#include "mif/numerics/parameters.hpp"

#include <string>
#include <vector>

namespace mif::nn {

// Parameters of one LSTM cell: W is 4H x (input + H) over [x; h], gates in
// the order input, forget, candidate, output.
struct LstmWeights {
  ParamId weight = 0;
  ParamId bias = 0;
  std::size_t input_dim = 0;
  std::size_t hidden_dim = 0;
};

// Registers `<prefix>.W` and `<prefix>.b`; forget-gate bias starts at 1.0.
LstmWeights add_lstm(ParameterSet& params, const std::string& prefix, std::size_t input_dim,
                     std::size_t hidden_dim, Rng& rng);
// Binds to an existing `<prefix>.W` / `<prefix>.b` pair.
LstmWeights find_lstm(const ParameterSet& params, const std::string& prefix);

struct LstmState {
  Var h;
  Var c;
};

// h = o * tanh(c), c = f * c_prev + i * g.
LstmState lstm_cell(Tape& tape, const LstmWeights& weights, Var input, Var h_prev, Var c_prev);

// Runs `forward` left to right and `backward` right to left from zero
// states; row n of the result is [h_fwd(n); h_bwd(n)].
std::vector<Var> bilstm(Tape& tape, const LstmWeights& forward, const LstmWeights& backward,
                        const std::vector<Var>& inputs);

struct Linear {
  ParamId weight = 0;
  ParamId bias = 0;
};

Linear add_linear(ParameterSet& params, const std::string& prefix, std::size_t in, std::size_t out,
                  Rng& rng);
Linear find_linear(const ParameterSet& params, const std::string& prefix);
Var apply(Tape& tape, const Linear& layer, Var x);

// Inverted-dropout mask: entries are 0 or 1/(1-p).
Tensor dropout_mask(std::size_t n, double p, Rng& rng);

}  // namespace mif::nn
