#pragma once

#include "mif/numerics/tape.hpp"

#include <span>
#include <vector>

// Linear-chain CRF over K labels. Scores are an N x K unary matrix U, a K x K
// transition table B (row = previous label) and a K start vector:
//   score(t) = start[t_1] + sum_n U[n, t_n] + sum_{n>1} B[t_{n-1}, t_n].
namespace mif::controller {

struct CrfPath {
  std::vector<int> labels;
  double score = 0.0;
};

double sequence_score(const Tensor& unary, const Tensor& transitions, const Tensor& start,
                      std::span<const int> labels);

// Forward algorithm in log space.
double log_partition(const Tensor& unary, const Tensor& transitions, const Tensor& start);

// Highest-scoring label sequence. Ties go to the lowest label index, both for
// the final label and for every back-pointer.
CrfPath viterbi_decode(const Tensor& unary, const Tensor& transitions, const Tensor& start);

// log Z - score(gold) as one recorded op; the backward rule uses the
// forward-backward marginals.
Var crf_nll(Var unary, Var transitions, Var start, std::span<const int> gold);

// Checks that the three tensors form a consistent CRF; throws ShapeError.
void check_crf_shapes(const Tensor& unary, const Tensor& transitions, const Tensor& start);

}  // namespace mif::controller
