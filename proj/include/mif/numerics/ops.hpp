#pragma once

#include "mif/numerics/tape.hpp"

#include <span>
#include <vector>

// Differentiable primitives. All operate on rank-1 vectors unless noted;
// shape mismatches throw ShapeError naming the operation and operand.
namespace mif::ops {

Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var scale(Var a, double factor);
Var sigmoid(Var a);
Var tanh(Var a);
Var sum(Var a);
Var dot(Var a, Var b);

// W (m x n) times x (n).
Var matvec(Var w, Var x);
// W x + b.
Var affine(Var w, Var x, Var b);
// W^T y for W (m x n), y (m).
Var matvec_t(Var w, Var y);

Var concat(std::span<const Var> parts);
Var concat(std::initializer_list<Var> parts);
Var slice(Var a, std::size_t offset, std::size_t length);
// Row `index` of a matrix, as a vector.
Var row(Var matrix, std::size_t index);
// Stacks equal-length vectors into an N x D matrix.
Var stack_rows(std::span<const Var> rows);

Var softmax(Var logits);
Var log_softmax(Var logits);
Var logsumexp(Var logits);
// -log softmax(logits)[target].
Var cross_entropy(Var logits, std::size_t target);

// Elementwise product with a fixed mask (inverted-dropout scaling included).
Var apply_mask(Var a, const Tensor& mask);

// Plain (non-recorded) numerics shared with oracles and decoders.
Tensor softmax_values(const Tensor& logits);
double logsumexp_values(std::span<const double> values);

}  // namespace mif::ops
