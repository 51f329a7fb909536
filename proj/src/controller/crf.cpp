#include "mif/controller/crf.hpp"

#include "mif/errors.hpp"
#include "mif/numerics/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace mif::controller {
namespace {

double lse(std::span<const double> v) { return ops::logsumexp_values(v); }

// alpha[n][k]: log-sum of scores of prefixes ending in label k at position n.
Tensor forward_table(const Tensor& U, const Tensor& B, const Tensor& start) {
  const std::size_t N = U.rows(), K = U.cols();
  Tensor alpha = Tensor::zeros(N, K);
  std::vector<double> buf(K);
  for (std::size_t k = 0; k < K; ++k) alpha.at(0, k) = start[k] + U.at(0, k);
  for (std::size_t n = 1; n < N; ++n) {
    for (std::size_t k = 0; k < K; ++k) {
      for (std::size_t j = 0; j < K; ++j) buf[j] = alpha.at(n - 1, j) + B.at(j, k);
      alpha.at(n, k) = U.at(n, k) + lse(buf);
    }
  }
  return alpha;
}

Tensor backward_table(const Tensor& U, const Tensor& B) {
  const std::size_t N = U.rows(), K = U.cols();
  Tensor beta = Tensor::zeros(N, K);
  std::vector<double> buf(K);
  for (std::size_t n = N - 1; n-- > 0;) {
    for (std::size_t j = 0; j < K; ++j) {
      for (std::size_t k = 0; k < K; ++k) buf[k] = B.at(j, k) + U.at(n + 1, k) + beta.at(n + 1, k);
      beta.at(n, j) = lse(buf);
    }
  }
  return beta;
}

double final_lse(const Tensor& alpha) {
  const std::size_t N = alpha.rows(), K = alpha.cols();
  std::vector<double> last(K);
  for (std::size_t k = 0; k < K; ++k) last[k] = alpha.at(N - 1, k);
  return lse(last);
}

}  // namespace

void check_crf_shapes(const Tensor& U, const Tensor& B, const Tensor& start) {
  if (U.rank() != 2 || U.rows() == 0 || U.cols() == 0) {
    throw ShapeError("crf: unary scores have shape " + shape_string(U.shape()) + ", expected a non-empty N x K matrix");
  }
  const std::size_t K = U.cols();
  if (B.rank() != 2 || B.rows() != K || B.cols() != K) {
    throw ShapeError("crf: transitions have shape " + shape_string(B.shape()) + ", expected [" +
                     std::to_string(K) + ", " + std::to_string(K) + "]");
  }
  if (start.rank() != 1 || start.size() != K) {
    throw ShapeError("crf: start scores have shape " + shape_string(start.shape()) + ", expected [" +
                     std::to_string(K) + "]");
  }
}

double sequence_score(const Tensor& U, const Tensor& B, const Tensor& start, std::span<const int> labels) {
  check_crf_shapes(U, B, start);
  if (labels.size() != U.rows()) {
    throw ShapeError("crf: label sequence has length " + std::to_string(labels.size()) + ", expected " +
                     std::to_string(U.rows()));
  }
  for (int l : labels)
    if (l < 0 || std::size_t(l) >= U.cols()) throw IndexError("crf: label " + std::to_string(l) + " out of range");
  double s = start[std::size_t(labels[0])];
  for (std::size_t n = 0; n < labels.size(); ++n) {
    s += U.at(n, std::size_t(labels[n]));
    if (n > 0) s += B.at(std::size_t(labels[n - 1]), std::size_t(labels[n]));
  }
  return s;
}

double log_partition(const Tensor& U, const Tensor& B, const Tensor& start) {
  check_crf_shapes(U, B, start);
  return final_lse(forward_table(U, B, start));
}

CrfPath viterbi_decode(const Tensor& U, const Tensor& B, const Tensor& start) {
  check_crf_shapes(U, B, start);
  const std::size_t N = U.rows(), K = U.cols();
  Tensor best = Tensor::zeros(N, K);
  std::vector<int> back(N * K, 0);
  for (std::size_t k = 0; k < K; ++k) best.at(0, k) = start[k] + U.at(0, k);
  for (std::size_t n = 1; n < N; ++n) {
    for (std::size_t k = 0; k < K; ++k) {
      double top = -std::numeric_limits<double>::infinity();
      int arg = 0;
      for (std::size_t j = 0; j < K; ++j) {
        const double v = best.at(n - 1, j) + B.at(j, k);
        if (v > top) {
          top = v;
          arg = int(j);
        }
      }
      best.at(n, k) = top + U.at(n, k);
      back[n * K + k] = arg;
    }
  }
  CrfPath path;
  path.labels.assign(N, 0);
  double top = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < K; ++k) {
    if (best.at(N - 1, k) > top) {
      top = best.at(N - 1, k);
      path.labels[N - 1] = int(k);
    }
  }
  for (std::size_t n = N - 1; n > 0; --n) path.labels[n - 1] = back[n * K + std::size_t(path.labels[n])];
  path.score = sequence_score(U, B, start, path.labels);
  return path;
}

Var crf_nll(Var unary, Var transitions, Var start, std::span<const int> gold) {
  const Tensor& U = unary.value();
  const Tensor& B = transitions.value();
  const Tensor& S = start.value();
  const double gold_score = sequence_score(U, B, S, gold);
  const std::size_t N = U.rows(), K = U.cols();
  const Tensor alpha = forward_table(U, B, S);
  const Tensor beta = backward_table(U, B);
  const double log_z = final_lse(alpha);

  // Gradients are marginals minus gold indicators.
  Tensor dU = Tensor::zeros(N, K), dB = Tensor::zeros(K, K), dS = Tensor::zeros(K);
  for (std::size_t n = 0; n < N; ++n)
    for (std::size_t k = 0; k < K; ++k) dU.at(n, k) = std::exp(alpha.at(n, k) + beta.at(n, k) - log_z);
  for (std::size_t k = 0; k < K; ++k) dS[k] = dU.at(0, k);
  for (std::size_t n = 1; n < N; ++n)
    for (std::size_t j = 0; j < K; ++j)
      for (std::size_t k = 0; k < K; ++k)
        dB.at(j, k) += std::exp(alpha.at(n - 1, j) + B.at(j, k) + U.at(n, k) + beta.at(n, k) - log_z);
  for (std::size_t n = 0; n < N; ++n) {
    const auto g = std::size_t(gold[n]);
    dU.at(n, g) -= 1.0;
    if (n > 0) dB.at(std::size_t(gold[n - 1]), g) -= 1.0;
  }
  dS[std::size_t(gold[0])] -= 1.0;

  Tensor out = Tensor::vector({std::max(0.0, log_z - gold_score)});
  const auto iu = unary.id, ib = transitions.id, is = start.id;
  return unary.tape->record(std::move(out), {unary, transitions, start},
                            [iu, ib, is, dU, dB, dS](Tape& t, std::uint32_t self) {
                              const double g = t.grad(self)[0];
                              if (t.needs_grad(Var{&t, iu})) t.grad(iu).vec() += g * dU.vec();
                              if (t.needs_grad(Var{&t, ib})) t.grad(ib).vec() += g * dB.vec();
                              if (t.needs_grad(Var{&t, is})) t.grad(is).vec() += g * dS.vec();
                            });
}

}  // namespace mif::controller
