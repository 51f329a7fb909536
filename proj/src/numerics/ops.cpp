#include "mif/numerics/ops.hpp"

#include "mif/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace mif::ops {
namespace {

[[noreturn]] void shape_fail(const char* op, const char* operand, const Tensor& t,
                             const std::string& expected) {
  throw ShapeError(std::string(op) + ": operand '" + operand + "' has shape " +
                   shape_string(t.shape()) + ", expected " + expected);
}

void require_vector(const char* op, const char* operand, const Tensor& t) {
  if (t.rank() != 1) shape_fail(op, operand, t, "a vector");
}

void require_same(const char* op, const Tensor& a, const Tensor& b) {
  if (!a.same_shape(b)) shape_fail(op, "b", b, shape_string(a.shape()));
}

bool wants(Tape& t, std::uint32_t id) { return t.needs_grad(Var{&t, id}); }

double sigmoid_scalar(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace

Var add(Var a, Var b) {
  require_same("add", a.value(), b.value());
  Tensor out = a.value();
  out.vec() += b.value().vec();
  const auto ia = a.id, ib = b.id;
  return a.tape->record(std::move(out), {a, b}, [ia, ib](Tape& t, std::uint32_t self) {
    const Tensor& g = t.grad(self);
    if (wants(t, ia)) t.grad(ia).vec() += g.vec();
    if (wants(t, ib)) t.grad(ib).vec() += g.vec();
  });
}

Var sub(Var a, Var b) {
  require_same("sub", a.value(), b.value());
  Tensor out = a.value();
  out.vec() -= b.value().vec();
  const auto ia = a.id, ib = b.id;
  return a.tape->record(std::move(out), {a, b}, [ia, ib](Tape& t, std::uint32_t self) {
    const Tensor& g = t.grad(self);
    if (wants(t, ia)) t.grad(ia).vec() += g.vec();
    if (wants(t, ib)) t.grad(ib).vec() -= g.vec();
  });
}

Var mul(Var a, Var b) {
  require_same("mul", a.value(), b.value());
  Tensor out = a.value();
  out.vec().array() *= b.value().vec().array();
  const auto ia = a.id, ib = b.id;
  return a.tape->record(std::move(out), {a, b}, [ia, ib](Tape& t, std::uint32_t self) {
    const Tensor& g = t.grad(self);
    if (wants(t, ia)) t.grad(ia).vec().array() += g.vec().array() * t.value(ib).vec().array();
    if (wants(t, ib)) t.grad(ib).vec().array() += g.vec().array() * t.value(ia).vec().array();
  });
}

Var scale(Var a, double factor) {
  Tensor out = a.value();
  out.vec() *= factor;
  const auto ia = a.id;
  return a.tape->record(std::move(out), {a}, [ia, factor](Tape& t, std::uint32_t self) {
    t.grad(ia).vec() += factor * t.grad(self).vec();
  });
}

Var sigmoid(Var a) {
  Tensor out = a.value();
  for (auto& v : out.values()) v = sigmoid_scalar(v);
  const auto ia = a.id;
  return a.tape->record(std::move(out), {a}, [ia](Tape& t, std::uint32_t self) {
    const auto y = t.value(self).vec().array();
    t.grad(ia).vec().array() += t.grad(self).vec().array() * y * (1.0 - y);
  });
}

Var tanh(Var a) {
  Tensor out = a.value();
  for (auto& v : out.values()) v = std::tanh(v);
  const auto ia = a.id;
  return a.tape->record(std::move(out), {a}, [ia](Tape& t, std::uint32_t self) {
    const auto y = t.value(self).vec().array();
    t.grad(ia).vec().array() += t.grad(self).vec().array() * (1.0 - y * y);
  });
}

Var sum(Var a) {
  Tensor out = Tensor::vector({a.value().vec().sum()});
  const auto ia = a.id;
  return a.tape->record(std::move(out), {a}, [ia](Tape& t, std::uint32_t self) {
    t.grad(ia).vec().array() += t.grad(self)[0];
  });
}

Var dot(Var a, Var b) {
  require_same("dot", a.value(), b.value());
  Tensor out = Tensor::vector({a.value().vec().dot(b.value().vec())});
  const auto ia = a.id, ib = b.id;
  return a.tape->record(std::move(out), {a, b}, [ia, ib](Tape& t, std::uint32_t self) {
    const double g = t.grad(self)[0];
    if (wants(t, ia)) t.grad(ia).vec() += g * t.value(ib).vec();
    if (wants(t, ib)) t.grad(ib).vec() += g * t.value(ia).vec();
  });
}

Var matvec(Var w, Var x) {
  const Tensor& W = w.value();
  const Tensor& X = x.value();
  if (W.rank() != 2) shape_fail("matvec", "W", W, "a matrix");
  require_vector("matvec", "x", X);
  if (X.size() != W.cols()) shape_fail("matvec", "x", X, "[" + std::to_string(W.cols()) + "]");
  Tensor out = Tensor::zeros(W.rows());
  out.vec().noalias() = W.matrix() * X.vec();
  const auto iw = w.id, ix = x.id;
  return w.tape->record(std::move(out), {w, x}, [iw, ix](Tape& t, std::uint32_t self) {
    const auto g = t.grad(self).vec();
    if (wants(t, iw)) t.grad(iw).matrix().noalias() += g * t.value(ix).vec().transpose();
    if (wants(t, ix)) t.grad(ix).vec().noalias() += t.value(iw).matrix().transpose() * g;
  });
}

Var affine(Var w, Var x, Var b) {
  const Tensor& W = w.value();
  const Tensor& X = x.value();
  const Tensor& B = b.value();
  if (W.rank() != 2) shape_fail("affine", "W", W, "a matrix");
  require_vector("affine", "x", X);
  if (X.size() != W.cols()) shape_fail("affine", "x", X, "[" + std::to_string(W.cols()) + "]");
  if (B.rank() != 1 || B.size() != W.rows()) {
    shape_fail("affine", "b", B, "[" + std::to_string(W.rows()) + "]");
  }
  Tensor out = B;
  out.vec().noalias() += W.matrix() * X.vec();
  const auto iw = w.id, ix = x.id, ib = b.id;
  return w.tape->record(std::move(out), {w, x, b}, [iw, ix, ib](Tape& t, std::uint32_t self) {
    const auto g = t.grad(self).vec();
    if (wants(t, iw)) t.grad(iw).matrix().noalias() += g * t.value(ix).vec().transpose();
    if (wants(t, ix)) t.grad(ix).vec().noalias() += t.value(iw).matrix().transpose() * g;
    if (wants(t, ib)) t.grad(ib).vec() += g;
  });
}

Var matvec_t(Var w, Var y) {
  const Tensor& W = w.value();
  const Tensor& Y = y.value();
  if (W.rank() != 2) shape_fail("matvec_t", "W", W, "a matrix");
  require_vector("matvec_t", "y", Y);
  if (Y.size() != W.rows()) shape_fail("matvec_t", "y", Y, "[" + std::to_string(W.rows()) + "]");
  Tensor out = Tensor::zeros(W.cols());
  out.vec().noalias() = W.matrix().transpose() * Y.vec();
  const auto iw = w.id, iy = y.id;
  return w.tape->record(std::move(out), {w, y}, [iw, iy](Tape& t, std::uint32_t self) {
    const auto g = t.grad(self).vec();
    if (wants(t, iw)) t.grad(iw).matrix().noalias() += t.value(iy).vec() * g.transpose();
    if (wants(t, iy)) t.grad(iy).vec().noalias() += t.value(iw).matrix() * g;
  });
}

Var concat(std::span<const Var> parts) {
  if (parts.empty()) throw ShapeError("concat: no operands");
  Tape* tape = parts[0].tape;
  std::size_t total = 0;
  for (const Var& p : parts) {
    require_vector("concat", "part", p.value());
    total += p.value().size();
  }
  Tensor out = Tensor::zeros(total);
  std::vector<std::uint32_t> ids;
  std::vector<std::size_t> offsets;
  bool any = false;
  std::size_t off = 0;
  for (const Var& p : parts) {
    std::copy(p.value().data(), p.value().data() + p.value().size(), out.data() + off);
    ids.push_back(p.id);
    offsets.push_back(off);
    off += p.value().size();
    any = any || tape->needs_grad(p);
  }
  if (!any) return tape->constant(std::move(out));
  return tape->record(std::move(out), parts, [ids, offsets](Tape& t, std::uint32_t self) {
    const Tensor& g = t.grad(self);
    for (std::size_t k = 0; k < ids.size(); ++k) {
      if (!wants(t, ids[k])) continue;
      Tensor& gi = t.grad(ids[k]);
      for (std::size_t j = 0; j < gi.size(); ++j) gi[j] += g[offsets[k] + j];
    }
  });
}

Var concat(std::initializer_list<Var> parts) {
  return concat(std::span<const Var>(parts.begin(), parts.size()));
}

Var slice(Var a, std::size_t offset, std::size_t length) {
  const Tensor& A = a.value();
  require_vector("slice", "a", A);
  if (offset + length > A.size()) {
    throw ShapeError("slice: range [" + std::to_string(offset) + ", " +
                     std::to_string(offset + length) + ") exceeds length " +
                     std::to_string(A.size()));
  }
  Tensor out = Tensor::vector(std::vector<double>(A.data() + offset, A.data() + offset + length));
  const auto ia = a.id;
  return a.tape->record(std::move(out), {a}, [ia, offset](Tape& t, std::uint32_t self) {
    const Tensor& g = t.grad(self);
    Tensor& ga = t.grad(ia);
    for (std::size_t j = 0; j < g.size(); ++j) ga[offset + j] += g[j];
  });
}

Var row(Var matrix, std::size_t index) {
  const Tensor& M = matrix.value();
  if (M.rank() != 2) shape_fail("row", "matrix", M, "a matrix");
  if (index >= M.rows()) {
    throw IndexError("row: index " + std::to_string(index) + " out of range for " +
                     shape_string(M.shape()));
  }
  const std::size_t c = M.cols();
  Tensor out = Tensor::vector(std::vector<double>(M.data() + index * c, M.data() + (index + 1) * c));
  const auto im = matrix.id;
  return matrix.tape->record(std::move(out), {matrix}, [im, index](Tape& t, std::uint32_t self) {
    const Tensor& g = t.grad(self);
    Tensor& gm = t.grad(im);
    const std::size_t cols = g.size();
    for (std::size_t j = 0; j < cols; ++j) gm[index * cols + j] += g[j];
  });
}

Var stack_rows(std::span<const Var> rows) {
  if (rows.empty()) throw ShapeError("stack_rows: no rows");
  Tape* tape = rows[0].tape;
  const std::size_t d = rows[0].value().size();
  Tensor out = Tensor::zeros(rows.size(), d);
  std::vector<std::uint32_t> ids;
  bool any = false;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const Tensor& v = rows[r].value();
    require_vector("stack_rows", "row", v);
    if (v.size() != d) shape_fail("stack_rows", "row", v, "[" + std::to_string(d) + "]");
    std::copy(v.data(), v.data() + d, out.data() + r * d);
    ids.push_back(rows[r].id);
    any = any || tape->needs_grad(rows[r]);
  }
  if (!any) return tape->constant(std::move(out));
  return tape->record(std::move(out), rows, [ids, d](Tape& t, std::uint32_t self) {
    const Tensor& g = t.grad(self);
    for (std::size_t r = 0; r < ids.size(); ++r) {
      if (!wants(t, ids[r])) continue;
      Tensor& gr = t.grad(ids[r]);
      for (std::size_t j = 0; j < d; ++j) gr[j] += g[r * d + j];
    }
  });
}

Tensor softmax_values(const Tensor& logits) {
  if (logits.size() == 0) throw DomainError("softmax: empty input");
  Tensor out = logits;
  const double m = logits.vec().maxCoeff();
  double z = 0.0;
  for (auto& v : out.values()) {
    v = std::exp(v - m);
    z += v;
  }
  out.vec() /= z;
  return out;
}

double logsumexp_values(std::span<const double> values) {
  if (values.empty()) throw DomainError("logsumexp: empty input");
  const double m = *std::max_element(values.begin(), values.end());
  if (m == -std::numeric_limits<double>::infinity()) return m;
  double s = 0.0;
  for (double v : values) s += std::exp(v - m);
  return m + std::log(s);
}

Var softmax(Var logits) {
  require_vector("softmax", "logits", logits.value());
  Tensor out = softmax_values(logits.value());
  const auto il = logits.id;
  return logits.tape->record(std::move(out), {logits}, [il](Tape& t, std::uint32_t self) {
    const auto y = t.value(self).vec();
    const auto g = t.grad(self).vec();
    const double gy = g.dot(y);
    t.grad(il).vec().array() += y.array() * (g.array() - gy);
  });
}

Var log_softmax(Var logits) {
  require_vector("log_softmax", "logits", logits.value());
  const double lse = logsumexp_values(logits.value().values());
  Tensor out = logits.value();
  out.vec().array() -= lse;
  const auto il = logits.id;
  return logits.tape->record(std::move(out), {logits}, [il](Tape& t, std::uint32_t self) {
    const auto g = t.grad(self).vec();
    const Eigen::VectorXd p = t.value(self).vec().array().exp();
    t.grad(il).vec() += g - p * g.sum();
  });
}

Var logsumexp(Var logits) {
  require_vector("logsumexp", "logits", logits.value());
  Tensor out = Tensor::vector({logsumexp_values(logits.value().values())});
  const auto il = logits.id;
  return logits.tape->record(std::move(out), {logits}, [il](Tape& t, std::uint32_t self) {
    const double g = t.grad(self)[0];
    const Tensor p = softmax_values(t.value(il));
    t.grad(il).vec() += g * p.vec();
  });
}

Var cross_entropy(Var logits, std::size_t target) {
  const Tensor& L = logits.value();
  require_vector("cross_entropy", "logits", L);
  if (target >= L.size()) {
    throw IndexError("cross_entropy: target " + std::to_string(target) + " out of range for " +
                     std::to_string(L.size()) + " classes");
  }
  const double lse = logsumexp_values(L.values());
  Tensor out = Tensor::vector({lse - L[target]});
  const auto il = logits.id;
  return logits.tape->record(std::move(out), {logits}, [il, target](Tape& t, std::uint32_t self) {
    const double g = t.grad(self)[0];
    Tensor p = softmax_values(t.value(il));
    p[target] -= 1.0;
    t.grad(il).vec() += g * p.vec();
  });
}

Var apply_mask(Var a, const Tensor& mask) {
  require_same("apply_mask", a.value(), mask);
  Tensor out = a.value();
  out.vec().array() *= mask.vec().array();
  const auto ia = a.id;
  return a.tape->record(std::move(out), {a}, [ia, mask](Tape& t, std::uint32_t self) {
    t.grad(ia).vec().array() += t.grad(self).vec().array() * mask.vec().array();
  });
}

}  // namespace mif::ops
