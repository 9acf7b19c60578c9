// SPDX-License-Identifier: Apache-2.0
#include "tensor.hpp"

#include <cblas.h>

#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "error.hpp"
#include "io.hpp"

namespace bgpad::tensor {

namespace {

std::size_t product(const Shape& s) {
  return std::accumulate(s.begin(), s.end(), std::size_t{1}, std::multiplies<>());
}

std::string shape_str(const Shape& s) {
  std::string out = "[";
  for (std::size_t i = 0; i < s.size(); ++i) out += (i ? "x" : "") + std::to_string(s[i]);
  return out + "]";
}

void require_matrix(const Tensor& t, const char* op) {
  if (t.rank() != 2) throw ShapeError(std::string(op) + ": expected a rank-2 tensor, got " + shape_str(t.shape()));
}

// Row-major GEMM wrapper: C = alpha * op(A) * op(B) + beta * C.
void gemm(bool ta, bool tb, std::size_t m, std::size_t n, std::size_t k, const double* a, std::size_t lda,
          const double* b, std::size_t ldb, double beta, double* c, std::size_t ldc) {
  if (m == 0 || n == 0) return;
  if (k == 0) {
    if (beta == 0.0) std::fill(c, c + m * ldc, 0.0);
    return;
  }
  cblas_dgemm(CblasRowMajor, ta ? CblasTrans : CblasNoTrans, tb ? CblasTrans : CblasNoTrans, static_cast<int>(m),
              static_cast<int>(n), static_cast<int>(k), 1.0, a, static_cast<int>(lda), b, static_cast<int>(ldb), beta, c,
              static_cast<int>(ldc));
}

struct BlasSingleThread {
  BlasSingleThread() { openblas_set_num_threads(1); }
} const blas_single_thread;

}  // namespace

// ---------------------------------------------------------------------------

Tensor::Tensor(Shape shape, double fill) : shape_(std::move(shape)), data_(product(shape_), fill) {
  if (shape_.size() > 3) throw ShapeError("tensor rank above 3");
}

Tensor::Tensor(Shape shape, std::vector<double> data) : shape_(std::move(shape)), data_(std::move(data)) {
  if (shape_.size() > 3) throw ShapeError("tensor rank above 3");
  if (data_.size() != product(shape_)) throw ShapeError("tensor buffer does not match shape " + shape_str(shape_));
}

std::size_t Tensor::rows() const noexcept { return shape_.size() < 2 ? 1 : shape_[0]; }
std::size_t Tensor::cols() const noexcept { return shape_.empty() ? 1 : shape_.back(); }

const Tensor& Var::value() const {
  if (!tape_) throw InvalidArgument("empty Var");
  return tape_->value(*this);
}

// ---------------------------------------------------------------------------

void Tape::check_live(Var v) const {
  if (v.tape_ != this) throw InvalidArgument("Var belongs to a different tape");
  if (spent_) throw InvalidArgument("tape already ran backward; call reset()");
  if (v.id_ >= nodes_.size()) throw InvalidArgument("stale Var");
}

Var Tape::constant(Tensor value) {
  if (spent_) throw InvalidArgument("tape already ran backward; call reset()");
  Node n;
  n.owned = std::move(value);
  nodes_.push_back(std::move(n));
  return Var(this, nodes_.size() - 1);
}

Var Tape::reference(const Tensor& value) {
  if (spent_) throw InvalidArgument("tape already ran backward; call reset()");
  Node n;
  n.external = &value;
  nodes_.push_back(std::move(n));
  return Var(this, nodes_.size() - 1);
}

Var Tape::parameter(const Tensor& value, std::span<double> grad_sink) {
  if (spent_) throw InvalidArgument("tape already ran backward; call reset()");
  if (grad_sink.size() != value.size()) throw ShapeError("gradient sink does not match parameter size");
  Node n;
  n.external = &value;
  n.sink = grad_sink;
  n.requires_grad = true;
  nodes_.push_back(std::move(n));
  return Var(this, nodes_.size() - 1);
}

Var Tape::parameter(Tensor& value) {
  if (!value.has_grad()) value.enable_grad();
  return parameter(value, value.grad());
}

Var Tape::record(Tensor value, std::initializer_list<Var> inputs, BackwardFn fn) {
  return record(std::move(value), std::span<const Var>(inputs.begin(), inputs.size()), std::move(fn));
}

Var Tape::record(Tensor value, std::span<const Var> inputs, BackwardFn fn) {
  bool needs = false;
  for (auto v : inputs) {
    check_live(v);
    needs = needs || nodes_[v.id_].requires_grad;
  }
  Node n;
  n.owned = std::move(value);
  n.requires_grad = needs;
  if (needs) n.backward = std::move(fn);
  nodes_.push_back(std::move(n));
  return Var(this, nodes_.size() - 1);
}

const Tensor& Tape::value(Var v) const {
  check_live(v);
  const auto& n = nodes_[v.id_];
  return n.external ? *n.external : n.owned;
}

bool Tape::requires_grad(Var v) const {
  check_live(v);
  return nodes_[v.id_].requires_grad;
}

std::span<double> Tape::grad(Var v) {
  auto& n = nodes_[v.id_];
  if (n.grad.empty()) n.grad.assign((n.external ? *n.external : n.owned).size(), 0.0);
  return n.grad;
}

void Tape::backward(Var loss) {
  check_live(loss);
  if (value(loss).size() != 1) throw ShapeError("backward() needs a scalar loss");
  if (!nodes_[loss.id_].requires_grad) throw InvalidArgument("loss does not depend on any parameter");
  grad(loss)[0] = 1.0;
  for (std::size_t i = loss.id_ + 1; i-- > 0;) {
    auto& n = nodes_[i];
    if (!n.requires_grad || n.grad.empty()) continue;
    if (n.backward) n.backward(*this, n.grad, n.external ? *n.external : n.owned);
    if (!n.sink.empty())
      for (std::size_t j = 0; j < n.grad.size(); ++j) n.sink[j] += n.grad[j];
  }
  nodes_.clear();
  spent_ = true;
}

void Tape::reset() {
  nodes_.clear();
  spent_ = false;
}

// ---------------------------------------------------------------------------

Var matmul(Var a, Var b) {
  Tape& t = *a.tape();
  const auto& av = t.value(a);
  const auto& bv = t.value(b);
  require_matrix(av, "matmul");
  require_matrix(bv, "matmul");
  const std::size_t p = av.rows(), q = av.cols(), r = bv.cols();
  if (bv.rows() != q) throw ShapeError("matmul: inner dimensions differ " + shape_str(av.shape()) + " . " + shape_str(bv.shape()));
  Tensor out({p, r});
  gemm(false, false, p, r, q, av.data().data(), q, bv.data().data(), r, 0.0, out.data().data(), r);
  return t.record(std::move(out), {a, b}, [a, b, p, q, r](Tape& t, std::span<const double> g, const Tensor&) {
    if (t.requires_grad(a))
      gemm(false, true, p, q, r, g.data(), r, t.value(b).data().data(), r, 1.0, t.grad(a).data(), q);
    if (t.requires_grad(b))
      gemm(true, false, q, r, p, t.value(a).data().data(), q, g.data(), r, 1.0, t.grad(b).data(), r);
  });
}

Var matmul_bt(Var a, Var b) {
  Tape& t = *a.tape();
  const auto& av = t.value(a);
  const auto& bv = t.value(b);
  require_matrix(av, "matmul_bt");
  require_matrix(bv, "matmul_bt");
  const std::size_t p = av.rows(), q = av.cols(), r = bv.rows();
  if (bv.cols() != q) throw ShapeError("matmul_bt: inner dimensions differ " + shape_str(av.shape()) + " . " + shape_str(bv.shape()) + "^T");
  Tensor out({p, r});
  gemm(false, true, p, r, q, av.data().data(), q, bv.data().data(), q, 0.0, out.data().data(), r);
  return t.record(std::move(out), {a, b}, [a, b, p, q, r](Tape& t, std::span<const double> g, const Tensor&) {
    if (t.requires_grad(a))
      gemm(false, false, p, q, r, g.data(), r, t.value(b).data().data(), q, 1.0, t.grad(a).data(), q);
    if (t.requires_grad(b))
      gemm(true, false, r, q, p, g.data(), r, t.value(a).data().data(), q, 1.0, t.grad(b).data(), q);
  });
}

Var transpose(Var a) {
  Tape& t = *a.tape();
  const auto& av = t.value(a);
  require_matrix(av, "transpose");
  const std::size_t p = av.rows(), q = av.cols();
  Tensor out({q, p});
  for (std::size_t i = 0; i < p; ++i)
    for (std::size_t j = 0; j < q; ++j) out[j * p + i] = av[i * q + j];
  return t.record(std::move(out), {a}, [a, p, q](Tape& t, std::span<const double> g, const Tensor&) {
    auto ga = t.grad(a);
    for (std::size_t i = 0; i < p; ++i)
      for (std::size_t j = 0; j < q; ++j) ga[i * q + j] += g[j * p + i];
  });
}

Var reshape(Var a, Shape shape) {
  Tape& t = *a.tape();
  const auto& av = t.value(a);
  if (product(shape) != av.size()) throw ShapeError("reshape: " + shape_str(av.shape()) + " -> " + shape_str(shape));
  Tensor out(std::move(shape), std::vector<double>(av.data().begin(), av.data().end()));
  return t.record(std::move(out), {a}, [a](Tape& t, std::span<const double> g, const Tensor&) {
    auto ga = t.grad(a);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
  });
}

namespace {

template <class Fwd, class Bwd>
Var elementwise(Var x, Fwd fwd, Bwd dfdx) {
  Tape& t = *x.tape();
  const auto& xv = t.value(x);
  Tensor out(xv.shape());
  for (std::size_t i = 0; i < xv.size(); ++i) out[i] = fwd(xv[i]);
  return t.record(std::move(out), {x}, [x, dfdx](Tape& t, std::span<const double> g, const Tensor&) {
    const auto& xv = t.value(x);
    auto gx = t.grad(x);
    for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * dfdx(xv[i]);
  });
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape()) throw ShapeError(std::string(op) + ": shapes differ " + shape_str(a.shape()) + " vs " + shape_str(b.shape()));
}

}  // namespace

Var add(Var a, Var b) {
  Tape& t = *a.tape();
  const auto& av = t.value(a);
  const auto& bv = t.value(b);
  require_same_shape(av, bv, "add");
  Tensor out(av.shape());
  for (std::size_t i = 0; i < av.size(); ++i) out[i] = av[i] + bv[i];
  return t.record(std::move(out), {a, b}, [a, b](Tape& t, std::span<const double> g, const Tensor&) {
    for (Var v : {a, b}) {
      if (!t.requires_grad(v)) continue;
      auto gv = t.grad(v);
      for (std::size_t i = 0; i < g.size(); ++i) gv[i] += g[i];
    }
  });
}

Var mul(Var a, Var b) {
  Tape& t = *a.tape();
  const auto& av = t.value(a);
  const auto& bv = t.value(b);
  require_same_shape(av, bv, "mul");
  Tensor out(av.shape());
  for (std::size_t i = 0; i < av.size(); ++i) out[i] = av[i] * bv[i];
  return t.record(std::move(out), {a, b}, [a, b](Tape& t, std::span<const double> g, const Tensor&) {
    if (t.requires_grad(a)) {
      auto ga = t.grad(a);
      const auto& bv = t.value(b);
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * bv[i];
    }
    if (t.requires_grad(b)) {
      auto gb = t.grad(b);
      const auto& av = t.value(a);
      for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * av[i];
    }
  });
}

Var scale(Var a, double s) {
  return elementwise(a, [s](double x) { return s * x; }, [s](double) { return s; });
}

Var concat(std::span<const Var> parts, std::size_t axis) {
  if (parts.empty()) throw ShapeError("concat: no inputs");
  Tape& t = *parts[0].tape();
  const std::size_t rows = t.value(parts[0]).rows();
  std::vector<std::size_t> widths;
  std::size_t total = 0;
  for (auto v : parts) {
    const auto& pv = t.value(v);
    require_matrix(pv, "concat");
    if (axis == 1 && pv.rows() != rows) throw ShapeError("concat axis 1: row counts differ");
    if (axis == 0 && pv.cols() != t.value(parts[0]).cols()) throw ShapeError("concat axis 0: column counts differ");
    widths.push_back(axis == 1 ? pv.cols() : pv.rows());
    total += widths.back();
  }
  if (axis > 1) throw ShapeError("concat: axis must be 0 or 1");
  const std::size_t cols = axis == 1 ? total : t.value(parts[0]).cols();
  const std::size_t out_rows = axis == 1 ? rows : total;
  Tensor out({out_rows, cols});
  std::size_t offset = 0;
  for (std::size_t p = 0; p < parts.size(); ++p) {
    const auto& pv = t.value(parts[p]);
    if (axis == 1) {
      for (std::size_t r = 0; r < rows; ++r)
        std::copy_n(pv.data().begin() + static_cast<std::ptrdiff_t>(r * widths[p]), widths[p],
                    out.data().begin() + static_cast<std::ptrdiff_t>(r * cols + offset));
    } else {
      std::copy(pv.data().begin(), pv.data().end(), out.data().begin() + static_cast<std::ptrdiff_t>(offset * cols));
    }
    offset += widths[p];
  }
  std::vector<Var> inputs(parts.begin(), parts.end());
  return t.record(std::move(out), parts, [inputs, widths, axis, cols, out_rows](Tape& t, std::span<const double> g, const Tensor&) {
    std::size_t offset = 0;
    for (std::size_t p = 0; p < inputs.size(); ++p) {
      if (t.requires_grad(inputs[p])) {
        auto gp = t.grad(inputs[p]);
        if (axis == 1) {
          for (std::size_t r = 0; r < out_rows; ++r)
            for (std::size_t c = 0; c < widths[p]; ++c) gp[r * widths[p] + c] += g[r * cols + offset + c];
        } else {
          for (std::size_t i = 0; i < widths[p] * cols; ++i) gp[i] += g[offset * cols + i];
        }
      }
      offset += widths[p];
    }
  });
}

Var slice_rows(Var a, std::size_t begin, std::size_t count) {
  Tape& t = *a.tape();
  const auto& av = t.value(a);
  require_matrix(av, "slice_rows");
  if (begin + count > av.rows()) throw ShapeError("slice_rows: range exceeds " + shape_str(av.shape()));
  const std::size_t cols = av.cols();
  Tensor out({count, cols}, std::vector<double>(av.data().begin() + static_cast<std::ptrdiff_t>(begin * cols),
                                                av.data().begin() + static_cast<std::ptrdiff_t>((begin + count) * cols)));
  return t.record(std::move(out), {a}, [a, begin, cols](Tape& t, std::span<const double> g, const Tensor&) {
    auto ga = t.grad(a);
    for (std::size_t i = 0; i < g.size(); ++i) ga[begin * cols + i] += g[i];
  });
}

Var pairwise_sum(Var col, Var row) {
  Tape& t = *col.tape();
  const auto& cv = t.value(col);
  const auto& rv = t.value(row);
  const std::size_t n = cv.size(), m = rv.size();
  Tensor out({n, m});
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j) out[i * m + j] = cv[i] + rv[j];
  return t.record(std::move(out), {col, row}, [col, row, n, m](Tape& t, std::span<const double> g, const Tensor&) {
    if (t.requires_grad(col)) {
      auto gc = t.grad(col);
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < m; ++j) gc[i] += g[i * m + j];
    }
    if (t.requires_grad(row)) {
      auto gr = t.grad(row);
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < m; ++j) gr[j] += g[i * m + j];
    }
  });
}

Var row_softmax(Var x, const std::vector<bool>* mask) {
  Tape& t = *x.tape();
  const auto& xv = t.value(x);
  require_matrix(xv, "row_softmax");
  const std::size_t p = xv.rows(), q = xv.cols();
  if (mask && mask->size() != xv.size()) throw ShapeError("row_softmax: mask shape differs from input");
  Tensor out({p, q});
  for (std::size_t i = 0; i < p; ++i) {
    double mx = -std::numeric_limits<double>::infinity();
    bool open = false;
    for (std::size_t j = 0; j < q; ++j)
      if (!mask || (*mask)[i * q + j]) {
        open = true;
        // NaN wins so that a diverged input stays visibly non-finite.
        mx = std::isnan(xv[i * q + j]) ? xv[i * q + j] : std::max(mx, xv[i * q + j]);
        if (std::isnan(mx)) break;
      }
    if (!open) throw ShapeError("row_softmax: row " + std::to_string(i) + " is fully masked");
    double z = 0.0;
    for (std::size_t j = 0; j < q; ++j) {
      const double e = (!mask || (*mask)[i * q + j]) ? std::exp(xv[i * q + j] - mx) : 0.0;
      out[i * q + j] = e;
      z += e;
    }
    for (std::size_t j = 0; j < q; ++j) out[i * q + j] /= z;
  }
  return t.record(std::move(out), {x}, [x, p, q](Tape& t, std::span<const double> g, const Tensor& yv) {
    auto gx = t.grad(x);
    for (std::size_t i = 0; i < p; ++i) {
      double dot = 0.0;
      for (std::size_t j = 0; j < q; ++j) dot += g[i * q + j] * yv[i * q + j];
      for (std::size_t j = 0; j < q; ++j) gx[i * q + j] += yv[i * q + j] * (g[i * q + j] - dot);
    }
  });
}

Var leaky_relu(Var x, double slope) {
  return elementwise(
      x, [slope](double v) { return v >= 0.0 ? v : slope * v; }, [slope](double v) { return v >= 0.0 ? 1.0 : slope; });
}

Var clamp_negative(Var x, double value) {
  return elementwise(
      x, [value](double v) { return v >= 0.0 ? v : value; }, [](double v) { return v >= 0.0 ? 1.0 : 0.0; });
}

Var sigmoid(Var x) {
  auto f = [](double v) { return v >= 0.0 ? 1.0 / (1.0 + std::exp(-v)) : std::exp(v) / (1.0 + std::exp(v)); };
  return elementwise(x, f, [f](double v) {
    const double s = f(v);
    return s * (1.0 - s);
  });
}

Var tanh(Var x) {
  return elementwise(
      x, [](double v) { return std::tanh(v); },
      [](double v) {
        const double th = std::tanh(v);
        return 1.0 - th * th;
      });
}

Var relu(Var x) {
  return elementwise(x, [](double v) { return v > 0.0 ? v : 0.0; }, [](double v) { return v > 0.0 ? 1.0 : 0.0; });
}

Var elu(Var x, double alpha) {
  return elementwise(
      x, [alpha](double v) { return v > 0.0 ? v : alpha * std::expm1(v); },
      [alpha](double v) { return v > 0.0 ? 1.0 : alpha * std::exp(v); });
}

Var sum(Var x) {
  Tape& t = *x.tape();
  const auto& xv = t.value(x);
  double s = 0.0;
  for (double v : xv.data()) s += v;
  return t.record(Tensor({1}, std::vector<double>{s}), {x}, [x](Tape& t, std::span<const double> g, const Tensor&) {
    auto gx = t.grad(x);
    for (auto& v : gx) v += g[0];
  });
}

Var mean(Var x) {
  const auto n = static_cast<double>(x.value().size());
  return scale(sum(x), 1.0 / n);
}

Var weighted_cross_entropy(Var logits, std::size_t y, double weight) {
  Tape& t = *logits.tape();
  const auto& lv = t.value(logits);
  if (y >= lv.size()) throw InvalidArgument("cross entropy: class id " + std::to_string(y) + " out of range");
  double mx = -std::numeric_limits<double>::infinity();
  for (double v : lv.data()) mx = std::max(mx, v);
  double z = 0.0;
  for (double v : lv.data()) z += std::exp(v - mx);
  const double lse = mx + std::log(z);
  const double loss = weight * (lse - lv[y]);
  return t.record(Tensor({1}, std::vector<double>{loss}), {logits},
                  [logits, y, weight, lse](Tape& t, std::span<const double> g, const Tensor&) {
                    const auto& lv = t.value(logits);
                    auto gl = t.grad(logits);
                    for (std::size_t j = 0; j < lv.size(); ++j) {
                      const double p = std::exp(lv[j] - lse);
                      gl[j] += g[0] * weight * (p - (j == y ? 1.0 : 0.0));
                    }
                  });
}

Tensor dropout_mask(const Shape& shape, double rate, std::mt19937_64& rng, bool train) {
  if (!(rate >= 0.0 && rate < 1.0)) throw InvalidArgument("dropout rate must be in [0, 1)");
  Tensor mask(shape, 1.0);
  if (!train || rate == 0.0) return mask;
  const double keep = 1.0 / (1.0 - rate);
  for (auto& v : mask.data()) v = uniform01(rng) < rate ? 0.0 : keep;
  return mask;
}

}  // namespace bgpad::tensor
