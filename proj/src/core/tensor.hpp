// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cstddef>
#include <deque>
#include <functional>
#include <initializer_list>
#include <random>
#include <span>
#include <vector>

namespace bgpad::tensor {

using Shape = std::vector<std::size_t>;

/// Dense row-major float64 array of rank <= 3 with an optional gradient
/// buffer of the same shape.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape, double fill = 0.0);
  Tensor(Shape shape, std::vector<double> data);

  const Shape& shape() const noexcept { return shape_; }
  std::size_t rank() const noexcept { return shape_.size(); }
  std::size_t size() const noexcept { return data_.size(); }
  /// Leading dimension (1 for rank-1); cols() is the trailing dimension.
  std::size_t rows() const noexcept;
  std::size_t cols() const noexcept;

  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }
  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }
  double& at(std::size_t r, std::size_t c) { return data_[r * cols() + c]; }
  double at(std::size_t r, std::size_t c) const { return data_[r * cols() + c]; }

  bool has_grad() const noexcept { return grad_enabled_; }
  void enable_grad() {
    grad_.assign(data_.size(), 0.0);
    grad_enabled_ = true;
  }
  void zero_grad() { std::fill(grad_.begin(), grad_.end(), 0.0); }
  std::span<double> grad() noexcept { return grad_; }
  std::span<const double> grad() const noexcept { return grad_; }

  bool operator==(const Tensor& o) const { return shape_ == o.shape_ && data_ == o.data_; }

 private:
  Shape shape_;
  std::vector<double> data_;
  std::vector<double> grad_;
  bool grad_enabled_ = false;
};

class Tape;

/// Handle to a value recorded on a Tape.
class Var {
 public:
  Var() = default;
  const Tensor& value() const;
  const Shape& shape() const { return value().shape(); }
  std::size_t rows() const { return value().rows(); }
  std::size_t cols() const { return value().cols(); }
  Tape* tape() const noexcept { return tape_; }
  std::size_t id() const noexcept { return id_; }
  bool valid() const noexcept { return tape_ != nullptr; }

 private:
  friend class Tape;
  Var(Tape* t, std::size_t id) : tape_(t), id_(id) {}
  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

/// Append-only record of operations for reverse-mode differentiation.
/// backward() visits nodes in reverse insertion order exactly once, flushes
/// parameter gradients into their sinks, and frees every node; the tape
/// must be reset() before it is reused.
class Tape {
 public:
  using BackwardFn = std::function<void(Tape&, std::span<const double> out_grad, const Tensor& out)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Tensor value);
  /// Read-only view of an external tensor; no gradient flows into it.
  Var reference(const Tensor& value);
  /// Gradient accumulates into `grad_sink` (size must match) on backward.
  /// The tensor is referenced, not copied, and must outlive the tape.
  Var parameter(const Tensor& value, std::span<double> grad_sink);
  /// Gradient accumulates into value.grad(), enabling it if needed.
  Var parameter(Tensor& value);

  void backward(Var loss);
  void reset();

  std::size_t size() const noexcept { return nodes_.size(); }
  bool spent() const noexcept { return spent_; }

  // Op-building interface.
  Var record(Tensor value, std::initializer_list<Var> inputs, BackwardFn fn);
  Var record(Tensor value, std::span<const Var> inputs, BackwardFn fn);
  const Tensor& value(Var v) const;
  bool requires_grad(Var v) const;
  /// Gradient buffer of `v`, allocated on first use. Only valid during
  /// backward.
  std::span<double> grad(Var v);

 private:
  struct Node {
    Tensor owned;
    const Tensor* external = nullptr;
    std::vector<double> grad;
    std::span<double> sink;
    BackwardFn backward;
    bool requires_grad = false;
  };
  void check_live(Var v) const;

  std::deque<Node> nodes_;
  bool spent_ = false;
};

// --- differentiable operations ---------------------------------------------

Var matmul(Var a, Var b);     // [p x q] . [q x r]
Var matmul_bt(Var a, Var b);  // [p x q] . [r x q]^T
Var transpose(Var a);
Var reshape(Var a, Shape shape);
Var add(Var a, Var b);
Var mul(Var a, Var b);
Var scale(Var a, double s);
Var concat(std::span<const Var> parts, std::size_t axis);
Var slice_rows(Var a, std::size_t begin, std::size_t count);
/// out[i][j] = col[i] + row[j] for col [n x 1] and row [n x 1].
Var pairwise_sum(Var col, Var row);
/// Softmax over each row with per-row max subtraction. Masked entries
/// (mask[i] == false) get probability 0; a fully masked row throws.
Var row_softmax(Var x, const std::vector<bool>* mask = nullptr);
Var leaky_relu(Var x, double slope = 0.2);
/// Literal reading of the activation: negatives are replaced by `value`.
Var clamp_negative(Var x, double value = 0.2);
Var sigmoid(Var x);
Var tanh(Var x);
Var relu(Var x);
Var elu(Var x, double alpha = 1.0);
Var sum(Var x);
Var mean(Var x);
/// weight * (-logits[y] + log sum_j exp(logits[j])), computed with
/// log-sum-exp stabilization.
Var weighted_cross_entropy(Var logits, std::size_t y, double weight);

/// Inverted-dropout mask: entries are 0 with probability `rate` and
/// 1 / (1 - rate) otherwise. All ones when `train` is false.
Tensor dropout_mask(const Shape& shape, double rate, std::mt19937_64& rng, bool train = true);

}  // namespace bgpad::tensor
