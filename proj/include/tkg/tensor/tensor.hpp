#pragma once

// Dense f64 tensors with tape-based reverse-mode differentiation.
//
// Ops record onto the thread's active Tape (see TapeScope) whenever one of
// their inputs requires a gradient. Without an active tape they only compute
// values, which is how inference runs.
//
// Shapes: every op works on rank-2 tensors (vectors are 1 x n or n x 1,
// scalars are 1 x 1). Apart from scalar * tensor and row-vector bias add
// there is no broadcasting; shapes must match exactly.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace tkg::tensor {

using Shape = std::vector<std::size_t>;

namespace detail {
struct Node;
struct Access;
}  // namespace detail

class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(std::size_t rows, std::size_t cols);
  static Tensor filled(std::size_t rows, std::size_t cols, double value);
  static Tensor from(std::size_t rows, std::size_t cols, std::vector<double> values);
  static Tensor scalar(double value);
  /// Any rank; used for checkpoint payloads.
  static Tensor from_shape(Shape shape, std::vector<double> values);
  /// A leaf that accumulates gradients during backward.
  static Tensor parameter(std::size_t rows, std::size_t cols, std::vector<double> values);

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const;
  std::size_t rank() const { return shape().size(); }
  std::size_t rows() const;
  std::size_t cols() const;
  std::size_t size() const;

  std::span<const double> values() const;
  /// Writable storage of a leaf tensor. Throws for ops recorded on a tape.
  std::span<double> mutable_values();
  double at(std::size_t row, std::size_t col) const;
  double item() const;

  bool requires_grad() const;
  /// Copy of the value with no gradient tracking.
  Tensor detached() const;
  /// Stable identity of the underlying storage.
  const void* id() const { return node_.get(); }

 private:
  friend struct detail::Access;
  explicit Tensor(std::shared_ptr<detail::Node> node) : node_(std::move(node)) {}
  std::shared_ptr<detail::Node> node_;
};

/// Ordered, uniquely named collection of parameter tensors.
class ParameterSet {
 public:
  Tensor add(std::string name, Tensor parameter);
  bool contains(std::string_view name) const;
  Tensor at(std::string_view name) const;
  const std::vector<std::pair<std::string, Tensor>>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }
  std::size_t scalar_count() const;

 private:
  std::vector<std::pair<std::string, Tensor>> entries_;
  std::unordered_map<std::string, std::size_t> lookup_;
};

/// Gradients of one backward pass, keyed by tensor identity.
class Gradients {
 public:
  const std::vector<double>* find(const Tensor& t) const;
  const std::vector<double>& at(const Tensor& t) const;
  bool contains(const Tensor& t) const { return find(t) != nullptr; }
  std::size_t size() const { return grads_.size(); }

 private:
  friend class Tape;
  std::unordered_map<const void*, std::vector<double>> grads_;
};

/// Ordered record of differentiable ops. Creation order is a topological
/// order, so backward walks it in reverse and visits every node once.
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  std::size_t size() const { return nodes_.size(); }

  /// Gradients for every leaf reached from `loss`. The tape is consumed.
  Gradients backward(const Tensor& loss);
  /// As above, with an entry (zero-filled if unreached) for every parameter.
  Gradients backward(const Tensor& loss, const ParameterSet& params);

 private:
  friend struct detail::Access;
  std::vector<std::shared_ptr<detail::Node>> nodes_;
  bool consumed_ = false;
};

/// Makes `tape` the thread's active tape for the scope's lifetime.
class TapeScope {
 public:
  explicit TapeScope(Tape& tape);
  ~TapeScope();
  TapeScope(const TapeScope&) = delete;
  TapeScope& operator=(const TapeScope&) = delete;

 private:
  Tape* previous_;
};

/// Suspends recording for the scope's lifetime (inference inside training).
class NoGradScope {
 public:
  NoGradScope();
  ~NoGradScope();
  NoGradScope(const NoGradScope&) = delete;
  NoGradScope& operator=(const NoGradScope&) = delete;

 private:
  Tape* previous_;
};

Tape* active_tape();

// ---------------------------------------------------------------------------
// Primitive ops

Tensor matmul(const Tensor& a, const Tensor& b);
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
/// x * c for a constant c.
Tensor scale(const Tensor& x, double c);
/// s * x for a 1 x 1 tensor s.
Tensor mul_scalar(const Tensor& s, const Tensor& x);
/// x + row, broadcasting a 1 x cols row over every row of x.
Tensor add_row(const Tensor& x, const Tensor& row);
Tensor exp(const Tensor& x);
Tensor log(const Tensor& x);
Tensor sigmoid(const Tensor& x);
Tensor tanh(const Tensor& x);
Tensor relu(const Tensor& x);
/// max(x, c) elementwise for a constant c.
Tensor max_const(const Tensor& x, double c);

/// Row-wise softmax where entries with keep[i] == 0 (or value -inf) are
/// excluded and receive weight exactly 0. `keep` is empty or rows*cols long.
/// Throws if a row has no unmasked entry.
Tensor masked_softmax(const Tensor& x, std::span<const std::uint8_t> keep = {});

Tensor concat_cols(std::span<const Tensor> parts);
Tensor concat_rows(std::span<const Tensor> parts);
/// out[i, :] = x[index[i], :]
Tensor gather_rows(const Tensor& x, std::span<const std::uint32_t> index);
/// out[index[i], :] += weight[i] * x[i, :] over an `out_rows` x cols zero
/// matrix. `weight` is empty (all ones) or one constant per row of x.
Tensor scatter_add_rows(const Tensor& x, std::span<const std::uint32_t> index, std::size_t out_rows,
                        std::span<const double> weight = {});
Tensor sum(const Tensor& x);
Tensor mean(const Tensor& x);
/// Row sums: n x m -> n x 1.
Tensor sum_cols(const Tensor& x);
/// Columns [begin, end).
Tensor slice_cols(const Tensor& x, std::size_t begin, std::size_t end);
Tensor reshape(const Tensor& x, std::size_t rows, std::size_t cols);
Tensor transpose(const Tensor& x);

// Composites built from the primitives above.

/// x[i, :] * column[i] for an n x 1 column.
Tensor scale_rows(const Tensor& x, const Tensor& column);
/// alpha * x + (1 - alpha) * z with a per-row alpha column.
Tensor convex_mix(const Tensor& x, const Tensor& z, const Tensor& alpha);

}  // namespace tkg::tensor
