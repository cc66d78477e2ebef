#include "tkg/tensor/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <unordered_set>

#include "tkg/error.hpp"
#include "tkg/kernels/kernels.hpp"

namespace tkg::tensor {

namespace detail {

struct Node {
  Shape shape;
  std::vector<double> value;
  std::vector<double> grad;
  bool requires_grad = false;
  bool leaf = true;
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(Node&)> backward;

  std::vector<double>& grad_buffer() {
    if (grad.empty()) grad.assign(value.size(), 0.0);
    return grad;
  }
};

struct Access {
  static const std::shared_ptr<Node>& node(const Tensor& t) { return t.node_; }
  static Tensor wrap(std::shared_ptr<Node> n) { return Tensor(std::move(n)); }
  static std::vector<std::shared_ptr<Node>>& nodes(Tape& tape) { return tape.nodes_; }
};

}  // namespace detail

using detail::Access;
using detail::Node;

namespace {

thread_local Tape* g_active_tape = nullptr;

std::size_t element_count(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

const Node& node_of(const Tensor& t) {
  if (!t.defined()) throw ShapeError("operation on an undefined tensor");
  return *Access::node(t);
}

std::string shape_text(const Tensor& t) {
  std::string out = "[";
  for (std::size_t i = 0; i < t.shape().size(); ++i) {
    if (i) out += "x";
    out += std::to_string(t.shape()[i]);
  }
  return out + "]";
}

void require_matrix(const Tensor& t, const char* op) {
  if (node_of(t).shape.size() != 2) throw ShapeError(std::string(op) + ": expected a rank-2 tensor");
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  require_matrix(a, op);
  require_matrix(b, op);
  if (a.shape() != b.shape()) {
    throw ShapeError(std::string(op) + ": shape mismatch " + shape_text(a) + " vs " + shape_text(b));
  }
}

/// Wraps a freshly computed value; records it on the active tape when any
/// input tracks gradients.
Tensor make_result(std::size_t rows, std::size_t cols, std::vector<double> value,
                   std::initializer_list<const Tensor*> inputs, std::function<void(Node&)> backward) {
  auto out = std::make_shared<Node>();
  out->shape = {rows, cols};
  out->value = std::move(value);
  Tape* tape = g_active_tape;
  if (tape != nullptr) {
    bool any = false;
    for (const Tensor* in : inputs) any = any || Access::node(*in)->requires_grad;
    if (any) {
      out->requires_grad = true;
      out->leaf = false;
      for (const Tensor* in : inputs) out->parents.push_back(Access::node(*in));
      out->backward = std::move(backward);
      Access::nodes(*tape).push_back(out);
    }
  }
  return Access::wrap(std::move(out));
}

Tensor make_result_n(std::size_t rows, std::size_t cols, std::vector<double> value, std::span<const Tensor> inputs,
                     std::function<void(Node&)> backward) {
  auto out = std::make_shared<Node>();
  out->shape = {rows, cols};
  out->value = std::move(value);
  Tape* tape = g_active_tape;
  if (tape != nullptr) {
    bool any = false;
    for (const Tensor& in : inputs) any = any || Access::node(in)->requires_grad;
    if (any) {
      out->requires_grad = true;
      out->leaf = false;
      for (const Tensor& in : inputs) out->parents.push_back(Access::node(in));
      out->backward = std::move(backward);
      Access::nodes(*tape).push_back(out);
    }
  }
  return Access::wrap(std::move(out));
}

/// Elementwise unary op with derivative expressed from (input, output).
template <typename Forward, typename Derivative>
Tensor unary(const Tensor& x, Forward f, Derivative df) {
  require_matrix(x, "unary");
  const auto& in = node_of(x).value;
  std::vector<double> out(in.size());
  for (std::size_t i = 0; i < in.size(); ++i) out[i] = f(in[i]);
  return make_result(x.rows(), x.cols(), std::move(out), {&x}, [df](Node& self) {
    Node& p = *self.parents[0];
    if (!p.requires_grad) return;
    auto& g = p.grad_buffer();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * df(p.value[i], self.value[i]);
  });
}

}  // namespace

// ---------------------------------------------------------------------------
// Tensor

Tensor Tensor::zeros(std::size_t rows, std::size_t cols) { return filled(rows, cols, 0.0); }

Tensor Tensor::filled(std::size_t rows, std::size_t cols, double value) {
  return from(rows, cols, std::vector<double>(rows * cols, value));
}

Tensor Tensor::from(std::size_t rows, std::size_t cols, std::vector<double> values) {
  return from_shape({rows, cols}, std::move(values));
}

Tensor Tensor::scalar(double value) { return from(1, 1, {value}); }

Tensor Tensor::from_shape(Shape shape, std::vector<double> values) {
  if (element_count(shape) != values.size()) {
    throw ShapeError("tensor data length " + std::to_string(values.size()) + " does not match its shape");
  }
  auto n = std::make_shared<Node>();
  n->shape = std::move(shape);
  n->value = std::move(values);
  return Tensor(std::move(n));
}

Tensor Tensor::parameter(std::size_t rows, std::size_t cols, std::vector<double> values) {
  Tensor t = from(rows, cols, std::move(values));
  t.node_->requires_grad = true;
  return t;
}

const Shape& Tensor::shape() const { return node_of(*this).shape; }

std::size_t Tensor::rows() const {
  require_matrix(*this, "rows");
  return shape()[0];
}

std::size_t Tensor::cols() const {
  require_matrix(*this, "cols");
  return shape()[1];
}

std::size_t Tensor::size() const { return node_of(*this).value.size(); }

std::span<const double> Tensor::values() const { return node_of(*this).value; }

std::span<double> Tensor::mutable_values() {
  if (!defined() || !node_->leaf) throw Error("only leaf tensors have writable values");
  return node_->value;
}

double Tensor::at(std::size_t row, std::size_t col) const {
  const Node& n = node_of(*this);
  if (n.shape.size() != 2 || row >= n.shape[0] || col >= n.shape[1]) throw ShapeError("tensor index out of range");
  return n.value[row * n.shape[1] + col];
}

double Tensor::item() const {
  if (size() != 1) throw ShapeError("item() requires a single-element tensor, got " + shape_text(*this));
  return node_of(*this).value[0];
}

bool Tensor::requires_grad() const { return defined() && node_->requires_grad; }

Tensor Tensor::detached() const { return from_shape(shape(), node_of(*this).value); }

// ---------------------------------------------------------------------------
// ParameterSet / Gradients

Tensor ParameterSet::add(std::string name, Tensor parameter) {
  if (!parameter.requires_grad()) throw Error("parameter '" + name + "' does not track gradients");
  if (lookup_.count(name) != 0) throw Error("duplicate parameter name '" + name + "'");
  lookup_.emplace(name, entries_.size());
  entries_.emplace_back(std::move(name), parameter);
  return parameter;
}

bool ParameterSet::contains(std::string_view name) const { return lookup_.count(std::string(name)) != 0; }

Tensor ParameterSet::at(std::string_view name) const {
  const auto it = lookup_.find(std::string(name));
  if (it == lookup_.end()) throw Error("unknown parameter '" + std::string(name) + "'");
  return entries_[it->second].second;
}

std::size_t ParameterSet::scalar_count() const {
  std::size_t total = 0;
  for (const auto& [name, t] : entries_) total += t.size();
  return total;
}

const std::vector<double>* Gradients::find(const Tensor& t) const {
  const auto it = grads_.find(t.id());
  return it == grads_.end() ? nullptr : &it->second;
}

const std::vector<double>& Gradients::at(const Tensor& t) const {
  const auto* g = find(t);
  if (g == nullptr) throw Error("no gradient recorded for tensor");
  return *g;
}

// ---------------------------------------------------------------------------
// Tape

Gradients Tape::backward(const Tensor& loss) {
  if (consumed_) throw Error("backward called twice on the same tape");
  const auto& root = Access::node(loss);
  if (!root) throw Error("backward on an undefined tensor");
  if (root->value.size() != 1) throw ShapeError("backward requires a scalar loss, got " + shape_text(loss));
  Gradients result;
  if (!root->requires_grad) {
    consumed_ = true;
    return result;
  }
  root->grad_buffer()[0] = 1.0;

  std::unordered_set<Node*> leaves;
  if (root->leaf) leaves.insert(root.get());
  for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) {
    Node& n = **it;
    for (const auto& p : n.parents) {
      if (p->leaf && p->requires_grad) leaves.insert(p.get());
    }
    if (n.grad.empty()) continue;  // not on a path to the loss
    n.backward(n);
  }
  for (Node* leaf : leaves) {
    if (leaf->grad.empty()) leaf->grad.assign(leaf->value.size(), 0.0);
    result.grads_.emplace(leaf, std::move(leaf->grad));
    leaf->grad.clear();
  }
  for (auto& n : nodes_) {
    n->grad.clear();
    n->grad.shrink_to_fit();
  }
  nodes_.clear();
  consumed_ = true;
  return result;
}

Gradients Tape::backward(const Tensor& loss, const ParameterSet& params) {
  Gradients result = backward(loss);
  for (const auto& [name, t] : params.entries()) {
    if (!result.contains(t)) result.grads_.emplace(t.id(), std::vector<double>(t.size(), 0.0));
  }
  return result;
}

TapeScope::TapeScope(Tape& tape) : previous_(g_active_tape) { g_active_tape = &tape; }
TapeScope::~TapeScope() { g_active_tape = previous_; }

NoGradScope::NoGradScope() : previous_(g_active_tape) { g_active_tape = nullptr; }
NoGradScope::~NoGradScope() { g_active_tape = previous_; }

Tape* active_tape() { return g_active_tape; }

// ---------------------------------------------------------------------------
// Primitive ops

Tensor matmul(const Tensor& a, const Tensor& b) {
  require_matrix(a, "matmul");
  require_matrix(b, "matmul");
  const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
  if (b.rows() != k) throw ShapeError("matmul: inner dimensions differ " + shape_text(a) + " x " + shape_text(b));
  std::vector<double> out(m * n, 0.0);
  kernels::active().gemm_nn(m, n, k, a.values().data(), b.values().data(), out.data());
  return make_result(m, n, std::move(out), {&a, &b}, [m, n, k](Node& self) {
    Node& pa = *self.parents[0];
    Node& pb = *self.parents[1];
    const auto& kt = kernels::active();
    if (pa.requires_grad) kt.gemm_nt(m, k, n, self.grad.data(), pb.value.data(), pa.grad_buffer().data());
    if (pb.requires_grad) kt.gemm_tn(k, n, m, pa.value.data(), self.grad.data(), pb.grad_buffer().data());
  });
}

Tensor add(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "add");
  const auto av = a.values(), bv = b.values();
  std::vector<double> out(av.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] + bv[i];
  return make_result(a.rows(), a.cols(), std::move(out), {&a, &b}, [](Node& self) {
    for (auto& p : self.parents) {
      if (!p->requires_grad) continue;
      kernels::active().axpy(1.0, self.grad.data(), p->grad_buffer().data(), self.grad.size());
    }
  });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "sub");
  const auto av = a.values(), bv = b.values();
  std::vector<double> out(av.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] - bv[i];
  return make_result(a.rows(), a.cols(), std::move(out), {&a, &b}, [](Node& self) {
    const auto& kt = kernels::active();
    if (self.parents[0]->requires_grad) {
      kt.axpy(1.0, self.grad.data(), self.parents[0]->grad_buffer().data(), self.grad.size());
    }
    if (self.parents[1]->requires_grad) {
      kt.axpy(-1.0, self.grad.data(), self.parents[1]->grad_buffer().data(), self.grad.size());
    }
  });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "mul");
  std::vector<double> out(a.size());
  kernels::active().hadamard(a.values().data(), b.values().data(), out.data(), out.size());
  return make_result(a.rows(), a.cols(), std::move(out), {&a, &b}, [](Node& self) {
    Node& pa = *self.parents[0];
    Node& pb = *self.parents[1];
    if (pa.requires_grad) {
      auto& g = pa.grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * pb.value[i];
    }
    if (pb.requires_grad) {
      auto& g = pb.grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * pa.value[i];
    }
  });
}

Tensor scale(const Tensor& x, double c) {
  require_matrix(x, "scale");
  const auto xv = x.values();
  std::vector<double> out(xv.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = c * xv[i];
  return make_result(x.rows(), x.cols(), std::move(out), {&x}, [c](Node& self) {
    Node& p = *self.parents[0];
    if (p.requires_grad) kernels::active().axpy(c, self.grad.data(), p.grad_buffer().data(), self.grad.size());
  });
}

Tensor mul_scalar(const Tensor& s, const Tensor& x) {
  require_matrix(s, "mul_scalar");
  require_matrix(x, "mul_scalar");
  if (s.size() != 1) throw ShapeError("mul_scalar: expected a 1x1 scalar, got " + shape_text(s));
  const double c = s.item();
  const auto xv = x.values();
  std::vector<double> out(xv.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = c * xv[i];
  return make_result(x.rows(), x.cols(), std::move(out), {&s, &x}, [](Node& self) {
    Node& ps = *self.parents[0];
    Node& px = *self.parents[1];
    const auto& kt = kernels::active();
    if (ps.requires_grad) ps.grad_buffer()[0] += kt.dot(self.grad.data(), px.value.data(), self.grad.size());
    if (px.requires_grad) kt.axpy(ps.value[0], self.grad.data(), px.grad_buffer().data(), self.grad.size());
  });
}

Tensor add_row(const Tensor& x, const Tensor& row) {
  require_matrix(x, "add_row");
  require_matrix(row, "add_row");
  if (row.rows() != 1 || row.cols() != x.cols()) {
    throw ShapeError("add_row: expected a 1x" + std::to_string(x.cols()) + " row, got " + shape_text(row));
  }
  const std::size_t n = x.rows(), m = x.cols();
  const auto xv = x.values(), rv = row.values();
  std::vector<double> out(xv.size());
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < m; ++j) out[i * m + j] = xv[i * m + j] + rv[j];
  }
  return make_result(n, m, std::move(out), {&x, &row}, [n, m](Node& self) {
    Node& px = *self.parents[0];
    Node& pr = *self.parents[1];
    if (px.requires_grad) kernels::active().axpy(1.0, self.grad.data(), px.grad_buffer().data(), self.grad.size());
    if (pr.requires_grad) {
      auto& g = pr.grad_buffer();
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < m; ++j) g[j] += self.grad[i * m + j];
      }
    }
  });
}

Tensor exp(const Tensor& x) {
  return unary(x, [](double v) { return std::exp(v); }, [](double, double y) { return y; });
}

Tensor log(const Tensor& x) {
  return unary(x, [](double v) { return std::log(v); }, [](double v, double) { return 1.0 / v; });
}

Tensor sigmoid(const Tensor& x) {
  return unary(
      x,
      [](double v) {
        if (v >= 0.0) return 1.0 / (1.0 + std::exp(-v));
        const double e = std::exp(v);
        return e / (1.0 + e);
      },
      [](double, double y) { return y * (1.0 - y); });
}

Tensor tanh(const Tensor& x) {
  return unary(x, [](double v) { return std::tanh(v); }, [](double, double y) { return 1.0 - y * y; });
}

Tensor relu(const Tensor& x) {
  return unary(x, [](double v) { return v > 0.0 ? v : 0.0; }, [](double v, double) { return v > 0.0 ? 1.0 : 0.0; });
}

Tensor max_const(const Tensor& x, double c) {
  return unary(x, [c](double v) { return v > c ? v : c; }, [c](double v, double) { return v > c ? 1.0 : 0.0; });
}

Tensor masked_softmax(const Tensor& x, std::span<const std::uint8_t> keep) {
  require_matrix(x, "masked_softmax");
  const std::size_t n = x.rows(), m = x.cols();
  if (!keep.empty() && keep.size() != n * m) {
    throw ShapeError("masked_softmax: mask has " + std::to_string(keep.size()) + " entries, expected " +
                     std::to_string(n * m));
  }
  const auto xv = x.values();
  std::vector<std::uint8_t> live(n * m);
  for (std::size_t i = 0; i < n * m; ++i) {
    live[i] = (keep.empty() || keep[i] != 0) && xv[i] != -std::numeric_limits<double>::infinity();
  }
  std::vector<double> out(n * m, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    double hi = -std::numeric_limits<double>::infinity();
    bool any = false;
    for (std::size_t j = 0; j < m; ++j) {
      if (!live[i * m + j]) continue;
      hi = std::max(hi, xv[i * m + j]);
      any = true;
    }
    if (!any) throw Error("masked_softmax: row " + std::to_string(i) + " has every entry masked");
    double total = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
      if (!live[i * m + j]) continue;
      out[i * m + j] = std::exp(xv[i * m + j] - hi);
      total += out[i * m + j];
    }
    for (std::size_t j = 0; j < m; ++j) out[i * m + j] /= total;
  }
  return make_result(n, m, std::move(out), {&x}, [n, m, live = std::move(live)](Node& self) {
    Node& p = *self.parents[0];
    if (!p.requires_grad) return;
    auto& g = p.grad_buffer();
    for (std::size_t i = 0; i < n; ++i) {
      const double* y = self.value.data() + i * m;
      const double* dy = self.grad.data() + i * m;
      double inner = 0.0;
      for (std::size_t j = 0; j < m; ++j) inner += y[j] * dy[j];
      for (std::size_t j = 0; j < m; ++j) {
        if (live[i * m + j]) g[i * m + j] += y[j] * (dy[j] - inner);
      }
    }
  });
}

Tensor concat_cols(std::span<const Tensor> parts) {
  if (parts.empty()) throw ShapeError("concat_cols: no inputs");
  const std::size_t n = parts[0].rows();
  std::vector<std::size_t> offsets;
  std::size_t total = 0;
  for (const Tensor& p : parts) {
    require_matrix(p, "concat_cols");
    if (p.rows() != n) throw ShapeError("concat_cols: row counts differ");
    offsets.push_back(total);
    total += p.cols();
  }
  std::vector<double> out(n * total);
  for (std::size_t k = 0; k < parts.size(); ++k) {
    const auto v = parts[k].values();
    const std::size_t c = parts[k].cols();
    for (std::size_t i = 0; i < n; ++i) std::copy_n(v.data() + i * c, c, out.data() + i * total + offsets[k]);
  }
  return make_result_n(n, total, std::move(out), parts, [n, total, offsets](Node& self) {
    for (std::size_t k = 0; k < self.parents.size(); ++k) {
      Node& p = *self.parents[k];
      if (!p.requires_grad) continue;
      const std::size_t c = p.shape[1];
      auto& g = p.grad_buffer();
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < c; ++j) g[i * c + j] += self.grad[i * total + offsets[k] + j];
      }
    }
  });
}

Tensor concat_rows(std::span<const Tensor> parts) {
  if (parts.empty()) throw ShapeError("concat_rows: no inputs");
  const std::size_t m = parts[0].cols();
  std::vector<std::size_t> offsets;
  std::size_t total = 0;
  for (const Tensor& p : parts) {
    require_matrix(p, "concat_rows");
    if (p.cols() != m) throw ShapeError("concat_rows: column counts differ");
    offsets.push_back(total);
    total += p.rows();
  }
  std::vector<double> out;
  out.reserve(total * m);
  for (const Tensor& p : parts) out.insert(out.end(), p.values().begin(), p.values().end());
  return make_result_n(total, m, std::move(out), parts, [m, offsets](Node& self) {
    for (std::size_t k = 0; k < self.parents.size(); ++k) {
      Node& p = *self.parents[k];
      if (!p.requires_grad) continue;
      kernels::active().axpy(1.0, self.grad.data() + offsets[k] * m, p.grad_buffer().data(), p.value.size());
    }
  });
}

Tensor gather_rows(const Tensor& x, std::span<const std::uint32_t> index) {
  require_matrix(x, "gather_rows");
  const std::size_t rows = x.rows(), m = x.cols();
  const auto xv = x.values();
  std::vector<double> out(index.size() * m);
  for (std::size_t i = 0; i < index.size(); ++i) {
    if (index[i] >= rows) throw ShapeError("gather_rows: index " + std::to_string(index[i]) + " out of range");
    std::copy_n(xv.data() + static_cast<std::size_t>(index[i]) * m, m, out.data() + i * m);
  }
  std::vector<std::uint32_t> saved(index.begin(), index.end());
  return make_result(index.size(), m, std::move(out), {&x}, [m, saved = std::move(saved)](Node& self) {
    Node& p = *self.parents[0];
    if (!p.requires_grad) return;
    auto& g = p.grad_buffer();
    const auto& kt = kernels::active();
    for (std::size_t i = 0; i < saved.size(); ++i) {
      kt.axpy(1.0, self.grad.data() + i * m, g.data() + static_cast<std::size_t>(saved[i]) * m, m);
    }
  });
}

Tensor scatter_add_rows(const Tensor& x, std::span<const std::uint32_t> index, std::size_t out_rows,
                        std::span<const double> weight) {
  require_matrix(x, "scatter_add_rows");
  const std::size_t n = x.rows(), m = x.cols();
  if (index.size() != n) throw ShapeError("scatter_add_rows: need one index per input row");
  if (!weight.empty() && weight.size() != n) throw ShapeError("scatter_add_rows: need one weight per input row");
  const auto xv = x.values();
  const auto& kt = kernels::active();
  std::vector<double> out(out_rows * m, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    if (index[i] >= out_rows) throw ShapeError("scatter_add_rows: index out of range");
    const double w = weight.empty() ? 1.0 : weight[i];
    kt.axpy(w, xv.data() + i * m, out.data() + static_cast<std::size_t>(index[i]) * m, m);
  }
  std::vector<std::uint32_t> saved(index.begin(), index.end());
  std::vector<double> saved_w(weight.begin(), weight.end());
  return make_result(out_rows, m, std::move(out), {&x},
                     [m, saved = std::move(saved), saved_w = std::move(saved_w)](Node& self) {
                       Node& p = *self.parents[0];
                       if (!p.requires_grad) return;
                       auto& g = p.grad_buffer();
                       const auto& k = kernels::active();
                       for (std::size_t i = 0; i < saved.size(); ++i) {
                         const double w = saved_w.empty() ? 1.0 : saved_w[i];
                         k.axpy(w, self.grad.data() + static_cast<std::size_t>(saved[i]) * m, g.data() + i * m, m);
                       }
                     });
}

Tensor sum(const Tensor& x) {
  require_matrix(x, "sum");
  const double total = kernels::active().sum(x.values().data(), x.size());
  return make_result(1, 1, {total}, {&x}, [](Node& self) {
    Node& p = *self.parents[0];
    if (!p.requires_grad) return;
    auto& g = p.grad_buffer();
    for (double& v : g) v += self.grad[0];
  });
}

Tensor mean(const Tensor& x) {
  if (x.size() == 0) throw ShapeError("mean of an empty tensor");
  return scale(sum(x), 1.0 / static_cast<double>(x.size()));
}

Tensor sum_cols(const Tensor& x) {
  require_matrix(x, "sum_cols");
  const std::size_t n = x.rows(), m = x.cols();
  const auto xv = x.values();
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = kernels::active().sum(xv.data() + i * m, m);
  return make_result(n, 1, std::move(out), {&x}, [n, m](Node& self) {
    Node& p = *self.parents[0];
    if (!p.requires_grad) return;
    auto& g = p.grad_buffer();
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < m; ++j) g[i * m + j] += self.grad[i];
    }
  });
}

Tensor slice_cols(const Tensor& x, std::size_t begin, std::size_t end) {
  require_matrix(x, "slice_cols");
  const std::size_t n = x.rows(), m = x.cols();
  if (begin > end || end > m) throw ShapeError("slice_cols: range out of bounds");
  const std::size_t w = end - begin;
  const auto xv = x.values();
  std::vector<double> out(n * w);
  for (std::size_t i = 0; i < n; ++i) std::copy_n(xv.data() + i * m + begin, w, out.data() + i * w);
  return make_result(n, w, std::move(out), {&x}, [n, m, w, begin](Node& self) {
    Node& p = *self.parents[0];
    if (!p.requires_grad) return;
    auto& g = p.grad_buffer();
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < w; ++j) g[i * m + begin + j] += self.grad[i * w + j];
    }
  });
}

Tensor reshape(const Tensor& x, std::size_t rows, std::size_t cols) {
  if (rows * cols != x.size()) throw ShapeError("reshape: element count changes");
  std::vector<double> out(x.values().begin(), x.values().end());
  return make_result(rows, cols, std::move(out), {&x}, [](Node& self) {
    Node& p = *self.parents[0];
    if (p.requires_grad) kernels::active().axpy(1.0, self.grad.data(), p.grad_buffer().data(), self.grad.size());
  });
}

Tensor transpose(const Tensor& x) {
  require_matrix(x, "transpose");
  const std::size_t n = x.rows(), m = x.cols();
  const auto xv = x.values();
  std::vector<double> out(n * m);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < m; ++j) out[j * n + i] = xv[i * m + j];
  }
  return make_result(m, n, std::move(out), {&x}, [n, m](Node& self) {
    Node& p = *self.parents[0];
    if (!p.requires_grad) return;
    auto& g = p.grad_buffer();
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < m; ++j) g[i * m + j] += self.grad[j * n + i];
    }
  });
}

Tensor scale_rows(const Tensor& x, const Tensor& column) {
  require_matrix(column, "scale_rows");
  if (column.cols() != 1 || column.rows() != x.rows()) {
    throw ShapeError("scale_rows: expected a " + std::to_string(x.rows()) + "x1 column, got " + shape_text(column));
  }
  return mul(x, matmul(column, Tensor::filled(1, x.cols(), 1.0)));
}

Tensor convex_mix(const Tensor& x, const Tensor& z, const Tensor& alpha) {
  require_same_shape(x, z, "convex_mix");
  const Tensor one_minus = sub(Tensor::filled(alpha.rows(), alpha.cols(), 1.0), alpha);
  return add(scale_rows(x, alpha), scale_rows(z, one_minus));
}

}  // namespace tkg::tensor
