#pragma once

// One finite-difference case per tensor primitive. Each case owns random
// leaf tensors and a closure that reduces the op's output to a scalar with
// fixed random weights, so every output element gets a distinct upstream
// gradient.

#include <memory>
#include <random>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "tkg/tensor/tensor.hpp"

namespace tkg::testing {

struct GradientCase {
  std::string name;
  std::vector<std::pair<std::string, tensor::Tensor>> leaves;
  std::function<tensor::Tensor()> loss;
};

inline tensor::Tensor random_leaf(std::size_t rows, std::size_t cols, std::mt19937_64& rng, double lo = -1.5,
                                  double hi = 1.5) {
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<double> v(rows * cols);
  for (double& x : v) x = u(rng);
  return tensor::Tensor::parameter(rows, cols, std::move(v));
}

/// sum(out * W) for a fixed random W matching out's shape.
inline tensor::Tensor weighted_sum(const tensor::Tensor& out, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<double> w(out.size());
  for (double& x : w) x = u(rng);
  return tensor::sum(tensor::mul(out, tensor::Tensor::from(out.rows(), out.cols(), std::move(w))));
}

inline std::vector<GradientCase> primitive_gradient_cases(std::uint64_t seed) {
  namespace T = tkg::tensor;
  using tensor::Tensor;
  std::mt19937_64 rng(seed);
  std::vector<GradientCase> cases;
  auto unary = [&](std::string name, std::function<Tensor(const Tensor&)> op, std::size_t r, std::size_t c,
                   double lo = -1.5, double hi = 1.5) {
    Tensor x = random_leaf(r, c, rng, lo, hi);
    cases.push_back({name, {{"x", x}}, [x, op, seed] { return weighted_sum(op(x), seed + 1); }});
  };
  auto binary = [&](std::string name, std::function<Tensor(const Tensor&, const Tensor&)> op, std::size_t ar,
                    std::size_t ac, std::size_t br, std::size_t bc) {
    Tensor a = random_leaf(ar, ac, rng), b = random_leaf(br, bc, rng);
    cases.push_back({name, {{"a", a}, {"b", b}}, [a, b, op, seed] { return weighted_sum(op(a, b), seed + 2); }});
  };

  binary("matmul", [](const Tensor& a, const Tensor& b) { return T::matmul(a, b); }, 3, 4, 4, 2);
  binary("add", [](const Tensor& a, const Tensor& b) { return T::add(a, b); }, 3, 2, 3, 2);
  binary("sub", [](const Tensor& a, const Tensor& b) { return T::sub(a, b); }, 3, 2, 3, 2);
  binary("mul", [](const Tensor& a, const Tensor& b) { return T::mul(a, b); }, 3, 2, 3, 2);
  binary("mul_scalar", [](const Tensor& s, const Tensor& x) { return T::mul_scalar(s, x); }, 1, 1, 3, 2);
  binary("add_row", [](const Tensor& x, const Tensor& r) { return T::add_row(x, r); }, 3, 4, 1, 4);
  binary("concat_cols", [](const Tensor& a, const Tensor& b) { return T::concat_cols(std::vector{a, b}); }, 3, 2,
         3, 1);
  binary("concat_rows", [](const Tensor& a, const Tensor& b) { return T::concat_rows(std::vector{a, b}); }, 2, 3,
         1, 3);
  binary("scale_rows", [](const Tensor& x, const Tensor& c) { return T::scale_rows(x, c); }, 3, 4, 3, 1);
  unary("scale", [](const Tensor& x) { return T::scale(x, -2.5); }, 2, 3);
  unary("exp", [](const Tensor& x) { return T::exp(x); }, 2, 3);
  unary("log", [](const Tensor& x) { return T::log(x); }, 2, 3, 0.2, 3.0);
  unary("sigmoid", [](const Tensor& x) { return T::sigmoid(x); }, 2, 3);
  unary("tanh", [](const Tensor& x) { return T::tanh(x); }, 2, 3);
  unary("relu", [](const Tensor& x) { return T::relu(x); }, 3, 3);
  unary("max_const", [](const Tensor& x) { return T::max_const(x, 0.3); }, 3, 3);
  unary("softmax", [](const Tensor& x) { return T::masked_softmax(x); }, 3, 4);
  unary("masked_softmax",
        [](const Tensor& x) {
          static const std::vector<std::uint8_t> keep = {1, 0, 1, 1, 0, 1, 0, 0, 1, 1, 1, 1};
          return T::masked_softmax(x, keep);
        },
        3, 4);
  unary("gather_rows",
        [](const Tensor& x) {
          static const std::vector<std::uint32_t> idx = {2, 0, 2, 1, 2};
          return T::gather_rows(x, idx);
        },
        3, 2);
  unary("scatter_add_rows",
        [](const Tensor& x) {
          static const std::vector<std::uint32_t> idx = {1, 3, 1, 0};
          static const std::vector<double> w = {0.5, -1.0, 2.0, 0.25};
          return T::scatter_add_rows(x, idx, 5, w);
        },
        4, 3);
  unary("scatter_add_rows_unweighted",
        [](const Tensor& x) {
          static const std::vector<std::uint32_t> idx = {2, 2, 0};
          return T::scatter_add_rows(x, idx, 3);
        },
        3, 2);
  unary("sum", [](const Tensor& x) { return T::sum(x); }, 3, 2);
  unary("mean", [](const Tensor& x) { return T::mean(x); }, 3, 2);
  unary("sum_cols", [](const Tensor& x) { return T::sum_cols(x); }, 3, 4);
  unary("slice_cols", [](const Tensor& x) { return T::slice_cols(x, 1, 3); }, 3, 4);
  unary("reshape", [](const Tensor& x) { return T::reshape(x, 2, 6); }, 3, 4);
  unary("transpose", [](const Tensor& x) { return T::transpose(x); }, 3, 4);
  {
    Tensor x = random_leaf(3, 2, rng), z = random_leaf(3, 2, rng), a = random_leaf(3, 1, rng, 0.05, 0.95);
    cases.push_back({"convex_mix",
                     {{"x", x}, {"z", z}, {"alpha", a}},
                     [x, z, a, seed] { return weighted_sum(T::convex_mix(x, z, a), seed + 3); }});
  }
  return cases;
}

}  // namespace tkg::testing
