#pragma once

#include <cmath>
#include <cstddef>
#include <random>
#include <vector>

#include "tkg/core/random.hpp"
#include "tkg/tensor/tensor.hpp"

namespace tkg::model {

/// Uniform(-a, a) with a = sqrt(6 / (fan_in + fan_out)).
inline tensor::Tensor xavier_parameter(std::size_t rows, std::size_t cols, Rng& rng) {
  const double a = std::sqrt(6.0 / static_cast<double>(rows + cols));
  std::uniform_real_distribution<double> dist(-a, a);
  std::vector<double> v(rows * cols);
  for (double& x : v) x = dist(rng);
  return tensor::Tensor::parameter(rows, cols, std::move(v));
}

inline tensor::Tensor constant_parameter(std::size_t rows, std::size_t cols, double value) {
  return tensor::Tensor::parameter(rows, cols, std::vector<double>(rows * cols, value));
}

}  // namespace tkg::model
