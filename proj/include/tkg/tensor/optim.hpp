#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "tkg/tensor/tensor.hpp"

namespace tkg::tensor {

struct AdamOptions {
  double learning_rate = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// First/second moment estimates, keyed by parameter name.
struct AdamState {
  AdamOptions options;
  std::uint64_t step = 0;
  std::unordered_map<std::string, std::vector<double>> m;
  std::unordered_map<std::string, std::vector<double>> v;
};

/// One bias-corrected Adam update of every parameter in `params`, in place.
/// Throws if a parameter has no gradient entry.
void adam_step(ParameterSet& params, const Gradients& grads, AdamState& state);

}  // namespace tkg::tensor
