#include "tkg/tensor/optim.hpp"

#include <cmath>

#include "tkg/error.hpp"

namespace tkg::tensor {

void adam_step(ParameterSet& params, const Gradients& grads, AdamState& state) {
  const AdamOptions& o = state.options;
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double correction1 = 1.0 - std::pow(o.beta1, t);
  const double correction2 = 1.0 - std::pow(o.beta2, t);
  for (const auto& [name, param] : params.entries()) {
    const std::vector<double>* g = grads.find(param);
    if (g == nullptr) throw Error("adam: no gradient for parameter '" + name + "'");
    Tensor p = param;
    auto values = p.mutable_values();
    auto& m = state.m[name];
    auto& v = state.v[name];
    if (m.size() != values.size()) {
      m.assign(values.size(), 0.0);
      v.assign(values.size(), 0.0);
    }
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double gi = (*g)[i];
      m[i] = o.beta1 * m[i] + (1.0 - o.beta1) * gi;
      v[i] = o.beta2 * v[i] + (1.0 - o.beta2) * gi * gi;
      const double m_hat = m[i] / correction1;
      const double v_hat = v[i] / correction2;
      values[i] -= o.learning_rate * m_hat / (std::sqrt(v_hat) + o.epsilon);
    }
  }
}

}  // namespace tkg::tensor
