#pragma once

// Temporal encoders turning a window of structural embeddings into z_t.
//
// A window is a list of frames at offsets t' - t. Unidirectional windows
// cover offsets -tau..0; bidirectional ones -tau/2..tau/2. Only steps where
// an entity is active contribute to its representation.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "tkg/core/dataset.hpp"
#include "tkg/core/random.hpp"
#include "tkg/tensor/tensor.hpp"

namespace tkg::model {

/// gamma = exp(-max(0, lambda * dt + b)).
double decay_weight(double delta_t, double lambda, double b);

/// Differentiable decay weights for a column of constant gaps: n x 1.
tensor::Tensor decay_column(std::span<const double> deltas, const tensor::Tensor& lambda, const tensor::Tensor& b);

struct WindowFrame {
  int offset = 0;  // t' - t
  tensor::Tensor x;  // |E| x d structural embeddings at t'
  std::vector<std::uint8_t> active;  // 1 where the entity is active at t'
};

/// Frames sorted by ascending offset; exactly one frame has offset 0.
struct EncoderWindow {
  std::vector<WindowFrame> frames;

  const WindowFrame& current() const;
  std::size_t entity_count() const { return current().active.size(); }
};

/// PyTorch-layout GRU cell on row vectors:
///   r = sig(x Wir + bir + h Whr + bhr)
///   u = sig(x Wiz + biz + h Whz + bhz)
///   n = tanh(x Win + bin + r * (h Whn + bhn))
///   h' = (1 - u) * n + u * h
struct GruCell {
  tensor::Tensor w_input;   // d x 3d, gate order [r | u | n]
  tensor::Tensor w_hidden;  // d x 3d
  tensor::Tensor b_input;   // 1 x 3d
  tensor::Tensor b_hidden;  // 1 x 3d

  static GruCell create(std::size_t dim, tensor::ParameterSet& params, Rng& rng, const std::string& prefix);
  tensor::Tensor step(const tensor::Tensor& x, const tensor::Tensor& h) const;
  std::size_t dim() const { return w_input.rows(); }
};

/// Decayed recurrence over each entity's active steps. The hidden state
/// starts at zero for every window; the chain skips steps where the entity
/// is inactive and decays the carried state by gamma(dt) at each hop.
/// Bidirectional mode runs an independent backward cell over future frames
/// and sums the two outputs.
class GruEncoder {
 public:
  GruEncoder(std::size_t dim, bool bidirectional, tensor::ParameterSet& params, Rng& rng,
             const std::string& prefix = "gru");

  /// `x_query` replaces x_t as the input of the final step (imputation).
  tensor::Tensor encode(const EncoderWindow& window, const tensor::Tensor& x_query) const;

  const GruCell& forward_cell() const { return forward_; }
  const GruCell& backward_cell() const { return backward_; }
  const tensor::Tensor& lambda() const { return lambda_; }
  const tensor::Tensor& bias() const { return bias_; }

 private:
  tensor::Tensor run(const EncoderWindow& window, const tensor::Tensor& x_query, const GruCell& cell,
                     bool future) const;

  bool bidirectional_;
  GruCell forward_;
  GruCell backward_;
  tensor::Tensor lambda_;
  tensor::Tensor bias_;
};

struct AttentionOutput {
  tensor::Tensor z;     // |E| x d
  tensor::Tensor beta;  // |E| x frames, averaged over heads
  std::vector<tensor::Tensor> head_beta;  // per head, |E| x frames
};

/// Masked multi-head self-attention of x_t over the window:
///   e_ij = (x_t Wq)(x_{t+o_j} Wk)^T / sqrt(d_h) - max(0, lambda |o_j| + b) + M_ij
///   z_i  = sum_j beta_ij x_{t+o_j} Wv
/// M_ij = -inf where entity i is inactive at offset o_j. Heads split the
/// dimension and are concatenated. An entity inactive everywhere attends
/// only to offset 0, i.e. z = x_t Wv.
class SelfAttentionEncoder {
 public:
  SelfAttentionEncoder(std::size_t dim, std::size_t heads, tensor::ParameterSet& params, Rng& rng,
                       const std::string& prefix = "sa");

  tensor::Tensor encode(const EncoderWindow& window, const tensor::Tensor& x_query) const {
    return attend(window, x_query).z;
  }
  AttentionOutput attend(const EncoderWindow& window, const tensor::Tensor& x_query) const;

  std::size_t heads() const { return heads_; }
  const tensor::Tensor& w_query() const { return w_query_; }
  const tensor::Tensor& w_key() const { return w_key_; }
  const tensor::Tensor& w_value() const { return w_value_; }
  const tensor::Tensor& lambda() const { return lambda_; }
  const tensor::Tensor& bias() const { return bias_; }

 private:
  std::size_t heads_;
  tensor::Tensor w_query_;
  tensor::Tensor w_key_;
  tensor::Tensor w_value_;
  tensor::Tensor lambda_;
  tensor::Tensor bias_;
};

/// z + p_t on every row. `positions` is T x d.
tensor::Tensor add_positional(const tensor::Tensor& z, const tensor::Tensor& positions, TimeStep t);

}  // namespace tkg::model
