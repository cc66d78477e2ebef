#pragma once

// Relational graph convolution over a single snapshot.
//
//   h_i^{l+1} = act( sum_r sum_{j in N_i^r} (1/|N_i^r|) h_j^l W_r^l + h_i^l W_s^l )
//
// Each relation r also gets an inverse r + R so that objects receive
// messages from their subjects. act is ReLU on hidden layers and the
// identity on the last one. Vectors are rows, so weights multiply on the
// right.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "tkg/core/dataset.hpp"
#include "tkg/core/random.hpp"
#include "tkg/tensor/tensor.hpp"

namespace tkg::model {

struct RgcnConfig {
  std::size_t entities = 0;
  std::size_t relations = 0;
  std::size_t dim = 128;
  std::size_t layers = 2;
};

class RgcnEncoder {
 public:
  /// Registers `<prefix>.base`, `<prefix>.l<k>.rel<r>` and `<prefix>.l<k>.self`.
  RgcnEncoder(const RgcnConfig& config, tensor::ParameterSet& params, Rng& rng, const std::string& prefix = "rgcn");

  /// |E| x d structural embeddings for every entity of the snapshot's graph.
  tensor::Tensor encode(const Snapshot& snapshot) const;

  const RgcnConfig& config() const { return config_; }
  const tensor::Tensor& base() const { return base_; }
  const tensor::Tensor& relation_weight(std::size_t layer, std::size_t relation) const {
    return relation_weights_[layer][relation];
  }
  const tensor::Tensor& self_weight(std::size_t layer) const { return self_weights_[layer]; }

 private:
  RgcnConfig config_;
  tensor::Tensor base_;
  std::vector<std::vector<tensor::Tensor>> relation_weights_;  // [layer][2R]
  std::vector<tensor::Tensor> self_weights_;
};

/// Keeps each triple independently with probability 1 - rate.
Snapshot drop_edges(const Snapshot& snapshot, double rate, std::uint64_t seed);

/// Applies `current_rate` to window[current] and `reference_rate` to every
/// other snapshot. Each snapshot's stream is derived from (seed, time, role),
/// so the result does not depend on window order.
std::vector<Snapshot> temporal_edge_dropout(std::span<const Snapshot> window, std::size_t current,
                                            double current_rate, double reference_rate, std::uint64_t seed);

}  // namespace tkg::model
