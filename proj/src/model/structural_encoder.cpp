#include "tkg/model/structural_encoder.hpp"

#include <random>

#include "tkg/error.hpp"
#include "tkg/model/init.hpp"

namespace tkg::model {

using tensor::Tensor;

RgcnEncoder::RgcnEncoder(const RgcnConfig& config, tensor::ParameterSet& params, Rng& rng,
                         const std::string& prefix)
    : config_(config) {
  if (config.entities == 0 || config.dim == 0) throw ConfigError("rgcn: entity count and dimension must be positive");
  if (config.layers == 0) throw ConfigError("rgcn: at least one layer is required");
  const std::size_t d = config.dim;
  base_ = params.add(prefix + ".base", xavier_parameter(config.entities, d, rng));
  relation_weights_.resize(config.layers);
  for (std::size_t l = 0; l < config.layers; ++l) {
    for (std::size_t r = 0; r < 2 * config.relations; ++r) {
      relation_weights_[l].push_back(
          params.add(prefix + ".l" + std::to_string(l) + ".rel" + std::to_string(r), xavier_parameter(d, d, rng)));
    }
    self_weights_.push_back(params.add(prefix + ".l" + std::to_string(l) + ".self", xavier_parameter(d, d, rng)));
  }
}

Tensor RgcnEncoder::encode(const Snapshot& snapshot) const {
  const std::size_t E = config_.entities;
  const std::size_t R = config_.relations;

  // Edge lists per directed relation: messages flow src -> dst.
  std::vector<std::vector<std::uint32_t>> src(2 * R), dst(2 * R);
  for (const Triple& tr : snapshot.triples) {
    if (tr.subject >= E || tr.object >= E || tr.relation >= R) throw DataError("rgcn: triple index out of range");
    src[tr.relation].push_back(tr.object);
    dst[tr.relation].push_back(tr.subject);
    src[tr.relation + R].push_back(tr.subject);
    dst[tr.relation + R].push_back(tr.object);
  }

  std::vector<std::uint32_t> all_dst;
  std::vector<double> weight;
  std::vector<std::uint32_t> in_degree(E);
  for (std::size_t r = 0; r < 2 * R; ++r) {
    if (dst[r].empty()) continue;
    for (auto i : dst[r]) ++in_degree[i];
    for (auto i : dst[r]) {
      all_dst.push_back(i);
      weight.push_back(1.0 / in_degree[i]);
    }
    for (auto i : dst[r]) in_degree[i] = 0;
  }

  Tensor h = base_;
  for (std::size_t l = 0; l < config_.layers; ++l) {
    Tensor out = tensor::matmul(h, self_weights_[l]);
    if (!all_dst.empty()) {
      std::vector<Tensor> messages;
      for (std::size_t r = 0; r < 2 * R; ++r) {
        if (src[r].empty()) continue;
        messages.push_back(tensor::matmul(tensor::gather_rows(h, src[r]), relation_weights_[l][r]));
      }
      const Tensor stacked = messages.size() == 1 ? messages[0] : tensor::concat_rows(messages);
      out = tensor::add(out, tensor::scatter_add_rows(stacked, all_dst, E, weight));
    }
    h = l + 1 < config_.layers ? tensor::relu(out) : out;
  }
  return h;
}

Snapshot drop_edges(const Snapshot& snapshot, double rate, std::uint64_t seed) {
  if (rate < 0.0 || rate > 1.0) throw ConfigError("edge dropout rate must lie in [0, 1]");
  Snapshot out{snapshot.time, {}};
  if (rate == 0.0) {
    out.triples = snapshot.triples;
    return out;
  }
  if (rate == 1.0) return out;
  Rng rng(seed);
  std::bernoulli_distribution keep(1.0 - rate);
  for (const Triple& tr : snapshot.triples) {
    if (keep(rng)) out.triples.push_back(tr);
  }
  return out;
}

std::vector<Snapshot> temporal_edge_dropout(std::span<const Snapshot> window, std::size_t current,
                                            double current_rate, double reference_rate, std::uint64_t seed) {
  std::vector<Snapshot> out;
  out.reserve(window.size());
  for (std::size_t k = 0; k < window.size(); ++k) {
    const bool is_current = k == current;
    const std::uint64_t stream = derive_seed(seed, {window[k].time, is_current ? 0u : 1u});
    out.push_back(drop_edges(window[k], is_current ? current_rate : reference_rate, stream));
  }
  return out;
}

}  // namespace tkg::model
