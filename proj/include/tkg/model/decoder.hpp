#pragma once

// Quadruple scoring, negative sampling and the training objective.

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "tkg/core/dataset.hpp"
#include "tkg/core/random.hpp"
#include "tkg/core/true_index.hpp"
#include "tkg/tensor/tensor.hpp"

namespace tkg::model {

enum class DecoderKind { TransE, DistMult, ComplEx };

DecoderKind parse_decoder(const std::string& name);
const char* decoder_name(DecoderKind kind);
/// DistMult and ComplEx are linear in each entity argument.
inline bool is_linear(DecoderKind kind) { return kind != DecoderKind::TransE; }

/// TransE: -|s + r - o|_1. DistMult: sum_k s_k r_k o_k.
/// ComplEx: Re<s, r, conj(o)>, first half of each vector real, second half
/// imaginary.
double score(std::span<const double> s, std::span<const double> r, std::span<const double> o, DecoderKind kind);

/// Row-paired scores: row i of the result scores (S[i], R[i], O[i]). n x 1.
tensor::Tensor score_rows(const tensor::Tensor& s, const tensor::Tensor& r, const tensor::Tensor& o,
                          DecoderKind kind);

/// For linear decoders: w with score(s, r, o) = w . o (object side) or
/// w . s (subject side), one row per query.
tensor::Tensor object_query_vectors(const tensor::Tensor& s, const tensor::Tensor& r, DecoderKind kind);
tensor::Tensor subject_query_vectors(const tensor::Tensor& o, const tensor::Tensor& r, DecoderKind kind);

// ---------------------------------------------------------------------------
// Negatives

struct NegativeSlot {
  std::vector<EntityId> entities;
  /// False when every entity completes a known fact; the slot is skipped.
  bool valid = true;
  /// Fewer valid corruptions than requested: drawn with replacement.
  bool with_replacement = false;
};

struct NegativeBatch {
  NegativeSlot objects;   // corruptions of (s, r, ?, t)
  NegativeSlot subjects;  // corruptions of (?, r, o, t)
};

/// Uniform corruptions of each slot that avoid every completion known to
/// `index` at time t. Sampling is without replacement whenever enough valid
/// corruptions exist.
NegativeBatch sample_negatives(const Quadruple& positive, const TrueTripleIndex& index, std::size_t entity_count,
                               std::size_t k, Rng& rng);

NegativeSlot sample_slot(std::span<const EntityId> known, std::size_t entity_count, std::size_t k, Rng& rng);

// ---------------------------------------------------------------------------
// Loss

/// CrossEntropy: -log softmax of the positive over {positive, negatives}.
/// ProbSum: -exp(s+) / sum_neg exp(s-), the un-logged ratio.
enum class LossMode { CrossEntropy, ProbSum };

LossMode parse_loss(const std::string& name);
const char* loss_name(LossMode mode);

/// `scores` is n x (1 + k) with the positive in column 0. Returns the sum of
/// the n per-query losses as a 1 x 1 tensor.
tensor::Tensor query_loss(const tensor::Tensor& scores, LossMode mode = LossMode::CrossEntropy);

}  // namespace tkg::model
