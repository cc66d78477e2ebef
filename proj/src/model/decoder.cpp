#include "tkg/model/decoder.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include "tkg/error.hpp"
#include "tkg/kernels/kernels.hpp"

namespace tkg::model {

using tensor::Tensor;

DecoderKind parse_decoder(const std::string& name) {
  if (name == "transe") return DecoderKind::TransE;
  if (name == "distmult") return DecoderKind::DistMult;
  if (name == "complex") return DecoderKind::ComplEx;
  throw ConfigError("unknown decoder '" + name + "' (expected transe, distmult or complex)");
}

const char* decoder_name(DecoderKind kind) {
  switch (kind) {
    case DecoderKind::TransE: return "transe";
    case DecoderKind::DistMult: return "distmult";
    case DecoderKind::ComplEx: return "complex";
  }
  return "?";
}

double score(std::span<const double> s, std::span<const double> r, std::span<const double> o, DecoderKind kind) {
  const std::size_t d = s.size();
  if (r.size() != d || o.size() != d) throw ShapeError("score: vector sizes differ");
  switch (kind) {
    case DecoderKind::TransE: {
      double acc = 0.0;
      for (std::size_t i = 0; i < d; ++i) acc += std::fabs(s[i] + r[i] - o[i]);
      return -acc;
    }
    case DecoderKind::DistMult: {
      double acc = 0.0;
      for (std::size_t i = 0; i < d; ++i) acc += s[i] * r[i] * o[i];
      return acc;
    }
    case DecoderKind::ComplEx: {
      if (d % 2 != 0) throw ShapeError("complex decoder needs an even dimension");
      const std::size_t h = d / 2;
      double acc = 0.0;
      for (std::size_t i = 0; i < h; ++i) {
        const double sr = s[i], si = s[h + i], rr = r[i], ri = r[h + i], orr = o[i], oi = o[h + i];
        acc += (sr * rr - si * ri) * orr + (sr * ri + si * rr) * oi;
      }
      return acc;
    }
  }
  return 0.0;
}

namespace {

void require_even(const Tensor& t) {
  if (t.cols() % 2 != 0) throw ShapeError("complex decoder needs an even dimension");
}

Tensor concat2(const Tensor& a, const Tensor& b) {
  const Tensor parts[] = {a, b};
  return tensor::concat_cols(parts);
}

}  // namespace

Tensor object_query_vectors(const Tensor& s, const Tensor& r, DecoderKind kind) {
  switch (kind) {
    case DecoderKind::DistMult: return tensor::mul(s, r);
    case DecoderKind::ComplEx: {
      require_even(s);
      const std::size_t h = s.cols() / 2, d = s.cols();
      const Tensor sr = tensor::slice_cols(s, 0, h), si = tensor::slice_cols(s, h, d);
      const Tensor rr = tensor::slice_cols(r, 0, h), ri = tensor::slice_cols(r, h, d);
      return concat2(tensor::sub(tensor::mul(sr, rr), tensor::mul(si, ri)),
                     tensor::add(tensor::mul(si, rr), tensor::mul(sr, ri)));
    }
    case DecoderKind::TransE: break;
  }
  throw Error("query vectors exist only for linear decoders");
}

Tensor subject_query_vectors(const Tensor& o, const Tensor& r, DecoderKind kind) {
  switch (kind) {
    case DecoderKind::DistMult: return tensor::mul(o, r);
    case DecoderKind::ComplEx: {
      require_even(o);
      const std::size_t h = o.cols() / 2, d = o.cols();
      const Tensor orr = tensor::slice_cols(o, 0, h), oi = tensor::slice_cols(o, h, d);
      const Tensor rr = tensor::slice_cols(r, 0, h), ri = tensor::slice_cols(r, h, d);
      return concat2(tensor::add(tensor::mul(rr, orr), tensor::mul(ri, oi)),
                     tensor::sub(tensor::mul(rr, oi), tensor::mul(ri, orr)));
    }
    case DecoderKind::TransE: break;
  }
  throw Error("query vectors exist only for linear decoders");
}

Tensor score_rows(const Tensor& s, const Tensor& r, const Tensor& o, DecoderKind kind) {
  switch (kind) {
    case DecoderKind::TransE: {
      const Tensor diff = tensor::sub(tensor::add(s, r), o);
      const Tensor abs = tensor::add(tensor::relu(diff), tensor::relu(tensor::scale(diff, -1.0)));
      return tensor::scale(tensor::sum_cols(abs), -1.0);
    }
    case DecoderKind::DistMult:
    case DecoderKind::ComplEx: return tensor::sum_cols(tensor::mul(object_query_vectors(s, r, kind), o));
  }
  return {};
}

// ---------------------------------------------------------------------------
// Negatives

NegativeSlot sample_slot(std::span<const EntityId> known, std::size_t entity_count, std::size_t k, Rng& rng) {
  NegativeSlot slot;
  if (k == 0) throw ConfigError("negative sample count must be positive");
  const std::unordered_set<EntityId> excluded(known.begin(), known.end());
  std::size_t excluded_in_range = 0;
  for (EntityId e : excluded) excluded_in_range += e < entity_count;
  const std::size_t available = entity_count - excluded_in_range;
  if (available == 0) {
    slot.valid = false;
    return slot;
  }
  slot.entities.reserve(k);
  if (available < k) {
    slot.with_replacement = true;
    std::vector<EntityId> pool;
    for (std::size_t e = 0; e < entity_count; ++e) {
      if (!excluded.count(static_cast<EntityId>(e))) pool.push_back(static_cast<EntityId>(e));
    }
    std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
    for (std::size_t i = 0; i < k; ++i) slot.entities.push_back(pool[pick(rng)]);
    return slot;
  }
  if (2 * k <= available) {
    // Rejection sampling: cheap when the vocabulary dwarfs k.
    std::uniform_int_distribution<EntityId> pick(0, static_cast<EntityId>(entity_count - 1));
    std::unordered_set<EntityId> chosen;
    while (slot.entities.size() < k) {
      const EntityId e = pick(rng);
      if (excluded.count(e) || !chosen.insert(e).second) continue;
      slot.entities.push_back(e);
    }
    return slot;
  }
  std::vector<EntityId> pool;
  for (std::size_t e = 0; e < entity_count; ++e) {
    if (!excluded.count(static_cast<EntityId>(e))) pool.push_back(static_cast<EntityId>(e));
  }
  for (std::size_t i = 0; i < k; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, pool.size() - 1);
    std::swap(pool[i], pool[pick(rng)]);
    slot.entities.push_back(pool[i]);
  }
  return slot;
}

NegativeBatch sample_negatives(const Quadruple& positive, const TrueTripleIndex& index, std::size_t entity_count,
                               std::size_t k, Rng& rng) {
  NegativeBatch batch;
  batch.objects = sample_slot(index.objects(positive.subject, positive.relation, positive.time), entity_count, k, rng);
  batch.subjects =
      sample_slot(index.subjects(positive.relation, positive.object, positive.time), entity_count, k, rng);
  return batch;
}

// ---------------------------------------------------------------------------
// Loss

LossMode parse_loss(const std::string& name) {
  if (name == "cross_entropy") return LossMode::CrossEntropy;
  if (name == "prob_sum") return LossMode::ProbSum;
  throw ConfigError("unknown loss '" + name + "' (expected cross_entropy or prob_sum)");
}

const char* loss_name(LossMode mode) { return mode == LossMode::CrossEntropy ? "cross_entropy" : "prob_sum"; }

namespace {

/// log sum_j exp(x_ij) per row, shifted by the (constant) row max.
Tensor log_sum_exp_rows(const Tensor& x) {
  const std::size_t n = x.rows(), m = x.cols();
  const auto v = x.values();
  std::vector<double> max(n);
  for (std::size_t i = 0; i < n; ++i) max[i] = *std::max_element(v.begin() + i * m, v.begin() + (i + 1) * m);
  const Tensor shift = Tensor::from(n, 1, max);
  const Tensor spread = tensor::matmul(shift, Tensor::filled(1, m, 1.0));
  return tensor::add(tensor::log(tensor::sum_cols(tensor::exp(tensor::sub(x, spread)))), shift);
}

}  // namespace

Tensor query_loss(const Tensor& scores, LossMode mode) {
  if (scores.cols() < 2) throw Error("loss needs at least one negative per query");
  if (scores.rows() == 0) return Tensor::scalar(0.0);
  const Tensor positive = tensor::slice_cols(scores, 0, 1);
  if (mode == LossMode::CrossEntropy) return tensor::sum(tensor::sub(log_sum_exp_rows(scores), positive));
  const Tensor negatives = tensor::slice_cols(scores, 1, scores.cols());
  return tensor::scale(tensor::sum(tensor::exp(tensor::sub(positive, log_sum_exp_rows(negatives)))), -1.0);
}

}  // namespace tkg::model
