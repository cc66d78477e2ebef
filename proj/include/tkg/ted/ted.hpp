#pragma once

// Temporal exponential decay (TED): a rule baseline that ranks entities
// seen in related training facts at other steps, preferring facts that
// share more of the query and lie closer in time.
//
// Tiers for an object query (s, r, ?, t), each a set of (o', t') with t' != t:
//   1. (s, r, o') in train at t'
//   2. (s, r', o') for any r'
//   3. (s', r, o') for any s'
// Subject queries mirror this. A tuple in tier 1 is removed from tiers 2 and
// 3, and a tuple in tier 2 from tier 3. An entity scores
// sum exp(-sigma |t - t'|) over its tuples in a tier.

#include <array>
#include <cstddef>
#include <ostream>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "tkg/core/dataset.hpp"
#include "tkg/eval/evaluation.hpp"

namespace tkg::ted {

using Tuple = std::pair<EntityId, TimeStep>;

struct ReferenceSets {
  std::array<std::vector<Tuple>, 3> tiers;  // each sorted and unique
};

enum class Blend { Lexicographic, Sum };

Blend parse_blend(const std::string& name);

/// Per-tier weights used by Blend::Sum.
inline constexpr std::array<double, 3> kBlendWeights = {1.0, 0.5, 0.25};

struct TedConfig {
  double sigma = 0.1;
  Blend blend = Blend::Lexicographic;
};

/// Training facts indexed by every key a reference tier needs.
class TedIndex {
 public:
  static TedIndex build(const TkgDataset& dataset);

  ReferenceSets reference_sets(const model::Query& query) const;
  std::size_t entity_count() const { return entities_; }

 private:
  using Table = std::unordered_map<std::uint64_t, std::vector<Tuple>>;
  std::size_t entities_ = 0;
  std::size_t relations_ = 0;
  // Object-query tables keyed by (s, r), s, r; subject-query ones by (r, o), o, r.
  Table obj_sr_, obj_s_, obj_r_;
  Table sub_ro_, sub_o_, sub_r_;
};

/// Sum over the tuples of `entity` in `tier` of exp(-sigma |t - t'|).
double ted_score(EntityId entity, std::span<const Tuple> tier, double sigma, TimeStep t);

/// Every entity, best first. Lexicographic: by best tier, then score in that
/// tier (descending), then index. Sum: by the weighted sum of tier scores,
/// then index. Entities in no tier follow in index order.
std::vector<EntityId> ted_rank(const ReferenceSets& sets, std::size_t entity_count, const TedConfig& config,
                               TimeStep t);

/// Scores each entity by minus its position in `ted_rank`.
class TedScorer : public eval::Scorer {
 public:
  TedScorer(const TedIndex& index, TedConfig config) : index_(index), config_(config) {}
  void score(std::span<const model::Query> queries, std::vector<double>& out) override;
  bool concurrent() const override { return true; }

 private:
  const TedIndex& index_;
  TedConfig config_;
};

struct SweepRow {
  double sigma = 0.0;
  eval::Metrics metrics;
};

std::vector<SweepRow> sigma_sweep(const TkgDataset& dataset, Split split, std::span<const double> sigmas, Blend blend,
                                  const TrueTripleIndex& filter, std::size_t threads = 1);

/// CSV `sigma,MRR,Hits1,Hits3,Hits10`.
void write_sweep_csv(std::ostream& out, std::span<const SweepRow> rows);

}  // namespace tkg::ted
