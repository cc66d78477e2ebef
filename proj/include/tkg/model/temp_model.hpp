#pragma once

// The assembled model: structural encoder per snapshot, optional temporal
// encoder over a window, optional imputation and gating, and a decoder.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tkg/core/dataset.hpp"
#include "tkg/model/decoder.hpp"
#include "tkg/model/heterogeneity.hpp"
#include "tkg/model/structural_encoder.hpp"
#include "tkg/model/temporal_encoder.hpp"
#include "tkg/tensor/tensor.hpp"

namespace tkg::model {

enum class Variant { Srgcn, TempGru, TempSa };

Variant parse_variant(const std::string& name);
const char* variant_name(Variant v);

struct ModelConfig {
  Variant variant = Variant::TempGru;
  bool gating = false;
  bool imputation = false;
  bool bidirectional = false;
  bool positional = false;
  std::size_t dim = 128;
  std::size_t layers = 2;
  std::size_t heads = 8;
  std::size_t window = 15;
  std::size_t gate_hidden = 64;
  DecoderKind decoder = DecoderKind::ComplEx;

  /// Throws ConfigError on inconsistent settings.
  void validate() const;
};

/// Object query (s, r, ?, t): anchor = s. Subject query (?, r, o, t): anchor = o.
enum class QueryDirection { Object, Subject };

const char* direction_name(QueryDirection d);

struct Query {
  QueryDirection direction = QueryDirection::Object;
  EntityId anchor = 0;
  RelationId relation = 0;
  TimeStep time = 0;
  EntityId answer = 0;

  static Query object(const Quadruple& q) { return {QueryDirection::Object, q.subject, q.relation, q.time, q.object}; }
  static Query subject(const Quadruple& q) { return {QueryDirection::Subject, q.object, q.relation, q.time, q.subject}; }
  Quadruple quadruple() const {
    return direction == QueryDirection::Object ? Quadruple{anchor, relation, answer, time}
                                               : Quadruple{answer, relation, anchor, time};
  }
};

/// Structural embeddings of one (possibly edge-dropped) snapshot.
struct StepEncoding {
  tensor::Tensor x;  // |E| x d
  std::vector<std::uint8_t> active;
};

using StructuralSource = std::function<const StepEncoding&(TimeStep)>;

/// Entity representations at one query step. For the static variant z = x.
struct EntityStates {
  TimeStep time = 0;
  tensor::Tensor x;  // structural, imputed where enabled
  tensor::Tensor z;  // temporal (+ positional)
};

enum class ScoringPath { Auto, AllEntities, Paired };

class TempModel {
 public:
  TempModel(const ModelConfig& config, std::size_t entities, std::size_t relations, std::size_t steps,
            std::uint64_t seed);
  TempModel(const TempModel&) = delete;
  TempModel& operator=(const TempModel&) = delete;

  const ModelConfig& config() const { return config_; }
  std::size_t entity_count() const { return entities_; }
  std::size_t relation_count() const { return relations_; }
  std::size_t step_count() const { return steps_; }

  tensor::ParameterSet& parameters() { return params_; }
  const tensor::ParameterSet& parameters() const { return params_; }

  StepEncoding encode_snapshot(const Snapshot& snapshot) const;

  /// Steps whose structural encodings feed the representation at t.
  std::vector<TimeStep> window_steps(TimeStep t) const;

  EntityStates states(TimeStep t, const StructuralSource& source) const;

  /// Scores of every entity for each query: n x |E|. All queries must share
  /// a direction and their time must match `states`.
  tensor::Tensor all_scores(const EntityStates& states, std::span<const Query> queries,
                            const TpfTable* tpf) const;

  /// Scores of each query's own candidate list: n x K. Lists share length K.
  tensor::Tensor candidate_scores(const EntityStates& states, std::span<const Query> queries,
                                  std::span<const std::vector<EntityId>> candidates, const TpfTable* tpf,
                                  ScoringPath path = ScoringPath::Auto) const;

  const RgcnEncoder& structural() const { return *rgcn_; }
  const GruEncoder* gru() const { return gru_.get(); }
  const SelfAttentionEncoder* attention() const { return sa_.get(); }
  const Imputer* imputer() const { return imputer_.get(); }
  const GateSet* gates() const { return gates_.get(); }
  const tensor::Tensor& relation_embeddings() const { return relation_emb_; }

 private:
  struct QueryEmbeddings {
    tensor::Tensor anchor;           // n x d
    tensor::Tensor relation;         // n x d
    tensor::Tensor alpha_candidate;  // n x 1, only with gating
  };
  QueryEmbeddings embed_queries(const EntityStates& states, std::span<const Query> queries,
                                const TpfTable* tpf) const;

  ModelConfig config_;
  std::size_t entities_;
  std::size_t relations_;
  std::size_t steps_;
  tensor::ParameterSet params_;
  std::unique_ptr<RgcnEncoder> rgcn_;
  std::unique_ptr<GruEncoder> gru_;
  std::unique_ptr<SelfAttentionEncoder> sa_;
  std::unique_ptr<Imputer> imputer_;
  std::unique_ptr<GateSet> gates_;
  tensor::Tensor positions_;
  tensor::Tensor relation_emb_;
};

}  // namespace tkg::model
