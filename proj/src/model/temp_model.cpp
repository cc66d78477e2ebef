#include "tkg/model/temp_model.hpp"

#include <algorithm>

#include "tkg/error.hpp"
#include "tkg/model/init.hpp"

namespace tkg::model {

using tensor::Tensor;

Variant parse_variant(const std::string& name) {
  if (name == "srgcn") return Variant::Srgcn;
  if (name == "temp-gru") return Variant::TempGru;
  if (name == "temp-sa") return Variant::TempSa;
  throw ConfigError("unknown model variant '" + name + "' (expected srgcn, temp-gru or temp-sa)");
}

const char* variant_name(Variant v) {
  switch (v) {
    case Variant::Srgcn: return "srgcn";
    case Variant::TempGru: return "temp-gru";
    case Variant::TempSa: return "temp-sa";
  }
  return "?";
}

const char* direction_name(QueryDirection d) { return d == QueryDirection::Object ? "object" : "subject"; }

void ModelConfig::validate() const {
  if (dim == 0) throw ConfigError("model.dim must be positive");
  if (layers == 0) throw ConfigError("model.layers must be positive");
  if (decoder == DecoderKind::ComplEx && dim % 2 != 0) throw ConfigError("complex decoder needs an even model.dim");
  if (variant == Variant::TempSa && (heads == 0 || dim % heads != 0)) {
    throw ConfigError("model.dim must be divisible by model.heads");
  }
  if (variant == Variant::Srgcn && (gating || imputation || bidirectional || positional)) {
    throw ConfigError("gating, imputation, bidirectional and positional need a temporal variant");
  }
  if (gate_hidden == 0) throw ConfigError("gate hidden width must be positive");
}

TempModel::TempModel(const ModelConfig& config, std::size_t entities, std::size_t relations, std::size_t steps,
                     std::uint64_t seed)
    : config_(config), entities_(entities), relations_(relations), steps_(steps) {
  config_.validate();
  if (entities == 0 || relations == 0 || steps == 0) throw ConfigError("model needs a non-empty vocabulary");
  Rng rng(seed);
  rgcn_ = std::make_unique<RgcnEncoder>(RgcnConfig{entities, relations, config.dim, config.layers}, params_, rng);
  if (config.variant == Variant::TempGru) {
    gru_ = std::make_unique<GruEncoder>(config.dim, config.bidirectional, params_, rng);
  } else if (config.variant == Variant::TempSa) {
    sa_ = std::make_unique<SelfAttentionEncoder>(config.dim, config.heads, params_, rng);
  }
  if (config.imputation) imputer_ = std::make_unique<Imputer>(params_);
  if (config.gating) gates_ = std::make_unique<GateSet>(GateSet::create(params_, rng, "gate", config.gate_hidden));
  if (config.positional) positions_ = params_.add("positional", constant_parameter(steps, config.dim, 0.0));
  relation_emb_ = params_.add("decoder.relation", xavier_parameter(relations, config.dim, rng));
}

StepEncoding TempModel::encode_snapshot(const Snapshot& snapshot) const {
  return {rgcn_->encode(snapshot), activity_flags(snapshot, entities_)};
}

std::vector<TimeStep> TempModel::window_steps(TimeStep t) const {
  if (t >= steps_) throw Error("query step " + std::to_string(t) + " is outside the time axis");
  if (config_.variant == Variant::Srgcn) return {t};
  const auto ti = static_cast<std::int64_t>(t);
  const auto tau = static_cast<std::int64_t>(config_.window);
  const std::int64_t back = config_.bidirectional ? tau / 2 : tau;
  const std::int64_t ahead = config_.bidirectional ? tau / 2 : 0;
  std::vector<TimeStep> out;
  for (std::int64_t s = std::max<std::int64_t>(0, ti - back);
       s <= std::min<std::int64_t>(static_cast<std::int64_t>(steps_) - 1, ti + ahead); ++s) {
    out.push_back(static_cast<TimeStep>(s));
  }
  return out;
}

EntityStates TempModel::states(TimeStep t, const StructuralSource& source) const {
  if (config_.variant == Variant::Srgcn) {
    const Tensor x = source(t).x;
    return {t, x, x};
  }
  EncoderWindow window;
  for (TimeStep s : window_steps(t)) {
    const StepEncoding& enc = source(s);
    window.frames.push_back({static_cast<int>(s) - static_cast<int>(t), enc.x, enc.active});
  }
  const Tensor x = imputer_ ? imputer_->apply(window, config_.bidirectional) : window.current().x;
  Tensor z = gru_ ? gru_->encode(window, x) : sa_->encode(window, x);
  if (config_.positional) z = add_positional(z, positions_, t);
  return {t, x, z};
}

TempModel::QueryEmbeddings TempModel::embed_queries(const EntityStates& states, std::span<const Query> queries,
                                                    const TpfTable* tpf) const {
  std::vector<std::uint32_t> anchors, relations;
  const QueryDirection dir = queries.front().direction;
  for (const Query& q : queries) {
    if (q.direction != dir) throw Error("queries in one scoring call must share a direction");
    if (q.time != states.time) throw Error("query step does not match the entity states");
    if (q.anchor >= entities_ || q.relation >= relations_) throw DataError("query index out of range");
    anchors.push_back(q.anchor);
    relations.push_back(q.relation);
  }
  QueryEmbeddings out;
  out.relation = tensor::gather_rows(relation_emb_, relations);
  const Tensor z_anchor = tensor::gather_rows(states.z, anchors);
  if (!gates_) {
    out.anchor = z_anchor;
    return out;
  }
  if (tpf == nullptr) throw Error("gating needs a frequency table");
  std::vector<std::array<double, 3>> features;
  for (const Query& q : queries) {
    features.push_back(dir == QueryDirection::Object ? tpf->object_query_features(q.anchor, q.relation, q.time)
                                                     : tpf->subject_query_features(q.relation, q.anchor, q.time));
  }
  const FrequencyGate& anchor_gate = dir == QueryDirection::Object ? gates_->os : gates_->so;
  const FrequencyGate& candidate_gate = dir == QueryDirection::Object ? gates_->oo : gates_->ss;
  out.anchor = tensor::convex_mix(tensor::gather_rows(states.x, anchors), z_anchor, anchor_gate.forward(features));
  out.alpha_candidate = candidate_gate.forward(features);
  return out;
}

Tensor TempModel::all_scores(const EntityStates& states, std::span<const Query> queries, const TpfTable* tpf) const {
  if (queries.empty()) return Tensor::zeros(0, entities_);
  if (!is_linear(config_.decoder)) {
    std::vector<std::vector<EntityId>> all(queries.size(), std::vector<EntityId>(entities_));
    for (auto& list : all) {
      for (std::size_t e = 0; e < entities_; ++e) list[e] = static_cast<EntityId>(e);
    }
    return candidate_scores(states, queries, all, tpf, ScoringPath::Paired);
  }
  const QueryEmbeddings q = embed_queries(states, queries, tpf);
  const Tensor w = queries.front().direction == QueryDirection::Object
                       ? object_query_vectors(q.anchor, q.relation, config_.decoder)
                       : subject_query_vectors(q.anchor, q.relation, config_.decoder);
  const Tensor temporal = tensor::matmul(w, tensor::transpose(states.z));
  if (!q.alpha_candidate.defined()) return temporal;
  const Tensor structural = tensor::matmul(w, tensor::transpose(states.x));
  return tensor::convex_mix(structural, temporal, q.alpha_candidate);
}

Tensor TempModel::candidate_scores(const EntityStates& states, std::span<const Query> queries,
                                   std::span<const std::vector<EntityId>> candidates, const TpfTable* tpf,
                                   ScoringPath path) const {
  if (candidates.size() != queries.size()) throw Error("one candidate list per query is required");
  if (queries.empty()) return Tensor::zeros(0, 0);
  const std::size_t n = queries.size();
  const std::size_t K = candidates.front().size();
  std::vector<std::uint32_t> flat, repeat;
  flat.reserve(n * K);
  repeat.reserve(n * K);
  for (std::size_t i = 0; i < n; ++i) {
    if (candidates[i].size() != K) throw Error("candidate lists must share one length");
    for (EntityId c : candidates[i]) {
      if (c >= entities_) throw DataError("candidate entity out of range");
      flat.push_back(c);
      repeat.push_back(static_cast<std::uint32_t>(i));
    }
  }

  if (path == ScoringPath::Auto) {
    path = is_linear(config_.decoder) && entities_ <= 2 * K ? ScoringPath::AllEntities : ScoringPath::Paired;
  }
  if (path == ScoringPath::AllEntities) {
    if (!is_linear(config_.decoder)) throw Error("all-entity scoring needs a linear decoder");
    std::vector<std::uint32_t> cells(n * K);
    for (std::size_t i = 0; i < n * K; ++i) cells[i] = static_cast<std::uint32_t>(repeat[i] * entities_ + flat[i]);
    const Tensor all = tensor::reshape(all_scores(states, queries, tpf), n * entities_, 1);
    return tensor::reshape(tensor::gather_rows(all, cells), n, K);
  }

  const QueryEmbeddings q = embed_queries(states, queries, tpf);
  Tensor cand = tensor::gather_rows(states.z, flat);
  if (q.alpha_candidate.defined()) {
    cand = tensor::convex_mix(tensor::gather_rows(states.x, flat), cand, tensor::gather_rows(q.alpha_candidate, repeat));
  }
  const Tensor anchor = tensor::gather_rows(q.anchor, repeat);
  const Tensor relation = tensor::gather_rows(q.relation, repeat);
  const Tensor scores = queries.front().direction == QueryDirection::Object
                            ? score_rows(anchor, relation, cand, config_.decoder)
                            : score_rows(cand, relation, anchor, config_.decoder);
  return tensor::reshape(scores, n, K);
}

}  // namespace tkg::model
