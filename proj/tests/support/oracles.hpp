#pragma once

// Brute-force reference implementations and a finite-difference gradient
// checker shared by the unit and acceptance tests. Everything here follows
// the definitions literally and ignores efficiency.

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "tkg/core/dataset.hpp"
#include "tkg/model/heterogeneity.hpp"
#include "tkg/model/temp_model.hpp"
#include "tkg/tensor/tensor.hpp"
#include "tkg/ted/ted.hpp"

namespace tkg::testing {

// ---------------------------------------------------------------------------
// Gradients

struct GradReport {
  double max_rel_error = 0.0;
  std::string worst;
  std::size_t coordinates = 0;
};

/// Compares tape gradients of `loss` with central differences over every
/// coordinate of every tensor in `leaves`. Relative error is
/// |a - n| / max(|a|, |n|, floor).
inline GradReport check_gradients(const std::vector<std::pair<std::string, tensor::Tensor>>& leaves,
                                  const std::function<tensor::Tensor()>& loss, double h = 1e-5,
                                  double floor = 1e-3) {
  tensor::Gradients grads;
  {
    tensor::Tape tape;
    tensor::TapeScope scope(tape);
    const tensor::Tensor l = loss();
    grads = tape.backward(l);
  }
  GradReport report;
  for (const auto& [name, t] : leaves) {
    tensor::Tensor leaf = t;
    const std::vector<double>* analytic = grads.find(leaf);
    auto values = leaf.mutable_values();
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double saved = values[i];
      values[i] = saved + h;
      const double up = loss().item();
      values[i] = saved - h;
      const double down = loss().item();
      values[i] = saved;
      const double numeric = (up - down) / (2.0 * h);
      const double a = analytic ? (*analytic)[i] : 0.0;
      const double rel = std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), floor});
      ++report.coordinates;
      if (rel > report.max_rel_error) {
        report.max_rel_error = rel;
        report.worst = name + "[" + std::to_string(i) + "] analytic=" + std::to_string(a) +
                       " numeric=" + std::to_string(numeric);
      }
    }
  }
  return report;
}

inline std::vector<std::pair<std::string, tensor::Tensor>> leaves_of(const tensor::ParameterSet& params) {
  return params.entries();
}

// ---------------------------------------------------------------------------
// Ground truth lookups

inline std::vector<EntityId> scan_objects(const TkgDataset& ds, std::initializer_list<Split> splits, EntityId s,
                                          RelationId r, TimeStep t, bool any_time = false) {
  std::set<EntityId> out;
  for (Split sp : splits) {
    for (const Quadruple& q : ds.quadruples(sp)) {
      if (q.subject == s && q.relation == r && (any_time || q.time == t)) out.insert(q.object);
    }
  }
  return {out.begin(), out.end()};
}

inline std::vector<EntityId> scan_subjects(const TkgDataset& ds, std::initializer_list<Split> splits, RelationId r,
                                           EntityId o, TimeStep t, bool any_time = false) {
  std::set<EntityId> out;
  for (Split sp : splits) {
    for (const Quadruple& q : ds.quadruples(sp)) {
      if (q.object == o && q.relation == r && (any_time || q.time == t)) out.insert(q.subject);
    }
  }
  return {out.begin(), out.end()};
}

// ---------------------------------------------------------------------------
// Ranking

/// Sorts the answer and every unfiltered candidate by descending score,
/// placing the answer after all candidates it ties with, and returns the
/// answer's 1-based position.
inline std::size_t oracle_rank(const std::vector<double>& scores, EntityId answer,
                               const std::vector<EntityId>& filtered) {
  struct Entry {
    double score;
    int is_answer;
    EntityId id;
  };
  std::vector<Entry> list;
  for (EntityId e = 0; e < scores.size(); ++e) {
    if (e != answer && std::find(filtered.begin(), filtered.end(), e) != filtered.end()) continue;
    list.push_back({scores[e], e == answer ? 1 : 0, e});
  }
  std::sort(list.begin(), list.end(), [](const Entry& a, const Entry& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.is_answer < b.is_answer;
  });
  for (std::size_t i = 0; i < list.size(); ++i) {
    if (list[i].is_answer) return i + 1;
  }
  return 0;
}

// ---------------------------------------------------------------------------
// Temporal pattern frequencies

inline bool pattern_matches(model::PatternKind kind, const Quadruple& a, const Quadruple& b) {
  using model::PatternKind;
  switch (kind) {
    case PatternKind::S: return a.subject == b.subject;
    case PatternKind::O: return a.object == b.object;
    case PatternKind::R: return a.relation == b.relation;
    case PatternKind::SR: return a.subject == b.subject && a.relation == b.relation;
    case PatternKind::RO: return a.relation == b.relation && a.object == b.object;
    case PatternKind::SO: return a.subject == b.subject && a.object == b.object;
    case PatternKind::SRO: return a.triple() == b.triple();
  }
  return false;
}

inline std::size_t oracle_tpf(const TkgDataset& ds, model::PatternKind kind, const Quadruple& q,
                              const model::WindowPolicy& policy) {
  std::size_t n = 0;
  for (const Quadruple& f : ds.quadruples(Split::Train)) {
    if (f.time == q.time) continue;
    const auto t = static_cast<std::int64_t>(q.time), ft = static_cast<std::int64_t>(f.time);
    const auto w = static_cast<std::int64_t>(policy.width);
    bool in = false;
    switch (policy.kind) {
      case model::WindowPolicy::Kind::FullHistory: in = ft < t; break;
      case model::WindowPolicy::Kind::Trailing: in = ft < t && ft >= t - w; break;
      case model::WindowPolicy::Kind::Symmetric: in = std::abs(ft - t) <= w; break;
    }
    if (in && pattern_matches(kind, f, q)) ++n;
  }
  return n;
}

// ---------------------------------------------------------------------------
// TED

inline ted::ReferenceSets oracle_reference_sets(const TkgDataset& ds, const model::Query& q) {
  std::array<std::set<ted::Tuple>, 3> raw;
  for (const Quadruple& f : ds.quadruples(Split::Train)) {
    if (f.time == q.time) continue;
    const bool object_query = q.direction == model::QueryDirection::Object;
    const EntityId anchor = object_query ? f.subject : f.object;
    const EntityId other = object_query ? f.object : f.subject;
    const bool same_anchor = anchor == q.anchor;
    const bool same_relation = f.relation == q.relation;
    if (same_anchor && same_relation) raw[0].insert({other, f.time});
    if (same_anchor) raw[1].insert({other, f.time});
    if (same_relation) raw[2].insert({other, f.time});
  }
  ted::ReferenceSets sets;
  for (std::size_t k = 0; k < 3; ++k) {
    for (const ted::Tuple& tp : raw[k]) {
      bool earlier = false;
      for (std::size_t j = 0; j < k; ++j) earlier = earlier || raw[j].count(tp) > 0;
      if (!earlier) sets.tiers[k].push_back(tp);
    }
  }
  return sets;
}

inline double oracle_ted_score(EntityId e, const std::vector<ted::Tuple>& tier, double sigma, TimeStep t) {
  double s = 0.0;
  for (const auto& [entity, time] : tier) {
    if (entity == e) s += std::exp(-sigma * std::abs(static_cast<double>(time) - static_cast<double>(t)));
  }
  return s;
}

/// Ranking by exhaustive pairwise comparison under the lexicographic policy.
inline std::vector<EntityId> oracle_ted_rank(const ted::ReferenceSets& sets, std::size_t entities, double sigma,
                                             TimeStep t) {
  struct Key {
    int tier;
    double score;
  };
  std::vector<Key> keys(entities, Key{3, 0.0});
  for (EntityId e = 0; e < entities; ++e) {
    for (int k = 2; k >= 0; --k) {
      for (const auto& tp : sets.tiers[static_cast<std::size_t>(k)]) {
        if (tp.first == e) {
          keys[e] = {k, oracle_ted_score(e, sets.tiers[static_cast<std::size_t>(k)], sigma, t)};
          break;
        }
      }
    }
  }
  std::vector<EntityId> order;
  std::vector<bool> placed(entities, false);
  for (std::size_t pos = 0; pos < entities; ++pos) {
    EntityId best = 0;
    bool found = false;
    for (EntityId e = 0; e < entities; ++e) {
      if (placed[e]) continue;
      if (!found) {
        best = e;
        found = true;
        continue;
      }
      const Key& a = keys[e];
      const Key& b = keys[best];
      if (a.tier < b.tier || (a.tier == b.tier && a.score > b.score)) best = e;
    }
    placed[best] = true;
    order.push_back(best);
  }
  return order;
}

// ---------------------------------------------------------------------------
// Data

/// Random dataset with every split drawn from the same uniform fact pool.
inline TkgDataset random_dataset(std::size_t entities, std::size_t relations, std::size_t steps, std::size_t facts,
                                 std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<EntityId> ent(0, static_cast<EntityId>(entities - 1));
  std::uniform_int_distribution<RelationId> rel(0, static_cast<RelationId>(relations - 1));
  std::uniform_int_distribution<TimeStep> step(0, static_cast<TimeStep>(steps - 1));
  std::uniform_int_distribution<int> split(0, 9);
  std::set<Quadruple> seen;
  std::vector<Quadruple> train, valid, test;
  while (seen.size() < facts) {
    const Quadruple q{ent(rng), rel(rng), ent(rng), step(rng)};
    if (!seen.insert(q).second) continue;
    const int s = split(rng);
    (s < 7 ? train : s < 8 ? valid : test).push_back(q);
  }
  return make_dataset(entities, relations, steps, train, valid, test);
}

}  // namespace tkg::testing
