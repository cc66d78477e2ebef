#include "tkg/core/true_index.hpp"

#include <algorithm>

namespace tkg {

std::uint64_t TrueTripleIndex::key(std::uint64_t a, std::uint64_t b, TimeStep t) const {
  const std::uint64_t time = mode_ == IndexTimeMode::Static ? 0 : t;
  return (a * relation_count_ + b) * std::max<std::uint64_t>(step_count_, 1) + time;
}

TrueTripleIndex TrueTripleIndex::build(const TkgDataset& dataset, std::span<const Split> splits,
                                       IndexTimeMode mode) {
  TrueTripleIndex index;
  index.mode_ = mode;
  index.entity_count_ = dataset.entity_count;
  index.relation_count_ = std::max<std::size_t>(dataset.relation_count, 1);
  index.step_count_ = dataset.step_count;
  for (Split split : splits) {
    for (const Snapshot& snapshot : dataset.split(split)) {
      for (const Triple& tr : snapshot.triples) {
        // (s, r) keys use subject-major packing, (r, o) keys use object-major.
        index.by_subject_relation_[index.key(tr.subject, tr.relation, snapshot.time)].push_back(tr.object);
        index.by_relation_object_[index.key(tr.object, tr.relation, snapshot.time)].push_back(tr.subject);
      }
    }
  }
  for (auto* map : {&index.by_subject_relation_, &index.by_relation_object_}) {
    for (auto& [k, values] : *map) {
      std::sort(values.begin(), values.end());
      values.erase(std::unique(values.begin(), values.end()), values.end());
    }
  }
  return index;
}

std::span<const EntityId> TrueTripleIndex::objects(EntityId s, RelationId r, TimeStep t) const {
  const auto it = by_subject_relation_.find(key(s, r, t));
  if (it == by_subject_relation_.end()) return {};
  return it->second;
}

std::span<const EntityId> TrueTripleIndex::subjects(RelationId r, EntityId o, TimeStep t) const {
  const auto it = by_relation_object_.find(key(o, r, t));
  if (it == by_relation_object_.end()) return {};
  return it->second;
}

bool TrueTripleIndex::contains(const Quadruple& q) const {
  const auto objs = objects(q.subject, q.relation, q.time);
  return std::binary_search(objs.begin(), objs.end(), q.object);
}

}  // namespace tkg
