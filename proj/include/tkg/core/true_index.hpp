#pragma once

#include <cstdint>
#include <initializer_list>
#include <span>
#include <unordered_map>
#include <vector>

#include "tkg/core/dataset.hpp"

namespace tkg {

/// Whether completions are looked up per time step or across the whole axis.
enum class IndexTimeMode { PerStep, Static };

/// Membership lookup from (s, r, ?, t) and (?, r, o, t) to the completing
/// entities over a union of splits. Immutable once built.
class TrueTripleIndex {
 public:
  TrueTripleIndex() = default;

  static TrueTripleIndex build(const TkgDataset& dataset, std::span<const Split> splits,
                               IndexTimeMode mode = IndexTimeMode::PerStep);
  static TrueTripleIndex build(const TkgDataset& dataset, std::initializer_list<Split> splits,
                               IndexTimeMode mode = IndexTimeMode::PerStep) {
    return build(dataset, std::span<const Split>(splits.begin(), splits.size()), mode);
  }

  /// Sorted objects o with (s, r, o, t) known.
  std::span<const EntityId> objects(EntityId s, RelationId r, TimeStep t) const;
  /// Sorted subjects s with (s, r, o, t) known.
  std::span<const EntityId> subjects(RelationId r, EntityId o, TimeStep t) const;

  bool contains(const Quadruple& q) const;
  IndexTimeMode mode() const { return mode_; }

 private:
  std::uint64_t key(std::uint64_t a, std::uint64_t b, TimeStep t) const;

  IndexTimeMode mode_ = IndexTimeMode::PerStep;
  std::uint64_t entity_count_ = 0;
  std::uint64_t relation_count_ = 0;
  std::uint64_t step_count_ = 0;
  std::unordered_map<std::uint64_t, std::vector<EntityId>> by_subject_relation_;
  std::unordered_map<std::uint64_t, std::vector<EntityId>> by_relation_object_;
};

}  // namespace tkg
