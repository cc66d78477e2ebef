#pragma once

#include <array>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace tkg {

using EntityId = std::uint32_t;
using RelationId = std::uint32_t;
using TimeStep = std::uint32_t;

struct Triple {
  EntityId subject = 0;
  RelationId relation = 0;
  EntityId object = 0;

  auto operator<=>(const Triple&) const = default;
};

struct Quadruple {
  EntityId subject = 0;
  RelationId relation = 0;
  EntityId object = 0;
  TimeStep time = 0;

  Triple triple() const { return {subject, relation, object}; }
  auto operator<=>(const Quadruple&) const = default;
};

/// The observed facts at one time step. Triples are kept sorted and unique.
struct Snapshot {
  TimeStep time = 0;
  std::vector<Triple> triples;

  bool empty() const { return triples.empty(); }
  std::size_t size() const { return triples.size(); }
};

enum class Split : std::uint8_t { Train = 0, Valid = 1, Test = 2 };

inline constexpr std::array<Split, 3> kAllSplits = {Split::Train, Split::Valid, Split::Test};

const char* split_name(Split split);
Split parse_split(const std::string& name);

/// A discrete-time multigraph with three splits over a shared time axis.
/// Every split holds exactly `step_count` snapshots, indexed by time; steps
/// without facts are empty snapshots.
struct TkgDataset {
  std::size_t entity_count = 0;
  std::size_t relation_count = 0;
  std::size_t step_count = 0;
  std::array<std::vector<Snapshot>, 3> splits;
  std::vector<std::string> entity_names;
  std::vector<std::string> relation_names;

  const std::vector<Snapshot>& split(Split s) const { return splits[static_cast<std::size_t>(s)]; }
  std::vector<Snapshot>& split(Split s) { return splits[static_cast<std::size_t>(s)]; }

  std::size_t size(Split s) const;
  std::vector<Quadruple> quadruples(Split s) const;

  /// Throws DataError if any index is out of range, a snapshot is unsorted or
  /// duplicated, or a triple occurs in both train and test at the same step.
  void validate() const;
};

/// Builds a dataset from quadruple lists. Duplicates within a split are
/// dropped (a warning is logged with the count).
TkgDataset make_dataset(std::size_t entity_count, std::size_t relation_count, std::size_t step_count,
                        std::span<const Quadruple> train, std::span<const Quadruple> valid,
                        std::span<const Quadruple> test);

/// Entities appearing as subject or object of some triple, sorted ascending.
std::vector<EntityId> active_entities(const Snapshot& snapshot);

/// Dense activity flags (1 = active) of length `entity_count`.
std::vector<std::uint8_t> activity_flags(const Snapshot& snapshot, std::size_t entity_count);

// ---------------------------------------------------------------------------
// Loading / writing

enum class DatasetFormat { Auto, Ids, Names };

/// How raw time fields map onto step indices.
///   Auto  - integer times are divided by the gcd of all distinct values;
///           dates become days since the earliest date.
///   Raw   - integer times are used as-is.
///   Day/Month/Year - dates bucketed at that granularity.
enum class TimeGranularity { Auto, Raw, Day, Month, Year };

DatasetFormat parse_dataset_format(const std::string& text);
TimeGranularity parse_time_granularity(const std::string& text);

struct LoadOptions {
  DatasetFormat format = DatasetFormat::Auto;
  TimeGranularity granularity = TimeGranularity::Auto;
};

/// Reads train.txt, plus valid.txt / test.txt when present (missing ones are
/// empty splits) and optional entity2id.txt,
/// relation2id.txt, stat.txt) from `directory`.
TkgDataset load_dataset(const std::filesystem::path& directory, const LoadOptions& options = {});

/// Writes integer-id quadruple files and stat.txt into `directory`.
void write_dataset(const TkgDataset& dataset, const std::filesystem::path& directory);

// ---------------------------------------------------------------------------
// Synthetic corpora

struct SyntheticParams {
  std::size_t entities = 20;
  std::size_t relations = 4;
  std::size_t steps = 10;
  std::size_t facts_per_step = 12;
  /// Probability that each fact of step t-period is repeated at step t.
  double periodicity = 0.0;
  std::size_t period = 1;
  /// Probability that each fact of step t-1 persists into step t.
  double persistence = 0.0;
  double valid_fraction = 0.1;
  double test_fraction = 0.1;
};

/// Deterministic in (params, seed). Copied facts may only land in valid/test
/// when their source fact is a training fact, and the first `period` steps
/// are training-only whenever periodicity > 0, so with periodicity = 1 every
/// evaluation fact (s, r, o, t) has (s, r, o, t - period) in train.
TkgDataset generate_synthetic(const SyntheticParams& spec, std::uint64_t seed);

}  // namespace tkg
