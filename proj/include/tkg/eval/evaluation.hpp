#pragma once

// Filtered ranking evaluation and TPF-binned error analysis.

#include <array>
#include <cstddef>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "tkg/core/dataset.hpp"
#include "tkg/core/true_index.hpp"
#include "tkg/model/heterogeneity.hpp"
#include "tkg/model/temp_model.hpp"

namespace tkg::eval {

using model::Query;
using model::QueryDirection;

/// 1 + number of unfiltered entities other than `answer` scoring at least as
/// high as the answer (ties count against the answer).
std::size_t rank_query(std::span<const double> scores, EntityId answer, std::span<const EntityId> filtered);

struct QueryResult {
  Query query;
  std::size_t rank = 0;
  std::optional<std::array<std::size_t, 7>> tpf;  // indexed by PatternKind
};

struct Metrics {
  double mrr = 0.0;
  double hits1 = 0.0;
  double hits3 = 0.0;
  double hits10 = 0.0;
  std::size_t count = 0;
};

Metrics summarize(std::span<const std::size_t> ranks);
Metrics summarize(std::span<const QueryResult> results);

struct RankingReport {
  Metrics metrics;
  std::vector<QueryResult> results;
};

/// Produces scores for every entity. A call receives queries that share a
/// time step and a direction; it fills `out` with queries.size() x |E|
/// scores, row-major.
class Scorer {
 public:
  virtual ~Scorer() = default;
  virtual void score(std::span<const Query> queries, std::vector<double>& out) = 0;
  /// Whether `score` may be called from several threads at once.
  virtual bool concurrent() const { return false; }
};

struct EvalOptions {
  /// Evaluate at most this many facts (0 = all), picked at an even stride.
  std::size_t max_facts = 0;
  std::size_t threads = 1;
  /// Attach TPFs to every result when set.
  const model::TpfTable* tpf = nullptr;
};

/// Both queries of every fact in `split`, ranked under `filter`.
RankingReport evaluate(const TkgDataset& dataset, Split split, Scorer& scorer, const TrueTripleIndex& filter,
                       const EvalOptions& options = {});

/// Queries of `split`, grouped by (time, direction) in ascending order.
std::vector<std::vector<Query>> query_groups(const TkgDataset& dataset, Split split, std::size_t max_facts = 0);

// ---------------------------------------------------------------------------
// Model scoring

/// Scores with a trained model. The context at step t is built from
/// training snapshots only; structural encodings are cached per step.
class ModelScorer : public Scorer {
 public:
  ModelScorer(const model::TempModel& model, const TkgDataset& dataset, const model::TpfTable* tpf);
  void score(std::span<const Query> queries, std::vector<double>& out) override;

 private:
  const model::StepEncoding& encoding(TimeStep t);

  const model::TempModel& model_;
  const TkgDataset& dataset_;
  const model::TpfTable* tpf_;
  std::vector<std::optional<model::StepEncoding>> cache_;
  std::optional<model::EntityStates> states_;
};

// ---------------------------------------------------------------------------
// Binned analysis

struct BinRow {
  model::PatternKind kind = model::PatternKind::S;
  QueryDirection direction = QueryDirection::Object;
  double lo = 0.0;
  double hi = 0.0;
  std::size_t count = 0;
  std::optional<double> hits10;  // empty for an empty bin
};

/// (pattern, query direction) pairs studied: replication pairs relate the
/// pattern to the answer, reference pairs to the query's own context.
struct Pairing {
  model::PatternKind kind;
  QueryDirection direction;
  bool replication;
};
std::span<const Pairing> analysis_pairings();

/// Hits@10 per bin of log10(1 + f), bins [k w, (k+1) w) from 0 up to the
/// largest occupied bin of each pairing. Results must carry TPFs.
std::vector<BinRow> tpf_binned_analysis(std::span<const QueryResult> results, double bin_width = 1.0);

// ---------------------------------------------------------------------------
// Report files

void write_results_jsonl(std::ostream& out, std::span<const QueryResult> results);
std::vector<QueryResult> read_results_jsonl(std::istream& in);
void write_summary_csv(std::ostream& out, const Metrics& metrics);
void write_bins_csv(std::ostream& out, std::span<const BinRow> rows);

}  // namespace tkg::eval
