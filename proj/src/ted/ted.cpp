#include "tkg/ted/ted.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <iterator>

#include "tkg/error.hpp"

namespace tkg::ted {

using model::Query;
using model::QueryDirection;

Blend parse_blend(const std::string& name) {
  if (name == "lexicographic") return Blend::Lexicographic;
  if (name == "sum") return Blend::Sum;
  throw ConfigError("unknown ted blend '" + name + "' (expected lexicographic or sum)");
}

TedIndex TedIndex::build(const TkgDataset& dataset) {
  TedIndex index;
  index.entities_ = dataset.entity_count;
  index.relations_ = dataset.relation_count;
  const std::uint64_t E = dataset.entity_count, R = dataset.relation_count;
  for (const Snapshot& snap : dataset.split(Split::Train)) {
    for (const Triple& tr : snap.triples) {
      index.obj_sr_[tr.subject * R + tr.relation].emplace_back(tr.object, snap.time);
      index.obj_s_[tr.subject].emplace_back(tr.object, snap.time);
      index.obj_r_[tr.relation].emplace_back(tr.object, snap.time);
      index.sub_ro_[tr.relation * E + tr.object].emplace_back(tr.subject, snap.time);
      index.sub_o_[tr.object].emplace_back(tr.subject, snap.time);
      index.sub_r_[tr.relation].emplace_back(tr.subject, snap.time);
    }
  }
  for (Table* table : {&index.obj_sr_, &index.obj_s_, &index.obj_r_, &index.sub_ro_, &index.sub_o_, &index.sub_r_}) {
    for (auto& [key, tuples] : *table) {
      std::sort(tuples.begin(), tuples.end());
      tuples.erase(std::unique(tuples.begin(), tuples.end()), tuples.end());
    }
  }
  return index;
}

namespace {

std::vector<Tuple> lookup(const std::unordered_map<std::uint64_t, std::vector<Tuple>>& table, std::uint64_t key,
                          TimeStep t) {
  std::vector<Tuple> out;
  const auto it = table.find(key);
  if (it == table.end()) return out;
  out.reserve(it->second.size());
  for (const Tuple& tp : it->second) {
    if (tp.second != t) out.push_back(tp);
  }
  return out;
}

std::vector<Tuple> minus(const std::vector<Tuple>& a, const std::vector<Tuple>& b) {
  std::vector<Tuple> out;
  std::set_difference(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return out;
}

}  // namespace

ReferenceSets TedIndex::reference_sets(const Query& q) const {
  const std::uint64_t E = entities_, R = relations_;
  ReferenceSets sets;
  if (q.direction == QueryDirection::Object) {
    sets.tiers[0] = lookup(obj_sr_, q.anchor * R + q.relation, q.time);
    sets.tiers[1] = lookup(obj_s_, q.anchor, q.time);
    sets.tiers[2] = lookup(obj_r_, q.relation, q.time);
  } else {
    sets.tiers[0] = lookup(sub_ro_, q.relation * E + q.anchor, q.time);
    sets.tiers[1] = lookup(sub_o_, q.anchor, q.time);
    sets.tiers[2] = lookup(sub_r_, q.relation, q.time);
  }
  sets.tiers[1] = minus(sets.tiers[1], sets.tiers[0]);
  sets.tiers[2] = minus(minus(sets.tiers[2], sets.tiers[0]), sets.tiers[1]);
  return sets;
}

double ted_score(EntityId entity, std::span<const Tuple> tier, double sigma, TimeStep t) {
  if (!(sigma > 0.0)) throw ConfigError("ted sigma must be positive");
  double total = 0.0;
  for (const auto& [e, when] : tier) {
    if (e != entity) continue;
    const double gap = std::abs(static_cast<double>(t) - static_cast<double>(when));
    total += std::exp(-sigma * gap);
  }
  return total;
}

std::vector<EntityId> ted_rank(const ReferenceSets& sets, std::size_t entity_count, const TedConfig& config,
                               TimeStep t) {
  if (!(config.sigma > 0.0)) throw ConfigError("ted sigma must be positive");
  constexpr int kNone = 3;
  std::vector<int> best_tier(entity_count, kNone);
  std::vector<std::array<double, 3>> tier_score(entity_count, {0.0, 0.0, 0.0});
  std::vector<EntityId> referenced;
  for (int k = 0; k < 3; ++k) {
    // Tuples are sorted by entity, so per-entity sums accumulate in a fixed order.
    for (const auto& [e, when] : sets.tiers[k]) {
      if (e >= entity_count) throw DataError("reference entity out of range");
      const double gap = std::abs(static_cast<double>(t) - static_cast<double>(when));
      tier_score[e][k] += std::exp(-config.sigma * gap);
      if (best_tier[e] == kNone) referenced.push_back(e);
      best_tier[e] = std::min(best_tier[e], k);
    }
  }
  auto key = [&](EntityId e) {
    if (config.blend == Blend::Lexicographic) return tier_score[e][best_tier[e]];
    double s = 0.0;
    for (int k = 0; k < 3; ++k) s += kBlendWeights[k] * tier_score[e][k];
    return s;
  };
  std::sort(referenced.begin(), referenced.end(), [&](EntityId a, EntityId b) {
    if (config.blend == Blend::Lexicographic && best_tier[a] != best_tier[b]) return best_tier[a] < best_tier[b];
    const double ka = key(a), kb = key(b);
    if (ka != kb) return ka > kb;
    return a < b;
  });
  std::vector<EntityId> order = std::move(referenced);
  order.reserve(entity_count);
  for (std::size_t e = 0; e < entity_count; ++e) {
    if (best_tier[e] == kNone) order.push_back(static_cast<EntityId>(e));
  }
  return order;
}

void TedScorer::score(std::span<const Query> queries, std::vector<double>& out) {
  const std::size_t E = index_.entity_count();
  out.assign(queries.size() * E, 0.0);
  for (std::size_t i = 0; i < queries.size(); ++i) {
    const auto order = ted_rank(index_.reference_sets(queries[i]), E, config_, queries[i].time);
    for (std::size_t pos = 0; pos < order.size(); ++pos) out[i * E + order[pos]] = -static_cast<double>(pos);
  }
}

std::vector<SweepRow> sigma_sweep(const TkgDataset& dataset, Split split, std::span<const double> sigmas, Blend blend,
                                  const TrueTripleIndex& filter, std::size_t threads) {
  const TedIndex index = TedIndex::build(dataset);
  std::vector<SweepRow> rows;
  for (double sigma : sigmas) {
    TedScorer scorer(index, {sigma, blend});
    eval::EvalOptions options;
    options.threads = threads;
    rows.push_back({sigma, eval::evaluate(dataset, split, scorer, filter, options).metrics});
  }
  return rows;
}

void write_sweep_csv(std::ostream& out, std::span<const SweepRow> rows) {
  out << std::setprecision(12);
  out << "sigma,MRR,Hits1,Hits3,Hits10\n";
  for (const SweepRow& r : rows) {
    out << r.sigma << ',' << r.metrics.mrr << ',' << r.metrics.hits1 << ',' << r.metrics.hits3 << ','
        << r.metrics.hits10 << '\n';
  }
}

}  // namespace tkg::ted
