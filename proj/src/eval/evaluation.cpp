#include "tkg/eval/evaluation.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <iomanip>
#include <thread>

#include <json.hpp>

#include "tkg/error.hpp"
#include "tkg/tensor/tensor.hpp"

namespace tkg::eval {

using model::PatternKind;

std::size_t rank_query(std::span<const double> scores, EntityId answer, std::span<const EntityId> filtered) {
  if (answer >= scores.size()) throw DataError("answer entity out of range");
  const double target = scores[answer];
  if (std::isnan(target)) throw NumericError("answer score is NaN");
  std::size_t ahead = 0;
  for (std::size_t e = 0; e < scores.size(); ++e) {
    if (e != answer && scores[e] >= target) ++ahead;
  }
  std::vector<EntityId> unique;
  std::span<const EntityId> removed = filtered;
  if (!std::is_sorted(filtered.begin(), filtered.end()) ||
      std::adjacent_find(filtered.begin(), filtered.end()) != filtered.end()) {
    unique.assign(filtered.begin(), filtered.end());
    std::sort(unique.begin(), unique.end());
    unique.erase(std::unique(unique.begin(), unique.end()), unique.end());
    removed = unique;
  }
  for (EntityId e : removed) {
    if (e != answer && e < scores.size() && scores[e] >= target) --ahead;
  }
  return ahead + 1;
}

Metrics summarize(std::span<const std::size_t> ranks) {
  Metrics m;
  m.count = ranks.size();
  if (ranks.empty()) return m;
  for (std::size_t r : ranks) {
    m.mrr += 1.0 / static_cast<double>(r);
    m.hits1 += r <= 1;
    m.hits3 += r <= 3;
    m.hits10 += r <= 10;
  }
  const double n = static_cast<double>(ranks.size());
  m.mrr /= n;
  m.hits1 /= n;
  m.hits3 /= n;
  m.hits10 /= n;
  return m;
}

Metrics summarize(std::span<const QueryResult> results) {
  std::vector<std::size_t> ranks;
  ranks.reserve(results.size());
  for (const auto& r : results) ranks.push_back(r.rank);
  return summarize(ranks);
}

std::vector<std::vector<Query>> query_groups(const TkgDataset& dataset, Split split, std::size_t max_facts) {
  const auto& snapshots = dataset.split(split);
  const std::size_t total = dataset.size(split);
  std::vector<std::uint8_t> chosen(total, 1);
  if (max_facts != 0 && total > max_facts) {
    std::fill(chosen.begin(), chosen.end(), 0);
    for (std::size_t i = 0; i < max_facts; ++i) chosen[i * total / max_facts] = 1;
  }
  std::vector<std::vector<Query>> groups;
  std::size_t index = 0;
  for (const Snapshot& snap : snapshots) {
    std::vector<Query> objects, subjects;
    for (const Triple& tr : snap.triples) {
      if (chosen[index++]) {
        const Quadruple q{tr.subject, tr.relation, tr.object, snap.time};
        objects.push_back(Query::object(q));
        subjects.push_back(Query::subject(q));
      }
    }
    if (!objects.empty()) {
      groups.push_back(std::move(objects));
      groups.push_back(std::move(subjects));
    }
  }
  return groups;
}

namespace {

std::vector<QueryResult> rank_group(const std::vector<Query>& group, Scorer& scorer, const TrueTripleIndex& filter,
                                    std::size_t entities, const model::TpfTable* tpf) {
  std::vector<double> scores;
  scorer.score(group, scores);
  if (scores.size() != group.size() * entities) throw Error("scorer returned the wrong number of scores");
  std::vector<QueryResult> out;
  out.reserve(group.size());
  for (std::size_t i = 0; i < group.size(); ++i) {
    const Query& q = group[i];
    const auto filtered = q.direction == QueryDirection::Object ? filter.objects(q.anchor, q.relation, q.time)
                                                                : filter.subjects(q.relation, q.anchor, q.time);
    QueryResult r{q, rank_query(std::span<const double>(scores).subspan(i * entities, entities), q.answer, filtered),
                  std::nullopt};
    if (tpf != nullptr) r.tpf = tpf->frequencies(q.quadruple());
    out.push_back(r);
  }
  return out;
}

}  // namespace

RankingReport evaluate(const TkgDataset& dataset, Split split, Scorer& scorer, const TrueTripleIndex& filter,
                       const EvalOptions& options) {
  const auto groups = query_groups(dataset, split, options.max_facts);
  std::vector<std::vector<QueryResult>> per_group(groups.size());
  const std::size_t threads = scorer.concurrent() ? std::max<std::size_t>(1, options.threads) : 1;
  if (threads <= 1 || groups.size() <= 1) {
    for (std::size_t g = 0; g < groups.size(); ++g) {
      per_group[g] = rank_group(groups[g], scorer, filter, dataset.entity_count, options.tpf);
    }
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::exception_ptr> errors(threads);
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < threads; ++w) {
      pool.emplace_back([&, w] {
        try {
          for (std::size_t g = next++; g < groups.size(); g = next++) {
            per_group[g] = rank_group(groups[g], scorer, filter, dataset.entity_count, options.tpf);
          }
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
    }
    for (auto& t : pool) t.join();
    for (auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
  }
  RankingReport report;
  for (auto& g : per_group) report.results.insert(report.results.end(), g.begin(), g.end());
  report.metrics = summarize(report.results);
  return report;
}

// ---------------------------------------------------------------------------
// ModelScorer

ModelScorer::ModelScorer(const model::TempModel& model, const TkgDataset& dataset, const model::TpfTable* tpf)
    : model_(model), dataset_(dataset), tpf_(tpf), cache_(dataset.step_count) {}

const model::StepEncoding& ModelScorer::encoding(TimeStep t) {
  if (!cache_[t]) cache_[t] = model_.encode_snapshot(dataset_.split(Split::Train)[t]);
  return *cache_[t];
}

void ModelScorer::score(std::span<const Query> queries, std::vector<double>& out) {
  out.clear();
  if (queries.empty()) return;
  tensor::NoGradScope no_grad;
  const TimeStep t = queries.front().time;
  if (!states_ || states_->time != t) {
    const auto steps = model_.window_steps(t);
    for (TimeStep s = 0; s < steps.front(); ++s) cache_[s].reset();
    states_ = model_.states(t, [this](TimeStep s) -> const model::StepEncoding& { return encoding(s); });
  }
  const auto values = model_.all_scores(*states_, queries, tpf_).values();
  out.assign(values.begin(), values.end());
}

// ---------------------------------------------------------------------------
// Binned analysis

std::span<const Pairing> analysis_pairings() {
  static const Pairing pairings[] = {
      {PatternKind::S, QueryDirection::Subject, true},   {PatternKind::SR, QueryDirection::Subject, true},
      {PatternKind::O, QueryDirection::Object, true},    {PatternKind::RO, QueryDirection::Object, true},
      {PatternKind::SO, QueryDirection::Object, true},   {PatternKind::SO, QueryDirection::Subject, true},
      {PatternKind::SRO, QueryDirection::Object, true},  {PatternKind::SRO, QueryDirection::Subject, true},
      {PatternKind::S, QueryDirection::Object, false},   {PatternKind::SR, QueryDirection::Object, false},
      {PatternKind::O, QueryDirection::Subject, false},  {PatternKind::RO, QueryDirection::Subject, false},
  };
  return pairings;
}

std::vector<BinRow> tpf_binned_analysis(std::span<const QueryResult> results, double bin_width) {
  if (!(bin_width > 0.0)) throw ConfigError("bin width must be positive");
  std::vector<BinRow> rows;
  for (const Pairing& p : analysis_pairings()) {
    std::vector<std::size_t> count, hits;
    for (const QueryResult& r : results) {
      if (r.query.direction != p.direction) continue;
      if (!r.tpf) throw Error("binned analysis needs results with TPFs");
      const double v = std::log10(1.0 + static_cast<double>((*r.tpf)[static_cast<std::size_t>(p.kind)]));
      const auto bin = static_cast<std::size_t>(std::floor(v / bin_width));
      if (bin >= count.size()) {
        count.resize(bin + 1, 0);
        hits.resize(bin + 1, 0);
      }
      ++count[bin];
      hits[bin] += r.rank <= 10;
    }
    for (std::size_t b = 0; b < count.size(); ++b) {
      BinRow row{p.kind, p.direction, static_cast<double>(b) * bin_width, static_cast<double>(b + 1) * bin_width,
                 count[b], std::nullopt};
      if (count[b] > 0) row.hits10 = static_cast<double>(hits[b]) / static_cast<double>(count[b]);
      rows.push_back(row);
    }
  }
  return rows;
}

// ---------------------------------------------------------------------------
// Report files

void write_results_jsonl(std::ostream& out, std::span<const QueryResult> results) {
  for (const QueryResult& r : results) {
    const Quadruple q = r.query.quadruple();
    nlohmann::ordered_json rec;
    rec["direction"] = model::direction_name(r.query.direction);
    rec["subject"] = q.subject;
    rec["relation"] = q.relation;
    rec["object"] = q.object;
    rec["time"] = q.time;
    rec["rank"] = r.rank;
    if (r.tpf) {
      nlohmann::ordered_json f;
      for (PatternKind k : model::kAllPatternKinds) f[model::pattern_name(k)] = (*r.tpf)[static_cast<std::size_t>(k)];
      rec["tpf"] = f;
    }
    out << rec.dump() << '\n';
  }
}

std::vector<QueryResult> read_results_jsonl(std::istream& in) {
  std::vector<QueryResult> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto rec = nlohmann::json::parse(line);
      const std::string dir = rec.at("direction");
      if (dir != "object" && dir != "subject") throw DataError("bad direction '" + dir + "'");
      const Quadruple q{rec.at("subject"), rec.at("relation"), rec.at("object"), rec.at("time")};
      QueryResult r{dir == "object" ? Query::object(q) : Query::subject(q), rec.at("rank").get<std::size_t>(),
                    std::nullopt};
      if (rec.contains("tpf")) {
        std::array<std::size_t, 7> f{};
        for (PatternKind k : model::kAllPatternKinds) {
          f[static_cast<std::size_t>(k)] = rec.at("tpf").at(model::pattern_name(k)).get<std::size_t>();
        }
        r.tpf = f;
      }
      out.push_back(r);
    } catch (const nlohmann::json::exception& e) {
      throw DataError("results line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

void write_summary_csv(std::ostream& out, const Metrics& m) {
  out << std::setprecision(12);
  out << "metric,value\n";
  out << "mrr," << m.mrr << '\n';
  out << "hits1," << m.hits1 << '\n';
  out << "hits3," << m.hits3 << '\n';
  out << "hits10," << m.hits10 << '\n';
  out << "queries," << m.count << '\n';
}

void write_bins_csv(std::ostream& out, std::span<const BinRow> rows) {
  out << std::setprecision(12);
  out << "pattern_kind,direction,bin_lo,bin_hi,count,hits10\n";
  for (const BinRow& r : rows) {
    out << model::pattern_name(r.kind) << ',' << model::direction_name(r.direction) << ',' << r.lo << ',' << r.hi
        << ',' << r.count << ',';
    if (r.hits10) out << *r.hits10;
    out << '\n';
  }
}

}  // namespace tkg::eval
