#include "tkg/core/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <fstream>
#include <numeric>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <unordered_map>

#include "tkg/error.hpp"
#include "tkg/log.hpp"

namespace tkg {

const char* split_name(Split split) {
  switch (split) {
    case Split::Train: return "train";
    case Split::Valid: return "valid";
    case Split::Test: return "test";
  }
  return "unknown";
}

Split parse_split(const std::string& name) {
  if (name == "train") return Split::Train;
  if (name == "valid" || name == "validation") return Split::Valid;
  if (name == "test") return Split::Test;
  throw ConfigError("unknown split '" + name + "' (expected train|valid|test)");
}

std::size_t TkgDataset::size(Split s) const {
  std::size_t total = 0;
  for (const Snapshot& snap : split(s)) total += snap.size();
  return total;
}

std::vector<Quadruple> TkgDataset::quadruples(Split s) const {
  std::vector<Quadruple> out;
  out.reserve(size(s));
  for (const Snapshot& snap : split(s)) {
    for (const Triple& tr : snap.triples) out.push_back({tr.subject, tr.relation, tr.object, snap.time});
  }
  return out;
}

void TkgDataset::validate() const {
  for (Split s : kAllSplits) {
    const auto& snaps = split(s);
    if (snaps.size() != step_count) {
      throw DataError(std::string("split ") + split_name(s) + " has " + std::to_string(snaps.size()) +
                      " snapshots, expected " + std::to_string(step_count));
    }
    for (std::size_t t = 0; t < snaps.size(); ++t) {
      const Snapshot& snap = snaps[t];
      if (snap.time != t) throw DataError("snapshot time does not match its position");
      for (std::size_t i = 0; i < snap.triples.size(); ++i) {
        const Triple& tr = snap.triples[i];
        if (tr.subject >= entity_count || tr.object >= entity_count || tr.relation >= relation_count) {
          throw DataError("triple index out of vocabulary range at step " + std::to_string(t));
        }
        if (i > 0 && !(snap.triples[i - 1] < tr)) {
          throw DataError("snapshot triples must be sorted and unique at step " + std::to_string(t));
        }
      }
    }
  }
  const auto& train = split(Split::Train);
  const auto& test = split(Split::Test);
  for (std::size_t t = 0; t < step_count; ++t) {
    for (const Triple& tr : test[t].triples) {
      if (std::binary_search(train[t].triples.begin(), train[t].triples.end(), tr)) {
        throw DataError("triple present in both train and test at step " + std::to_string(t));
      }
    }
  }
}

namespace {

std::vector<Snapshot> build_snapshots(std::size_t step_count, std::span<const Quadruple> quads,
                                      const char* label) {
  std::vector<Snapshot> snaps(step_count);
  for (std::size_t t = 0; t < step_count; ++t) snaps[t].time = static_cast<TimeStep>(t);
  for (const Quadruple& q : quads) {
    if (q.time >= step_count) throw DataError("quadruple time out of range in " + std::string(label));
    snaps[q.time].triples.push_back(q.triple());
  }
  std::size_t duplicates = 0;
  for (Snapshot& snap : snaps) {
    std::sort(snap.triples.begin(), snap.triples.end());
    const auto last = std::unique(snap.triples.begin(), snap.triples.end());
    duplicates += static_cast<std::size_t>(snap.triples.end() - last);
    snap.triples.erase(last, snap.triples.end());
  }
  if (duplicates > 0) {
    log::warn("duplicate quadruples dropped", {{"split", label}, {"count", duplicates}});
  }
  return snaps;
}

}  // namespace

TkgDataset make_dataset(std::size_t entity_count, std::size_t relation_count, std::size_t step_count,
                        std::span<const Quadruple> train, std::span<const Quadruple> valid,
                        std::span<const Quadruple> test) {
  TkgDataset ds;
  ds.entity_count = entity_count;
  ds.relation_count = relation_count;
  ds.step_count = step_count;
  ds.split(Split::Train) = build_snapshots(step_count, train, "train");
  ds.split(Split::Valid) = build_snapshots(step_count, valid, "valid");
  ds.split(Split::Test) = build_snapshots(step_count, test, "test");
  ds.validate();
  return ds;
}

std::vector<EntityId> active_entities(const Snapshot& snapshot) {
  std::vector<EntityId> out;
  out.reserve(snapshot.triples.size() * 2);
  for (const Triple& tr : snapshot.triples) {
    out.push_back(tr.subject);
    out.push_back(tr.object);
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::vector<std::uint8_t> activity_flags(const Snapshot& snapshot, std::size_t entity_count) {
  std::vector<std::uint8_t> flags(entity_count, 0);
  for (const Triple& tr : snapshot.triples) {
    flags[tr.subject] = 1;
    flags[tr.object] = 1;
  }
  return flags;
}

DatasetFormat parse_dataset_format(const std::string& text) {
  if (text == "auto") return DatasetFormat::Auto;
  if (text == "ids") return DatasetFormat::Ids;
  if (text == "names") return DatasetFormat::Names;
  throw ConfigError("unknown dataset format '" + text + "' (expected auto|ids|names)");
}

TimeGranularity parse_time_granularity(const std::string& text) {
  if (text == "auto") return TimeGranularity::Auto;
  if (text == "raw") return TimeGranularity::Raw;
  if (text == "day" || text == "daily") return TimeGranularity::Day;
  if (text == "month" || text == "monthly") return TimeGranularity::Month;
  if (text == "year" || text == "yearly") return TimeGranularity::Year;
  throw ConfigError("unknown time granularity '" + text + "' (expected auto|raw|day|month|year)");
}

// ---------------------------------------------------------------------------
// Loader

namespace {

struct RawLine {
  std::array<std::string, 4> fields;
  std::string file;
  std::size_t line = 0;
};

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> fields;
  if (line.find('\t') != std::string::npos) {
    std::size_t start = 0;
    while (true) {
      const std::size_t tab = line.find('\t', start);
      std::string field = line.substr(start, tab == std::string::npos ? std::string::npos : tab - start);
      // Trim surrounding spaces and a trailing carriage return.
      const auto first = field.find_first_not_of(" \r");
      const auto last = field.find_last_not_of(" \r");
      fields.push_back(first == std::string::npos ? std::string() : field.substr(first, last - first + 1));
      if (tab == std::string::npos) break;
      start = tab + 1;
    }
    while (!fields.empty() && fields.back().empty()) fields.pop_back();
  } else {
    std::istringstream in(line);
    std::string field;
    while (in >> field) fields.push_back(field);
  }
  return fields;
}

std::optional<std::uint64_t> parse_uint(const std::string& text) {
  std::uint64_t value = 0;
  const char* begin = text.data();
  const char* end = begin + text.size();
  const auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || ptr != end || text.empty()) return std::nullopt;
  return value;
}

std::optional<std::chrono::year_month_day> parse_date(const std::string& text) {
  // YYYY-MM-DD
  if (text.size() != 10 || text[4] != '-' || text[7] != '-') return std::nullopt;
  const auto y = parse_uint(text.substr(0, 4));
  const auto m = parse_uint(text.substr(5, 2));
  const auto d = parse_uint(text.substr(8, 2));
  if (!y || !m || !d) return std::nullopt;
  const std::chrono::year_month_day ymd{std::chrono::year(static_cast<int>(*y)),
                                        std::chrono::month(static_cast<unsigned>(*m)),
                                        std::chrono::day(static_cast<unsigned>(*d))};
  if (!ymd.ok()) return std::nullopt;
  return ymd;
}

std::string location(const RawLine& raw) { return raw.file + ":" + std::to_string(raw.line); }

std::vector<RawLine> read_quadruple_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("missing file: " + path.string());
  std::vector<RawLine> out;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    auto fields = split_fields(line);
    if (fields.size() != 4) {
      throw DataError(path.string() + ":" + std::to_string(number) + ": expected 4 fields, got " +
                      std::to_string(fields.size()));
    }
    RawLine raw;
    std::move(fields.begin(), fields.end(), raw.fields.begin());
    raw.file = path.string();
    raw.line = number;
    out.push_back(std::move(raw));
  }
  return out;
}

std::optional<std::unordered_map<std::string, std::uint64_t>> read_id_map(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) return std::nullopt;
  std::unordered_map<std::string, std::uint64_t> map;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto fields = split_fields(line);
    if (fields.size() < 2) {
      throw DataError(path.string() + ":" + std::to_string(number) + ": expected 'name<TAB>id'");
    }
    const auto id = parse_uint(fields[1]);
    if (!id) throw DataError(path.string() + ":" + std::to_string(number) + ": non-integer id");
    map.emplace(fields[0], *id);
  }
  return map;
}

struct DeclaredStats {
  std::optional<std::size_t> entities;
  std::optional<std::size_t> relations;
  std::optional<std::size_t> steps;
};

DeclaredStats read_stat_file(const std::filesystem::path& path) {
  DeclaredStats stats;
  std::ifstream in(path);
  if (!in) return stats;
  std::string line;
  std::getline(in, line);
  const auto fields = split_fields(line);
  if (fields.size() < 2) throw DataError(path.string() + ":1: expected 'num_entities num_relations'");
  const auto e = parse_uint(fields[0]);
  const auto r = parse_uint(fields[1]);
  if (!e || !r) throw DataError(path.string() + ":1: non-integer field");
  stats.entities = *e;
  stats.relations = *r;
  if (fields.size() >= 3) {
    const auto t = parse_uint(fields[2]);
    if (t && *t > 0) stats.steps = *t;
  }
  return stats;
}

class Vocabulary {
 public:
  explicit Vocabulary(std::optional<std::unordered_map<std::string, std::uint64_t>> fixed)
      : fixed_(std::move(fixed)) {}

  std::uint64_t resolve(const std::string& name, const RawLine& raw, const char* what) {
    if (fixed_) {
      const auto it = fixed_->find(name);
      if (it == fixed_->end()) {
        throw DataError(location(raw) + ": unknown " + std::string(what) + " '" + name + "'");
      }
      return it->second;
    }
    const auto [it, inserted] = seen_.emplace(name, seen_.size());
    if (inserted) order_.push_back(name);
    return it->second;
  }

  std::size_t size() const {
    if (!fixed_) return order_.size();
    std::uint64_t max_id = 0;
    for (const auto& [name, id] : *fixed_) max_id = std::max(max_id, id + 1);
    return max_id;
  }

  std::vector<std::string> names() const {
    if (!fixed_) return order_;
    std::vector<std::string> out(size());
    for (const auto& [name, id] : *fixed_) out[id] = name;
    return out;
  }

 private:
  std::optional<std::unordered_map<std::string, std::uint64_t>> fixed_;
  std::unordered_map<std::string, std::uint64_t> seen_;
  std::vector<std::string> order_;
};

std::vector<RawLine> read_optional_quadruple_file(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) return {};
  return read_quadruple_file(path);
}

}  // namespace

TkgDataset load_dataset(const std::filesystem::path& directory, const LoadOptions& options) {
  const std::array<std::vector<RawLine>, 3> raw = {read_quadruple_file(directory / "train.txt"),
                                                   read_optional_quadruple_file(directory / "valid.txt"),
                                                   read_optional_quadruple_file(directory / "test.txt")};
  const DeclaredStats declared = read_stat_file(directory / "stat.txt");
  auto entity_map = read_id_map(directory / "entity2id.txt");
  auto relation_map = read_id_map(directory / "relation2id.txt");

  bool all_integer = true;
  bool all_integer_time = true;
  bool all_date_time = true;
  for (const auto& lines : raw) {
    for (const RawLine& r : lines) {
      all_integer = all_integer && parse_uint(r.fields[0]) && parse_uint(r.fields[1]) && parse_uint(r.fields[2]);
      const bool int_time = parse_uint(r.fields[3]).has_value();
      all_integer_time = all_integer_time && int_time;
      all_date_time = all_date_time && !int_time && parse_date(r.fields[3]).has_value();
    }
  }

  DatasetFormat format = options.format;
  if (format == DatasetFormat::Auto) {
    format = (entity_map || relation_map || !all_integer) ? DatasetFormat::Names : DatasetFormat::Ids;
  }

  // Time mapping.
  TimeGranularity granularity = options.granularity;
  std::uint64_t time_unit = 1;
  std::optional<std::chrono::year_month_day> base_date;
  if (!all_integer_time && !all_date_time) {
    for (const auto& lines : raw) {
      for (const RawLine& r : lines) {
        if (!parse_uint(r.fields[3]) && !parse_date(r.fields[3])) {
          throw DataError(location(r) + ": malformed time field '" + r.fields[3] + "'");
        }
      }
    }
    throw DataError("time fields mix integers and dates in " + directory.string());
  }
  const bool has_lines = !raw[0].empty() || !raw[1].empty() || !raw[2].empty();
  if (has_lines && all_integer_time) {
    if (granularity == TimeGranularity::Day || granularity == TimeGranularity::Month ||
        granularity == TimeGranularity::Year) {
      throw ConfigError("time granularity day/month/year requires date-valued time fields");
    }
    if (granularity == TimeGranularity::Auto && !declared.steps) {
      std::uint64_t g = 0;
      for (const auto& lines : raw) {
        for (const RawLine& r : lines) g = std::gcd(g, *parse_uint(r.fields[3]));
      }
      time_unit = std::max<std::uint64_t>(g, 1);
    }
  } else if (has_lines) {
    if (granularity == TimeGranularity::Raw) throw ConfigError("raw time granularity requires integer times");
    if (granularity == TimeGranularity::Auto) granularity = TimeGranularity::Day;
    for (const auto& lines : raw) {
      for (const RawLine& r : lines) {
        const auto d = *parse_date(r.fields[3]);
        if (!base_date || std::chrono::sys_days(d) < std::chrono::sys_days(*base_date)) base_date = d;
      }
    }
  }

  auto time_index = [&](const RawLine& r) -> std::uint64_t {
    if (all_integer_time) return *parse_uint(r.fields[3]) / time_unit;
    const auto d = *parse_date(r.fields[3]);
    switch (granularity) {
      case TimeGranularity::Month:
        return static_cast<std::uint64_t>((static_cast<int>(d.year()) - static_cast<int>(base_date->year())) * 12 +
                                          (static_cast<int>(static_cast<unsigned>(d.month())) -
                                           static_cast<int>(static_cast<unsigned>(base_date->month()))));
      case TimeGranularity::Year:
        return static_cast<std::uint64_t>(static_cast<int>(d.year()) - static_cast<int>(base_date->year()));
      default:
        return static_cast<std::uint64_t>(
            (std::chrono::sys_days(d) - std::chrono::sys_days(*base_date)).count());
    }
  };

  Vocabulary entities(format == DatasetFormat::Names ? std::move(entity_map) : std::nullopt);
  Vocabulary relations(format == DatasetFormat::Names ? std::move(relation_map) : std::nullopt);

  std::array<std::vector<Quadruple>, 3> quads;
  std::uint64_t max_entity = 0, max_relation = 0, max_time = 0;
  bool any = false;
  for (std::size_t s = 0; s < 3; ++s) {
    for (const RawLine& r : raw[s]) {
      std::uint64_t subj = 0, rel = 0, obj = 0;
      if (format == DatasetFormat::Ids) {
        const auto a = parse_uint(r.fields[0]);
        const auto b = parse_uint(r.fields[1]);
        const auto c = parse_uint(r.fields[2]);
        if (!a || !b || !c) throw DataError(location(r) + ": non-integer field");
        subj = *a;
        rel = *b;
        obj = *c;
      } else {
        subj = entities.resolve(r.fields[0], r, "entity");
        rel = relations.resolve(r.fields[1], r, "relation");
        obj = entities.resolve(r.fields[2], r, "entity");
      }
      const std::uint64_t t = time_index(r);
      if (declared.entities && (subj >= *declared.entities || obj >= *declared.entities)) {
        throw DataError(location(r) + ": entity index out of declared range");
      }
      if (declared.relations && rel >= *declared.relations) {
        throw DataError(location(r) + ": relation index out of declared range");
      }
      if (declared.steps && t >= *declared.steps) {
        throw DataError(location(r) + ": time index out of declared range");
      }
      max_entity = std::max(max_entity, std::max(subj, obj));
      max_relation = std::max(max_relation, rel);
      max_time = std::max(max_time, t);
      any = true;
      quads[s].push_back({static_cast<EntityId>(subj), static_cast<RelationId>(rel), static_cast<EntityId>(obj),
                          static_cast<TimeStep>(t)});
    }
  }

  std::size_t entity_count = any ? max_entity + 1 : 0;
  std::size_t relation_count = any ? max_relation + 1 : 0;
  if (format == DatasetFormat::Names) {
    entity_count = std::max(entity_count, entities.size());
    relation_count = std::max(relation_count, relations.size());
  }
  if (declared.entities) entity_count = *declared.entities;
  if (declared.relations) relation_count = *declared.relations;
  const std::size_t step_count = declared.steps ? *declared.steps : (any ? max_time + 1 : 0);

  TkgDataset ds = make_dataset(entity_count, relation_count, step_count, quads[0], quads[1], quads[2]);
  if (format == DatasetFormat::Names) {
    ds.entity_names = entities.names();
    ds.relation_names = relations.names();
  }
  log::info("dataset loaded", {{"path", directory.string()},
                               {"entities", ds.entity_count},
                               {"relations", ds.relation_count},
                               {"steps", ds.step_count},
                               {"train", ds.size(Split::Train)},
                               {"valid", ds.size(Split::Valid)},
                               {"test", ds.size(Split::Test)}});
  return ds;
}

void write_dataset(const TkgDataset& dataset, const std::filesystem::path& directory) {
  std::filesystem::create_directories(directory);
  for (Split s : kAllSplits) {
    const auto path = directory / (std::string(split_name(s)) + ".txt");
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path.string());
    for (const Snapshot& snap : dataset.split(s)) {
      for (const Triple& tr : snap.triples) {
        out << tr.subject << '\t' << tr.relation << '\t' << tr.object << '\t' << snap.time << '\n';
      }
    }
  }
  std::ofstream stat(directory / "stat.txt");
  if (!stat) throw DataError("cannot write " + (directory / "stat.txt").string());
  stat << dataset.entity_count << '\t' << dataset.relation_count << '\t' << dataset.step_count << '\n';
}

// ---------------------------------------------------------------------------
// Synthetic generator

TkgDataset generate_synthetic(const SyntheticParams& spec, std::uint64_t seed) {
  if (spec.entities == 0) throw ConfigError("synthetic data needs at least one entity");
  if (spec.steps == 0) throw ConfigError("synthetic data needs at least one step");
  if (spec.relations == 0) throw ConfigError("synthetic data needs at least one relation");
  if (spec.periodicity < 0.0 || spec.periodicity > 1.0 || spec.persistence < 0.0 || spec.persistence > 1.0) {
    throw ConfigError("periodicity and persistence must lie in [0, 1]");
  }
  if (spec.valid_fraction < 0.0 || spec.test_fraction < 0.0 || spec.valid_fraction + spec.test_fraction > 1.0) {
    throw ConfigError("valid/test fractions must be nonnegative and sum to at most 1");
  }
  if (spec.periodicity > 0.0 && spec.period == 0) throw ConfigError("period must be >= 1");

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<std::uint32_t> pick_entity(0, static_cast<std::uint32_t>(spec.entities - 1));
  std::uniform_int_distribution<std::uint32_t> pick_relation(0, static_cast<std::uint32_t>(spec.relations - 1));

  const std::size_t distinct_possible =
      spec.entities * spec.relations * (spec.entities > 1 ? spec.entities - 1 : 1);
  const std::size_t target = std::min(spec.facts_per_step, distinct_possible);
  const std::size_t warmup = spec.periodicity > 0.0 ? spec.period : 0;

  struct Fact {
    Triple triple;
    Split split;
  };
  std::vector<std::vector<Fact>> steps(spec.steps);
  std::array<std::vector<Quadruple>, 3> quads;

  for (std::size_t t = 0; t < spec.steps; ++t) {
    std::vector<Fact>& facts = steps[t];
    std::set<Triple> present;
    // A copied fact remembers whether its source was a training fact.
    std::vector<std::pair<Triple, bool>> pending;
    auto add = [&](const Triple& tr, bool source_train) {
      if (present.insert(tr).second) pending.emplace_back(tr, source_train);
    };
    if (spec.periodicity > 0.0 && t >= spec.period) {
      for (const Fact& f : steps[t - spec.period]) {
        if (unit(rng) < spec.periodicity) add(f.triple, f.split == Split::Train);
      }
    }
    if (spec.persistence > 0.0 && t >= 1) {
      for (const Fact& f : steps[t - 1]) {
        if (unit(rng) < spec.persistence) add(f.triple, f.split == Split::Train);
      }
    }
    const std::size_t copied = pending.size();
    std::size_t attempts = 0;
    while (pending.size() < target && attempts < 100 * target + 100) {
      ++attempts;
      Triple tr{pick_entity(rng), pick_relation(rng), pick_entity(rng)};
      if (spec.entities > 1 && tr.subject == tr.object) continue;
      add(tr, true);
    }
    for (std::size_t i = 0; i < pending.size(); ++i) {
      const auto& [tr, source_train] = pending[i];
      const bool is_copy = i < copied;
      Split split = Split::Train;
      const double u = unit(rng);
      if (t >= warmup && (!is_copy || source_train)) {
        if (u < spec.test_fraction) {
          split = Split::Test;
        } else if (u < spec.test_fraction + spec.valid_fraction) {
          split = Split::Valid;
        }
      }
      facts.push_back({tr, split});
      quads[static_cast<std::size_t>(split)].push_back(
          {tr.subject, tr.relation, tr.object, static_cast<TimeStep>(t)});
    }
  }
  return make_dataset(spec.entities, spec.relations, spec.steps, quads[0], quads[1], quads[2]);
}

}  // namespace tkg
