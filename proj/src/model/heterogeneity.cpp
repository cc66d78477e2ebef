#include "tkg/model/heterogeneity.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <tuple>

#include "tkg/error.hpp"
#include "tkg/model/init.hpp"

namespace tkg::model {

using tensor::Tensor;

// ---------------------------------------------------------------------------
// TPF

const char* pattern_name(PatternKind kind) {
  switch (kind) {
    case PatternKind::S: return "s";
    case PatternKind::O: return "o";
    case PatternKind::R: return "r";
    case PatternKind::SR: return "s_r";
    case PatternKind::RO: return "r_o";
    case PatternKind::SO: return "s_o";
    case PatternKind::SRO: return "s_r_o";
  }
  return "?";
}

PatternKind parse_pattern(const std::string& name) {
  for (PatternKind k : kAllPatternKinds) {
    if (name == pattern_name(k)) return k;
  }
  throw ConfigError("unknown pattern kind '" + name + "'");
}

WindowPolicy WindowPolicy::parse(const std::string& kind, std::size_t width) {
  if (kind == "full" || kind == "full_history") return full_history();
  if (width == 0) throw ConfigError("tpf window '" + kind + "' needs a positive width");
  if (kind == "trailing") return trailing(width);
  if (kind == "symmetric") return symmetric(width);
  throw ConfigError("unknown tpf window '" + kind + "' (expected full, trailing or symmetric)");
}

std::pair<std::int64_t, std::int64_t> WindowPolicy::range(TimeStep t) const {
  const auto ti = static_cast<std::int64_t>(t);
  const auto w = static_cast<std::int64_t>(width);
  switch (kind) {
    case Kind::FullHistory: return {0, ti - 1};
    case Kind::Trailing: return {ti - w, ti - 1};
    case Kind::Symmetric: return {ti - w, ti + w};
  }
  return {0, -1};
}

std::uint64_t TpfTable::key(PatternKind kind, EntityId s, RelationId r, EntityId o) const {
  switch (kind) {
    case PatternKind::S: return s;
    case PatternKind::O: return o;
    case PatternKind::R: return r;
    case PatternKind::SR: return s * relations_ + r;
    case PatternKind::RO: return r * entities_ + o;
    case PatternKind::SO: return s * entities_ + o;
    case PatternKind::SRO: return (s * relations_ + r) * entities_ + o;
  }
  return 0;
}

TpfTable TpfTable::build(const TkgDataset& dataset, WindowPolicy policy) {
  TpfTable table;
  table.policy_ = policy;
  table.entities_ = dataset.entity_count;
  table.relations_ = dataset.relation_count;
  for (const Snapshot& snap : dataset.split(Split::Train)) {
    for (const Triple& tr : snap.triples) {
      for (PatternKind k : kAllPatternKinds) {
        table.times_[static_cast<std::size_t>(k)][table.key(k, tr.subject, tr.relation, tr.object)].push_back(
            snap.time);
      }
    }
  }
  // Snapshots are visited in time order, so every list is already sorted.
  return table;
}

std::size_t TpfTable::count(PatternKind kind, std::uint64_t k, TimeStep t) const {
  const auto& map = times_[static_cast<std::size_t>(kind)];
  const auto it = map.find(k);
  if (it == map.end()) return 0;
  const auto& times = it->second;
  auto [lo, hi] = policy_.range(t);
  lo = std::max<std::int64_t>(lo, 0);
  if (hi < lo) return 0;
  const auto first = std::lower_bound(times.begin(), times.end(), static_cast<TimeStep>(lo));
  const auto last = std::upper_bound(times.begin(), times.end(), static_cast<TimeStep>(std::min<std::int64_t>(
                                                                     hi, std::numeric_limits<TimeStep>::max())));
  const auto at_t = std::equal_range(times.begin(), times.end(), t);
  std::size_t total = static_cast<std::size_t>(last - first);
  if (static_cast<std::int64_t>(t) >= lo && static_cast<std::int64_t>(t) <= hi) {
    total -= static_cast<std::size_t>(at_t.second - at_t.first);
  }
  return total;
}

std::size_t TpfTable::frequency(PatternKind kind, const Quadruple& q) const {
  return count(kind, key(kind, q.subject, q.relation, q.object), q.time);
}

std::array<std::size_t, 7> TpfTable::frequencies(const Quadruple& q) const {
  std::array<std::size_t, 7> out{};
  for (PatternKind k : kAllPatternKinds) out[static_cast<std::size_t>(k)] = frequency(k, q);
  return out;
}

std::array<double, 3> TpfTable::object_query_features(EntityId s, RelationId r, TimeStep t) const {
  return {static_cast<double>(count(PatternKind::S, key(PatternKind::S, s, r, 0), t)),
          static_cast<double>(count(PatternKind::R, key(PatternKind::R, s, r, 0), t)),
          static_cast<double>(count(PatternKind::SR, key(PatternKind::SR, s, r, 0), t))};
}

std::array<double, 3> TpfTable::subject_query_features(RelationId r, EntityId o, TimeStep t) const {
  return {static_cast<double>(count(PatternKind::O, key(PatternKind::O, 0, r, o), t)),
          static_cast<double>(count(PatternKind::R, key(PatternKind::R, 0, r, o), t)),
          static_cast<double>(count(PatternKind::RO, key(PatternKind::RO, 0, r, o), t))};
}

void TpfTable::export_csv(std::ostream& out, std::span<const Quadruple> queries, const TkgDataset& dataset) const {
  auto entity = [&](EntityId e) {
    return e < dataset.entity_names.size() ? dataset.entity_names[e] : std::to_string(e);
  };
  auto relation = [&](RelationId r) {
    return r < dataset.relation_names.size() ? dataset.relation_names[r] : std::to_string(r);
  };
  using Row = std::tuple<std::size_t, std::vector<std::uint32_t>, TimeStep>;
  std::set<Row> rows;
  for (const Quadruple& q : queries) {
    for (PatternKind k : kAllPatternKinds) {
      std::vector<std::uint32_t> ids;
      switch (k) {
        case PatternKind::S: ids = {q.subject}; break;
        case PatternKind::O: ids = {q.object}; break;
        case PatternKind::R: ids = {q.relation}; break;
        case PatternKind::SR: ids = {q.subject, q.relation}; break;
        case PatternKind::RO: ids = {q.relation, q.object}; break;
        case PatternKind::SO: ids = {q.subject, q.object}; break;
        case PatternKind::SRO: ids = {q.subject, q.relation, q.object}; break;
      }
      rows.emplace(static_cast<std::size_t>(k), std::move(ids), q.time);
    }
  }
  out << "pattern_kind,key,els,time,count\n";
  for (const auto& [kind_index, ids, t] : rows) {
    const auto kind = static_cast<PatternKind>(kind_index);
    const std::string name = pattern_name(kind);
    std::string key_text, els;
    // Element roles follow the pattern name: s/o are entities, r is a relation.
    std::size_t role = 0;
    for (std::size_t i = 0; i < ids.size(); ++i) {
      while (role < name.size() && name[role] == '_') ++role;
      const bool is_relation = name[role] == 'r';
      ++role;
      if (i) {
        key_text += ':';
        els += '|';
      }
      key_text += std::to_string(ids[i]);
      els += is_relation ? relation(ids[i]) : entity(ids[i]);
    }
    Quadruple q{0, 0, 0, t};
    if (kind == PatternKind::S || kind == PatternKind::SR || kind == PatternKind::SO || kind == PatternKind::SRO) {
      q.subject = ids[0];
    }
    if (kind == PatternKind::R) q.relation = ids[0];
    if (kind == PatternKind::SR || kind == PatternKind::SRO) q.relation = ids[1];
    if (kind == PatternKind::RO) q.relation = ids[0];
    if (kind == PatternKind::O) q.object = ids[0];
    if (kind == PatternKind::RO || kind == PatternKind::SO) q.object = ids[1];
    if (kind == PatternKind::SRO) q.object = ids[2];
    auto quoted = [](const std::string& s) {
      if (s.find_first_of(",\"\n") == std::string::npos) return s;
      std::string r = "\"";
      for (char c : s) r += c == '"' ? std::string("\"\"") : std::string(1, c);
      return r + "\"";
    };
    out << name << ',' << key_text << ',' << quoted(els) << ',' << t << ',' << frequency(kind, q) << '\n';
  }
}

// ---------------------------------------------------------------------------
// Imputation

std::vector<double> impute(std::span<const double> x_t, std::optional<std::span<const double>> x_prev, double delta_t,
                           double lambda, double b) {
  std::vector<double> out(x_t.begin(), x_t.end());
  if (!x_prev) return out;
  if (x_prev->size() != x_t.size()) throw ShapeError("impute: vector sizes differ");
  const double gamma = decay_weight(delta_t, lambda, b);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = gamma * (*x_prev)[i] + (1.0 - gamma) * x_t[i];
  return out;
}

BidirectionalCoefficients bidirectional_coefficients(std::optional<double> delta_prev, std::optional<double> delta_next,
                                                     double lambda, double b) {
  BidirectionalCoefficients c;
  if (delta_prev) c.previous = decay_weight(*delta_prev, lambda, b) / 2.0;
  if (delta_next) c.next = decay_weight(*delta_next, lambda, b) / 2.0;
  c.current = 1.0 - c.previous - c.next;
  return c;
}

std::vector<double> impute_bidirectional(std::span<const double> x_t, std::optional<std::span<const double>> x_prev,
                                         std::optional<std::span<const double>> x_next,
                                         std::optional<double> delta_prev, std::optional<double> delta_next,
                                         double lambda, double b) {
  if (x_prev.has_value() != delta_prev.has_value() || x_next.has_value() != delta_next.has_value()) {
    throw Error("impute_bidirectional: each neighbor needs both a vector and a gap");
  }
  const auto c = bidirectional_coefficients(delta_prev, delta_next, lambda, b);
  std::vector<double> out(x_t.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = c.current * x_t[i];
    if (x_prev) out[i] += c.previous * (*x_prev)[i];
    if (x_next) out[i] += c.next * (*x_next)[i];
  }
  return out;
}

Imputer::Imputer(tensor::ParameterSet& params, const std::string& prefix) {
  lambda_ = params.add(prefix + ".lambda", constant_parameter(1, 1, 0.1));
  bias_ = params.add(prefix + ".bias", constant_parameter(1, 1, 0.0));
}

Tensor Imputer::apply(const EncoderWindow& window, bool bidirectional) const {
  const WindowFrame& now = window.current();
  const std::size_t E = now.active.size();
  const Tensor& x_t = now.x;

  // Nearest active frame on one side of t for every inactive entity.
  auto neighbor_term = [&](bool future, double share) -> Tensor {
    std::vector<std::optional<std::size_t>> nearest(E);
    for (std::size_t k = 0; k < window.frames.size(); ++k) {
      const WindowFrame& f = window.frames[k];
      if (future ? f.offset <= 0 : f.offset >= 0) continue;
      for (std::size_t e = 0; e < E; ++e) {
        if (now.active[e] || !f.active[e]) continue;
        // Past frames ascend toward t, future frames move away from it.
        if (!future || !nearest[e]) nearest[e] = k;
      }
    }
    std::vector<double> gaps(E, 0.0), present(E, 0.0);
    std::vector<std::vector<std::uint32_t>> by_frame(window.frames.size());
    bool any = false;
    for (std::size_t e = 0; e < E; ++e) {
      if (!nearest[e]) continue;
      by_frame[*nearest[e]].push_back(static_cast<std::uint32_t>(e));
      gaps[e] = std::abs(window.frames[*nearest[e]].offset);
      present[e] = share;
      any = true;
    }
    if (!any) return {};
    Tensor neighbor;
    for (std::size_t k = 0; k < by_frame.size(); ++k) {
      if (by_frame[k].empty()) continue;
      const Tensor part =
          tensor::scatter_add_rows(tensor::gather_rows(window.frames[k].x, by_frame[k]), by_frame[k], E);
      neighbor = neighbor.defined() ? tensor::add(neighbor, part) : part;
    }
    const Tensor coefficient =
        tensor::mul(decay_column(gaps, lambda_, bias_), Tensor::from(E, 1, std::move(present)));
    return tensor::scale_rows(tensor::sub(neighbor, x_t), coefficient);
  };

  const double share = bidirectional ? 0.5 : 1.0;
  Tensor out = x_t;
  if (Tensor past = neighbor_term(false, share); past.defined()) out = tensor::add(out, past);
  if (bidirectional) {
    if (Tensor next = neighbor_term(true, share); next.defined()) out = tensor::add(out, next);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Gating

FrequencyGate::FrequencyGate(tensor::ParameterSet& params, Rng& rng, const std::string& prefix, std::size_t hidden) {
  w1 = params.add(prefix + ".w1", xavier_parameter(3, hidden, rng));
  b1 = params.add(prefix + ".b1", constant_parameter(1, hidden, 0.0));
  w2 = params.add(prefix + ".w2", xavier_parameter(hidden, 1, rng));
  b2 = params.add(prefix + ".b2", constant_parameter(1, 1, 0.0));
}

Tensor FrequencyGate::features(std::span<const std::array<double, 3>> frequencies) {
  std::vector<double> v;
  v.reserve(frequencies.size() * 3);
  for (const auto& f : frequencies) {
    for (double c : f) {
      if (c < 0.0) throw Error("frequency gate: negative frequency");
      v.push_back(std::log1p(c));
    }
  }
  return Tensor::from(frequencies.size(), 3, std::move(v));
}

Tensor FrequencyGate::forward(std::span<const std::array<double, 3>> frequencies) const {
  const Tensor hidden = tensor::relu(tensor::add_row(tensor::matmul(features(frequencies), w1), b1));
  return tensor::sigmoid(tensor::add_row(tensor::matmul(hidden, w2), b2));
}

double FrequencyGate::evaluate(const std::array<double, 3>& frequencies) const {
  return forward(std::span<const std::array<double, 3>>(&frequencies, 1)).item();
}

GateSet GateSet::create(tensor::ParameterSet& params, Rng& rng, const std::string& prefix, std::size_t hidden) {
  GateSet g;
  g.os = FrequencyGate(params, rng, prefix + ".os", hidden);
  g.oo = FrequencyGate(params, rng, prefix + ".oo", hidden);
  g.ss = FrequencyGate(params, rng, prefix + ".ss", hidden);
  g.so = FrequencyGate(params, rng, prefix + ".so", hidden);
  return g;
}

namespace {

GatedEmbeddings gate_query(const Tensor& x_anchor, const Tensor& z_anchor, const Tensor& x_all, const Tensor& z_all,
                           const std::array<double, 3>& f, const FrequencyGate& anchor_gate,
                           const FrequencyGate& candidate_gate) {
  const std::span<const std::array<double, 3>> features(&f, 1);
  const Tensor a_anchor = anchor_gate.forward(features);
  const Tensor a_cand = candidate_gate.forward(features);
  const std::vector<std::uint32_t> repeat(x_all.rows(), 0);
  GatedEmbeddings out;
  out.anchor = tensor::convex_mix(x_anchor, z_anchor, a_anchor);
  out.candidates = tensor::convex_mix(x_all, z_all, tensor::gather_rows(a_cand, repeat));
  out.alpha_anchor = a_anchor.item();
  out.alpha_candidates = a_cand.item();
  return out;
}

}  // namespace

GatedEmbeddings gate_object_query(const Tensor& x_s, const Tensor& z_s, const Tensor& x_all, const Tensor& z_all,
                                  const std::array<double, 3>& f_s, const GateSet& gates) {
  return gate_query(x_s, z_s, x_all, z_all, f_s, gates.os, gates.oo);
}

GatedEmbeddings gate_subject_query(const Tensor& x_o, const Tensor& z_o, const Tensor& x_all, const Tensor& z_all,
                                   const std::array<double, 3>& f_o, const GateSet& gates) {
  return gate_query(x_o, z_o, x_all, z_all, f_o, gates.so, gates.ss);
}

}  // namespace tkg::model
