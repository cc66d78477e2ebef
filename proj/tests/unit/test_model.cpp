#include <doctest.h>

#include <optional>

#include "model_loss.hpp"
#include "oracles.hpp"
#include "tkg/error.hpp"
#include "tkg/model/temp_model.hpp"

using namespace tkg;
using namespace tkg::model;
using tkg::tensor::Tensor;

namespace {

ModelConfig small(Variant v) {
  ModelConfig c;
  c.variant = v;
  c.dim = 4;
  c.layers = 2;
  c.heads = 2;
  c.window = 2;
  c.gate_hidden = 3;
  return c;
}

std::vector<double> vec(const Tensor& t) { return {t.values().begin(), t.values().end()}; }

struct Encoded {
  std::vector<std::optional<StepEncoding>> cache;
  StructuralSource source(const TempModel& m, const std::vector<Snapshot>& snaps) {
    cache.assign(m.step_count(), std::nullopt);
    return [this, &m, &snaps](TimeStep t) -> const StepEncoding& {
      if (!cache[t]) cache[t] = m.encode_snapshot(snaps[t]);
      return *cache[t];
    };
  }
};

}  // namespace

TEST_CASE("configuration checks") {
  ModelConfig c = small(Variant::Srgcn);
  c.gating = true;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = small(Variant::TempSa);
  c.heads = 3;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = small(Variant::TempGru);
  c.dim = 5;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c.decoder = DecoderKind::DistMult;
  CHECK_NOTHROW(c.validate());
  for (auto v : {Variant::Srgcn, Variant::TempGru, Variant::TempSa}) CHECK(parse_variant(variant_name(v)) == v);
}

TEST_CASE("window steps") {
  ModelConfig c = small(Variant::TempGru);
  c.window = 3;
  TempModel uni(c, 4, 2, 10, 0);
  CHECK(uni.window_steps(5) == std::vector<TimeStep>{2, 3, 4, 5});
  CHECK(uni.window_steps(1) == std::vector<TimeStep>{0, 1});
  c.bidirectional = true;
  c.window = 4;
  TempModel bi(c, 4, 2, 10, 0);
  CHECK(bi.window_steps(5) == std::vector<TimeStep>{3, 4, 5, 6, 7});
  CHECK(bi.window_steps(9) == std::vector<TimeStep>{7, 8, 9});
  TempModel st(small(Variant::Srgcn), 4, 2, 10, 0);
  CHECK(st.window_steps(4) == std::vector<TimeStep>{4});
  CHECK_THROWS(st.window_steps(10));
}

TEST_CASE("same seed gives identical parameters") {
  TempModel a(small(Variant::TempSa), 5, 2, 3, 11), b(small(Variant::TempSa), 5, 2, 3, 11);
  REQUIRE(a.parameters().size() == b.parameters().size());
  for (std::size_t i = 0; i < a.parameters().size(); ++i) {
    CHECK(a.parameters().entries()[i].first == b.parameters().entries()[i].first);
    CHECK(vec(a.parameters().entries()[i].second) == vec(b.parameters().entries()[i].second));
  }
}

TEST_CASE("a zero-width window ignores every other snapshot") {
  ModelConfig c = small(Variant::TempGru);
  c.window = 0;
  TempModel m(c, 5, 2, 4, 3);
  std::vector<Snapshot> snaps = {Snapshot{0, {{0, 0, 1}}}, Snapshot{1, {{1, 1, 2}, {3, 0, 4}}},
                                 Snapshot{2, {{2, 0, 3}}}, Snapshot{3, {{4, 1, 0}}}};
  std::vector<Snapshot> altered = snaps;
  altered[0].triples = {{4, 0, 3}, {2, 1, 1}};
  altered[2].triples.clear();
  const std::vector<Query> qs = {Query::object({1, 1, 2, 1}), Query::object({3, 0, 4, 1})};
  Encoded e1, e2;
  const Tensor a = m.all_scores(m.states(1, e1.source(m, snaps)), qs, nullptr);
  const Tensor b = m.all_scores(m.states(1, e2.source(m, altered)), qs, nullptr);
  CHECK(vec(a) == vec(b));

  c.window = 2;
  TempModel wide(c, 5, 2, 4, 3);
  Encoded e3, e4;
  const Tensor wa = wide.all_scores(wide.states(1, e3.source(wide, snaps)), qs, nullptr);
  const Tensor wb = wide.all_scores(wide.states(1, e4.source(wide, altered)), qs, nullptr);
  CHECK(vec(wa) != vec(wb));
}

TEST_CASE("scoring paths agree") {
  const TkgDataset ds = tkg::testing::tiny_dataset();
  const TpfTable tpf = TpfTable::build(ds);
  for (DecoderKind dec : {DecoderKind::DistMult, DecoderKind::ComplEx, DecoderKind::TransE}) {
    ModelConfig c = small(Variant::TempGru);
    c.decoder = dec;
    c.gating = true;
    c.imputation = true;
    TempModel m(c, 4, 2, 3, 7);
    std::vector<Snapshot> snaps(3);
    for (const Snapshot& s : ds.split(Split::Train)) snaps[s.time] = s;
    Encoded enc;
    const EntityStates st = m.states(2, enc.source(m, snaps));
    for (auto dir : {QueryDirection::Object, QueryDirection::Subject}) {
      const std::vector<Query> qs = {dir == QueryDirection::Object ? Query::object({0, 0, 1, 2})
                                                                   : Query::subject({0, 0, 1, 2}),
                                     dir == QueryDirection::Object ? Query::object({3, 1, 0, 2})
                                                                   : Query::subject({3, 1, 0, 2})};
      const std::vector<std::vector<EntityId>> cands = {{1, 3, 2}, {0, 0, 1}};
      const Tensor all = m.all_scores(st, qs, &tpf);
      const Tensor paired = m.candidate_scores(st, qs, cands, &tpf, ScoringPath::Paired);
      for (std::size_t i = 0; i < 2; ++i) {
        for (std::size_t k = 0; k < 3; ++k) {
          CHECK(paired.at(i, k) == doctest::Approx(all.at(i, cands[i][k])).epsilon(1e-12));
        }
      }
      if (is_linear(dec)) {
        const Tensor dense = m.candidate_scores(st, qs, cands, &tpf, ScoringPath::AllEntities);
        for (std::size_t i = 0; i < 6; ++i) {
          CHECK(dense.values()[i] == doctest::Approx(paired.values()[i]).epsilon(1e-12));
        }
      }
    }
  }
}

TEST_CASE("whole-model gradients match central differences") {
  const TkgDataset ds = tkg::testing::tiny_dataset();
  const TpfTable tpf = TpfTable::build(ds);
  const auto batch = tkg::testing::fixed_batch(ds, 2, 1);
  struct Case {
    const char* name;
    ModelConfig config;
  };
  std::vector<Case> variants;
  variants.push_back({"temp-gru", small(Variant::TempGru)});
  variants.push_back({"temp-sa", small(Variant::TempSa)});
  ModelConfig full = small(Variant::TempGru);
  full.gating = full.imputation = full.bidirectional = full.positional = true;
  variants.push_back({"temp-gru+all", full});
  full.variant = Variant::TempSa;
  variants.push_back({"temp-sa+all", full});
  for (auto& v : variants) {
    TempModel m(v.config, 4, 2, 3, 5);
    tkg::testing::move_off_kinks(m.parameters(), 11);
    const auto report = tkg::testing::check_gradients(
        tkg::testing::leaves_of(m.parameters()), [&] { return tkg::testing::model_loss(m, ds, batch, &tpf); });
    INFO(v.name << " " << report.worst);
    CHECK(report.max_rel_error < 1e-5);
  }
}
