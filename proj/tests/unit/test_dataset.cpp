#include <doctest.h>

#include <set>

#include "oracles.hpp"
#include "temp_dir.hpp"
#include "tkg/core/dataset.hpp"
#include "tkg/core/true_index.hpp"
#include "tkg/error.hpp"

using namespace tkg;
using tkg::testing::TempDir;

TEST_CASE("loader reads a minimal id-format directory") {
  TempDir dir;
  dir.write("train.txt", "0 0 1 0\n1 0 0 1\n");
  const TkgDataset ds = load_dataset(dir.path());
  CHECK(ds.entity_count == 2);
  CHECK(ds.relation_count == 1);
  CHECK(ds.step_count == 2);
  CHECK(ds.size(Split::Train) == 2);
  CHECK(ds.size(Split::Valid) == 0);
}

TEST_CASE("loader rejects a three-column line with file and line number") {
  TempDir dir;
  dir.write("train.txt", "0 0 1 0\n0 0 1\n");
  try {
    load_dataset(dir.path());
    FAIL("expected DataError");
  } catch (const DataError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("train.txt:2") != std::string::npos);
  }
}

TEST_CASE("loader maps date times and names to dense ids") {
  TempDir dir;
  dir.write("train.txt", "A\trel\tB\t2014-01-01\nB\trel\tC\t2014-01-03\n");
  dir.write("test.txt", "A\trel\tC\t2014-01-02\n");
  const TkgDataset ds = load_dataset(dir.path());
  CHECK(ds.entity_count == 3);
  CHECK(ds.relation_count == 1);
  CHECK(ds.step_count == 3);
  REQUIRE(ds.size(Split::Test) == 1);
  CHECK(ds.quadruples(Split::Test)[0].time == 1);
  CHECK(ds.entity_names.size() == 3);
}

TEST_CASE("loader honours a declared stat.txt") {
  TempDir dir;
  dir.write("train.txt", "0 0 1 0\n");
  dir.write("stat.txt", "5 3 4\n");
  const TkgDataset ds = load_dataset(dir.path());
  CHECK(ds.entity_count == 5);
  CHECK(ds.relation_count == 3);
  CHECK(ds.step_count == 4);
  dir.write("train.txt", "0 0 7 0\n");
  CHECK_THROWS_AS(load_dataset(dir.path()), DataError);
}

TEST_CASE("loader divides integer timestamps by their common step") {
  TempDir dir;
  dir.write("train.txt", "0 0 1 0\n1 0 0 24\n0 0 1 72\n");
  const TkgDataset ds = load_dataset(dir.path());
  CHECK(ds.step_count == 4);
}

TEST_CASE("write_dataset round-trips") {
  TempDir dir;
  const TkgDataset ds = tkg::testing::random_dataset(12, 3, 6, 80, 5);
  write_dataset(ds, dir.path());
  const TkgDataset back = load_dataset(dir.path());
  CHECK(back.entity_count == ds.entity_count);
  CHECK(back.relation_count == ds.relation_count);
  CHECK(back.step_count == ds.step_count);
  for (Split s : kAllSplits) CHECK(back.quadruples(s) == ds.quadruples(s));
}

TEST_CASE("active_entities") {
  CHECK(active_entities(Snapshot{}).empty());
  CHECK(active_entities(Snapshot{0, {{0, 0, 1}}}) == std::vector<EntityId>{0, 1});
  CHECK(active_entities(Snapshot{0, {{0, 0, 1}, {1, 2, 3}, {3, 1, 3}}}) == std::vector<EntityId>{0, 1, 3});
  const auto flags = activity_flags(Snapshot{0, {{0, 0, 2}}}, 4);
  CHECK(flags == std::vector<std::uint8_t>{1, 0, 1, 0});
}

TEST_CASE("true index on a single quadruple") {
  const std::vector<Quadruple> train = {{0, 0, 1, 0}};
  const TkgDataset ds = make_dataset(2, 1, 1, train, {}, {});
  const auto index = TrueTripleIndex::build(ds, {Split::Train});
  const auto objs = index.objects(0, 0, 0);
  const auto subs = index.subjects(0, 1, 0);
  CHECK(std::vector<EntityId>(objs.begin(), objs.end()) == std::vector<EntityId>{1});
  CHECK(std::vector<EntityId>(subs.begin(), subs.end()) == std::vector<EntityId>{0});
  CHECK(index.contains({0, 0, 1, 0}));
  CHECK_FALSE(index.contains({1, 0, 0, 0}));
}

TEST_CASE("true index matches a linear scan on every key") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const TkgDataset ds = tkg::testing::random_dataset(8, 3, 4, seed == 0 ? 10 : 60, seed);
    for (IndexTimeMode mode : {IndexTimeMode::PerStep, IndexTimeMode::Static}) {
      const auto index = TrueTripleIndex::build(ds, {Split::Train, Split::Valid, Split::Test}, mode);
      const bool any_time = mode == IndexTimeMode::Static;
      for (EntityId e = 0; e < 8; ++e) {
        for (RelationId r = 0; r < 3; ++r) {
          for (TimeStep t = 0; t < 4; ++t) {
            const auto objs = index.objects(e, r, t);
            const auto subs = index.subjects(r, e, t);
            std::vector<EntityId> o(objs.begin(), objs.end()), s(subs.begin(), subs.end());
            std::sort(o.begin(), o.end());
            std::sort(s.begin(), s.end());
            const auto splits = {Split::Train, Split::Valid, Split::Test};
            CHECK(o == tkg::testing::scan_objects(ds, splits, e, r, t, any_time));
            CHECK(s == tkg::testing::scan_subjects(ds, splits, r, e, t, any_time));
          }
        }
      }
    }
  }
}

TEST_CASE("synthetic generator is deterministic") {
  SyntheticParams spec;
  spec.periodicity = 0.5;
  spec.period = 2;
  const TkgDataset a = generate_synthetic(spec, 7);
  const TkgDataset b = generate_synthetic(spec, 7);
  for (Split s : kAllSplits) CHECK(a.quadruples(s) == b.quadruples(s));
  TempDir da, db;
  write_dataset(a, da.path());
  write_dataset(b, db.path());
  CHECK(tkg::testing::slurp(da / "train.txt") == tkg::testing::slurp(db / "train.txt"));
  const TkgDataset c = generate_synthetic(spec, 8);
  CHECK(c.quadruples(Split::Train) != a.quadruples(Split::Train));
}

TEST_CASE("fully periodic data repeats every evaluation fact in training history") {
  SyntheticParams spec;
  spec.entities = 30;
  spec.steps = 12;
  spec.facts_per_step = 20;
  spec.periodicity = 1.0;
  spec.period = 3;
  spec.test_fraction = 0.2;
  const TkgDataset ds = generate_synthetic(spec, 11);
  const auto train = ds.quadruples(Split::Train);
  const std::set<Quadruple> train_set(train.begin(), train.end());
  REQUIRE(ds.size(Split::Test) > 0);
  for (Split s : {Split::Valid, Split::Test}) {
    for (const Quadruple& q : ds.quadruples(s)) {
      REQUIRE(q.time >= 3);
      CHECK(train_set.count({q.subject, q.relation, q.object, q.time - 3}) == 1);
    }
  }
}

TEST_CASE("aperiodic data rarely repeats test facts") {
  SyntheticParams spec;
  spec.entities = 200;
  spec.relations = 10;
  spec.steps = 20;
  spec.facts_per_step = 50;
  spec.test_fraction = 0.2;
  const TkgDataset ds = generate_synthetic(spec, 3);
  std::set<Triple> train;
  for (const Quadruple& q : ds.quadruples(Split::Train)) train.insert(q.triple());
  std::size_t hits = 0;
  const auto test = ds.quadruples(Split::Test);
  for (const Quadruple& q : test) hits += train.count(q.triple());
  // Each test triple collides with a training triple with probability at most
  // |train| / (E * R * (E - 1)); allow ten times that density.
  const double density = static_cast<double>(train.size()) / (200.0 * 10.0 * 199.0);
  CHECK(static_cast<double>(hits) / static_cast<double>(test.size()) <= 10.0 * density + 0.01);
}
