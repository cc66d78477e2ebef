#include <doctest.h>

#include <cmath>
#include <sstream>

#include "oracles.hpp"
#include "tkg/model/heterogeneity.hpp"

using namespace tkg;
using namespace tkg::model;
using tkg::tensor::Tensor;

namespace {

void set(const Tensor& t, std::vector<double> values) {
  Tensor copy = t;
  auto v = copy.mutable_values();
  REQUIRE(v.size() == values.size());
  std::copy(values.begin(), values.end(), v.begin());
}

void copy_gate(const FrequencyGate& from, const FrequencyGate& to) {
  for (auto [a, b] : {std::pair{from.w1, to.w1}, {from.b1, to.b1}, {from.w2, to.w2}, {from.b2, to.b2}}) {
    set(b, std::vector<double>(a.values().begin(), a.values().end()));
  }
}

std::vector<double> vec(const Tensor& t) { return {t.values().begin(), t.values().end()}; }

}  // namespace

TEST_CASE("TPF of a single training quadruple") {
  const std::vector<Quadruple> train = {{0, 1, 2, 5}};
  const TkgDataset ds = make_dataset(3, 2, 8, train, {}, {});
  const TpfTable tpf = TpfTable::build(ds);
  const Quadruple later{0, 1, 2, 6};
  CHECK(tpf.frequency(PatternKind::S, later) == 1);
  CHECK(tpf.frequency(PatternKind::SR, later) == 1);
  CHECK(tpf.frequency(PatternKind::SRO, later) == 1);
  const Quadruple same{0, 1, 2, 5};
  for (PatternKind k : kAllPatternKinds) CHECK(tpf.frequency(k, same) == 0);
  CHECK(tpf.object_query_features(0, 1, 6) == std::array<double, 3>{1, 1, 1});
  CHECK(tpf.subject_query_features(1, 2, 6) == std::array<double, 3>{1, 1, 1});
}

TEST_CASE("TPF table matches brute-force counting") {
  const std::vector<WindowPolicy> policies = {WindowPolicy::full_history(), WindowPolicy::trailing(2),
                                              WindowPolicy::symmetric(1)};
  for (std::uint64_t seed = 0; seed < 4; ++seed) {
    const TkgDataset ds = tkg::testing::random_dataset(5, 2, 5, seed == 0 ? 20 : 70, seed);
    for (const WindowPolicy& policy : policies) {
      const TpfTable tpf = TpfTable::build(ds, policy);
      for (EntityId s = 0; s < 5; ++s) {
        for (RelationId r = 0; r < 2; ++r) {
          for (EntityId o = 0; o < 5; ++o) {
            for (TimeStep t = 0; t < 6; ++t) {
              const Quadruple q{s, r, o, t};
              for (PatternKind k : kAllPatternKinds) {
                CHECK(tpf.frequency(k, q) == tkg::testing::oracle_tpf(ds, k, q, policy));
              }
            }
          }
        }
      }
    }
  }
}

TEST_CASE("window policy parsing") {
  CHECK(WindowPolicy::parse("full", 0).kind == WindowPolicy::Kind::FullHistory);
  CHECK(WindowPolicy::parse("trailing", 3).width == 3);
  CHECK(WindowPolicy::parse("symmetric", 2).kind == WindowPolicy::Kind::Symmetric);
  CHECK_THROWS(WindowPolicy::parse("sideways", 1));
  for (PatternKind k : kAllPatternKinds) CHECK(parse_pattern(pattern_name(k)) == k);
}

TEST_CASE("TPF export lists referenced keys") {
  const std::vector<Quadruple> train = {{0, 1, 2, 0}, {0, 1, 2, 1}};
  const TkgDataset ds = make_dataset(3, 2, 3, train, {}, {});
  const TpfTable tpf = TpfTable::build(ds);
  std::ostringstream out;
  const std::vector<Quadruple> queries = {{0, 1, 2, 2}};
  tpf.export_csv(out, queries, ds);
  const std::string csv = out.str();
  CHECK(csv.rfind("pattern_kind,key,els,time,count\n", 0) == 0);
  CHECK(csv.find("s_r_o,0:1:2,0|1|2,2,2\n") != std::string::npos);
  CHECK(csv.find("s,0,0,2,2\n") != std::string::npos);
}

TEST_CASE("imputation") {
  const std::vector<double> x_t = {0.0, 0.0}, x_prev = {1.0, 1.0}, x_next = {3.0, -1.0};
  const auto full = impute(x_t, std::span<const double>(x_prev), 4.0, 0.0, 0.0);
  CHECK(full == x_prev);
  CHECK(impute(x_t, std::nullopt, 1.0, 1.0, 0.0) == x_t);
  const auto decayed = impute(x_t, std::span<const double>(x_prev), 1.0, 1.0, 0.0);
  CHECK(decayed[0] == doctest::Approx(0.3678794412));
  CHECK(decayed[1] == doctest::Approx(0.3678794412));

  const auto avg = impute_bidirectional(x_t, std::span<const double>(x_prev), std::span<const double>(x_next), 1.0,
                                        1.0, 0.0, 0.0);
  CHECK(avg[0] == doctest::Approx(2.0));
  CHECK(avg[1] == doctest::Approx(0.0));
  CHECK(impute_bidirectional(x_t, std::nullopt, std::nullopt, std::nullopt, std::nullopt, 1.0, 0.0) == x_t);

  const std::vector<double> xt2 = {0.5, -2.0};
  const auto c = bidirectional_coefficients(1.0, 2.0, 1.0, 0.0);
  CHECK(c.previous + c.next + c.current == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(c.previous == doctest::Approx(std::exp(-1.0) / 2.0));
  CHECK(c.next == doctest::Approx(std::exp(-2.0) / 2.0));
  const auto v = impute_bidirectional(xt2, std::span<const double>(x_prev), std::span<const double>(x_next), 1.0, 2.0,
                                      1.0, 0.0);
  for (std::size_t j = 0; j < 2; ++j) {
    CHECK(v[j] == doctest::Approx(c.previous * x_prev[j] + c.next * x_next[j] + c.current * xt2[j]));
  }
}

TEST_CASE("Imputer fills only inactive entities") {
  tensor::ParameterSet params;
  Imputer imp(params);
  set(imp.lambda(), {1.0});
  set(imp.bias(), {0.0});
  EncoderWindow w;
  w.frames.push_back({-2, Tensor::from(3, 1, {10.0, 20.0, 30.0}), {1, 1, 0}});
  w.frames.push_back({-1, Tensor::from(3, 1, {11.0, 21.0, 31.0}), {0, 1, 0}});
  w.frames.push_back({0, Tensor::from(3, 1, {1.0, 2.0, 3.0}), {0, 1, 0}});
  w.frames.push_back({1, Tensor::from(3, 1, {5.0, 6.0, 7.0}), {1, 0, 0}});
  SUBCASE("past only") {
    const auto x = vec(imp.apply(w, false));
    const double g2 = std::exp(-2.0);
    CHECK(x[0] == doctest::Approx(g2 * 10.0 + (1.0 - g2) * 1.0));
    CHECK(x[1] == 2.0);
    CHECK(x[2] == 3.0);
  }
  SUBCASE("both sides") {
    const auto x = vec(imp.apply(w, true));
    const double gp = std::exp(-2.0) / 2.0, gn = std::exp(-1.0) / 2.0;
    CHECK(x[0] == doctest::Approx(gp * 10.0 + gn * 5.0 + (1.0 - gp - gn) * 1.0));
    CHECK(x[1] == 2.0);
    CHECK(x[2] == 3.0);
  }
}

TEST_CASE("gating") {
  tensor::ParameterSet params;
  Rng rng(2);
  GateSet gates = GateSet::create(params, rng, "gate", 2);
  const Tensor x_s = Tensor::from(1, 2, {1.0, 2.0}), z_s = Tensor::from(1, 2, {-1.0, 0.5});
  const Tensor x_all = Tensor::from(3, 2, {1, 2, 3, 4, 5, 6}), z_all = Tensor::from(3, 2, {0, 1, 0, 1, 0, 1});
  const std::array<double, 3> f = {2.0, 3.0, 1.0};

  SUBCASE("alpha pinned to 0 and 1") {
    set(gates.os.w2, {0.0, 0.0});
    set(gates.os.b2, {-1e3});
    set(gates.oo.w2, {0.0, 0.0});
    set(gates.oo.b2, {1e3});
    const GatedEmbeddings g = gate_object_query(x_s, z_s, x_all, z_all, f, gates);
    CHECK(g.alpha_anchor == 0.0);
    CHECK(g.alpha_candidates == 1.0);
    CHECK(vec(g.anchor) == vec(z_s));
    CHECK(vec(g.candidates) == vec(x_all));
  }

  SUBCASE("hand-evaluated perceptron") {
    set(gates.os.w1, {0.5, -0.3, 0.2, 0.4, -0.1, 0.6});  // 3 x 2
    set(gates.os.b1, {0.1, -0.2});
    set(gates.os.w2, {0.7, -0.5});  // 2 x 1
    set(gates.os.b2, {0.05});
    const double l[3] = {std::log1p(2.0), std::log1p(3.0), std::log1p(1.0)};
    const double h0 = std::max(0.0, 0.5 * l[0] + 0.2 * l[1] - 0.1 * l[2] + 0.1);
    const double h1 = std::max(0.0, -0.3 * l[0] + 0.4 * l[1] + 0.6 * l[2] - 0.2);
    const double alpha = 1.0 / (1.0 + std::exp(-(0.7 * h0 - 0.5 * h1 + 0.05)));
    CHECK(gates.os.evaluate(f) == doctest::Approx(alpha).epsilon(1e-14));
    const GatedEmbeddings g = gate_object_query(x_s, z_s, x_all, z_all, f, gates);
    CHECK(g.alpha_anchor == doctest::Approx(alpha).epsilon(1e-14));
    for (std::size_t j = 0; j < 2; ++j) {
      CHECK(g.anchor.at(0, j) == doctest::Approx(alpha * x_s.at(0, j) + (1 - alpha) * z_s.at(0, j)));
    }
  }

  SUBCASE("zero weights give an even mix") {
    for (const FrequencyGate* gate : {&gates.ss, &gates.so}) {
      set(gate->w1, std::vector<double>(6, 0.0));
      set(gate->b1, {0.0, 0.0});
      set(gate->w2, {0.0, 0.0});
      set(gate->b2, {0.0});
    }
    const GatedEmbeddings g = gate_subject_query(x_s, z_s, x_all, z_all, {0, 0, 0}, gates);
    CHECK(g.alpha_anchor == 0.5);
    CHECK(g.alpha_candidates == 0.5);
    for (std::size_t i = 0; i < 6; ++i) {
      CHECK(g.candidates.values()[i] == doctest::Approx((x_all.values()[i] + z_all.values()[i]) / 2));
    }
  }

  SUBCASE("subject gating mirrors object gating") {
    tensor::ParameterSet other_params;
    Rng other_rng(99);
    GateSet mirrored = GateSet::create(other_params, other_rng, "gate", 2);
    copy_gate(gates.os, mirrored.so);
    copy_gate(gates.oo, mirrored.ss);
    const GatedEmbeddings a = gate_object_query(x_s, z_s, x_all, z_all, f, gates);
    const GatedEmbeddings b = gate_subject_query(x_s, z_s, x_all, z_all, f, mirrored);
    CHECK(vec(a.anchor) == vec(b.anchor));
    CHECK(vec(a.candidates) == vec(b.candidates));
  }
}
