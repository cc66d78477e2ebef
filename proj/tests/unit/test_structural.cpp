#include <doctest.h>

#include <cmath>

#include "tkg/model/structural_encoder.hpp"

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

// Row vector times a d x d matrix.
std::vector<double> times(const std::vector<double>& x, const Tensor& w) {
  std::vector<double> out(w.cols(), 0.0);
  for (std::size_t i = 0; i < w.rows(); ++i) {
    for (std::size_t j = 0; j < w.cols(); ++j) out[j] += x[i] * w.at(i, j);
  }
  return out;
}

}  // namespace

TEST_CASE("isolated entity keeps only its self-loop") {
  tensor::ParameterSet params;
  Rng rng(1);
  RgcnEncoder enc({3, 1, 2, 1}, params, rng);
  const Tensor x = enc.encode(Snapshot{0, {{0, 0, 1}}});
  const std::vector<double> h2 = {enc.base().at(2, 0), enc.base().at(2, 1)};
  const auto expected = times(h2, enc.self_weight(0));
  CHECK(x.at(2, 0) == doctest::Approx(expected[0]));
  CHECK(x.at(2, 1) == doctest::Approx(expected[1]));
}

TEST_CASE("one edge, one layer, hand-evaluated") {
  tensor::ParameterSet params;
  Rng rng(2);
  RgcnEncoder enc({2, 1, 2, 1}, params, rng);
  set(enc.base(), {1.0, 0.5, -1.0, 2.0});
  set(enc.self_weight(0), {1.0, 0.0, 0.0, 1.0});
  set(enc.relation_weight(0, 0), {0.0, 1.0, 1.0, 0.0});    // subject <- object
  set(enc.relation_weight(0, 1), {2.0, 0.0, 0.0, -1.0});   // object <- subject
  const Tensor x = enc.encode(Snapshot{0, {{0, 0, 1}}});
  // h0 = h0 Ws + h1 Wr = (1, 0.5) + (2, -1) = (3, -0.5)
  // h1 = h1 Ws + h0 Wr' = (-1, 2) + (2, -0.5) = (1, 1.5)
  CHECK(x.at(0, 0) == doctest::Approx(3.0));
  CHECK(x.at(0, 1) == doctest::Approx(-0.5));
  CHECK(x.at(1, 0) == doctest::Approx(1.0));
  CHECK(x.at(1, 1) == doctest::Approx(1.5));
}

TEST_CASE("hidden layers apply ReLU") {
  tensor::ParameterSet params;
  Rng rng(3);
  RgcnEncoder enc({1, 1, 2, 2}, params, rng);
  set(enc.base(), {1.0, -1.0});
  set(enc.self_weight(0), {1.0, 0.0, 0.0, 1.0});
  set(enc.self_weight(1), {1.0, 1.0, 1.0, 1.0});
  const Tensor x = enc.encode(Snapshot{});
  // relu((1, -1)) = (1, 0); times all-ones = (1, 1)
  CHECK(x.at(0, 0) == doctest::Approx(1.0));
  CHECK(x.at(0, 1) == doctest::Approx(1.0));
}

TEST_CASE("messages are normalised by per-relation in-degree") {
  tensor::ParameterSet params;
  Rng rng(4);
  RgcnEncoder enc({4, 2, 3, 1}, params, rng);
  // Entities 1..3 share one embedding v.
  std::vector<double> base(12);
  for (std::size_t j = 0; j < 3; ++j) base[j] = 0.3 * static_cast<double>(j) - 0.2;
  for (std::size_t e = 1; e < 4; ++e) {
    for (std::size_t j = 0; j < 3; ++j) base[e * 3 + j] = 0.7 - 0.4 * static_cast<double>(j);
  }
  set(enc.base(), base);
  const Tensor x = enc.encode(Snapshot{0, {{0, 1, 1}, {0, 1, 2}, {0, 1, 3}}});
  const std::vector<double> h0(base.begin(), base.begin() + 3), v(base.begin() + 3, base.begin() + 6);
  const auto self = times(h0, enc.self_weight(0));
  const auto rel = times(v, enc.relation_weight(0, 1));
  for (std::size_t j = 0; j < 3; ++j) CHECK(x.at(0, j) - self[j] == doctest::Approx(rel[j]).epsilon(1e-12));
}

TEST_CASE("edge dropout") {
  Snapshot snap{3, {}};
  for (EntityId i = 0; i < 100; ++i) {
    for (EntityId j = 0; j < 100; ++j) snap.triples.push_back({i, 0, j});
  }
  CHECK(drop_edges(snap, 0.0, 1).triples == snap.triples);
  CHECK(drop_edges(snap, 1.0, 1).triples.empty());
  const double kept = static_cast<double>(drop_edges(snap, 0.5, 1).size());
  CHECK(std::abs(kept - 5000.0) <= 3.0 * 50.0);
  CHECK(drop_edges(snap, 0.5, 9).triples == drop_edges(snap, 0.5, 9).triples);

  const std::vector<Snapshot> window = {Snapshot{0, {{0, 0, 1}, {1, 0, 2}}}, snap};
  const auto same = temporal_edge_dropout(window, 1, 0.0, 0.0, 5);
  CHECK(same[0].triples == window[0].triples);
  CHECK(same[1].triples == window[1].triples);
  const auto gone = temporal_edge_dropout(window, 1, 1.0, 1.0, 5);
  CHECK(gone[0].empty());
  CHECK(gone[1].empty());
  const auto mixed = temporal_edge_dropout(window, 1, 1.0, 0.0, 5);
  CHECK(mixed[0].triples == window[0].triples);
  CHECK(mixed[1].empty());
  // Independent of the window's order.
  const std::vector<Snapshot> reversed = {snap, window[0]};
  const auto a = temporal_edge_dropout(window, 1, 0.5, 0.2, 5);
  const auto b = temporal_edge_dropout(reversed, 0, 0.5, 0.2, 5);
  CHECK(a[1].triples == b[0].triples);
  CHECK(a[0].triples == b[1].triples);
}
