#include <doctest.h>

#include <cmath>

#include "tkg/model/temporal_encoder.hpp"

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

double sig(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// Plain-double GRU cell with the same layout as GruCell.
std::vector<double> gru_by_hand(const GruCell& c, const std::vector<double>& x, const std::vector<double>& h) {
  const std::size_t d = x.size();
  auto lin = [&](const Tensor& w, const Tensor& b, const std::vector<double>& v, std::size_t col) {
    double acc = b.at(0, col);
    for (std::size_t i = 0; i < d; ++i) acc += v[i] * w.at(i, col);
    return acc;
  };
  std::vector<double> out(d);
  for (std::size_t j = 0; j < d; ++j) {
    const double r = sig(lin(c.w_input, c.b_input, x, j) + lin(c.w_hidden, c.b_hidden, h, j));
    const double u = sig(lin(c.w_input, c.b_input, x, d + j) + lin(c.w_hidden, c.b_hidden, h, d + j));
    const double n = std::tanh(lin(c.w_input, c.b_input, x, 2 * d + j) + r * lin(c.w_hidden, c.b_hidden, h, 2 * d + j));
    out[j] = (1.0 - u) * n + u * h[j];
  }
  return out;
}

WindowFrame frame(int offset, std::vector<double> x, std::vector<std::uint8_t> active) {
  const std::size_t rows = active.size();
  const std::size_t cols = x.size() / rows;
  Tensor t = Tensor::from(rows, cols, std::move(x));
  return {offset, std::move(t), std::move(active)};
}

}  // namespace

TEST_CASE("decay weight") {
  CHECK(decay_weight(0.0, 0.0, 0.0) == 1.0);
  CHECK(decay_weight(7.0, 0.0, 0.0) == 1.0);
  CHECK(decay_weight(2.0, 1.0, 0.0) == doctest::Approx(0.1353352832));
  CHECK(decay_weight(3.0, 1.0, -5.0) == 1.0);
}

TEST_CASE("GRU encoder") {
  tensor::ParameterSet params;
  Rng rng(3);
  GruEncoder enc(2, false, params, rng);
  set(enc.forward_cell().b_input, {0.1, -0.2, 0.05, 0.3, 0.0, -0.1});
  set(enc.lambda(), {0.0});
  set(enc.bias(), {0.0});
  const std::vector<double> x_prev = {0.4, -0.7}, x_now = {-0.3, 0.9};
  // Entity 0: active at -1 and 0. Entity 1: never active. Entity 2: only at 0.
  EncoderWindow w;
  w.frames.push_back(frame(-2, {0, 0, 0, 0, 0, 0}, {0, 0, 0}));
  w.frames.push_back(frame(-1, {x_prev[0], x_prev[1], 0, 0, 0, 0}, {1, 0, 0}));
  w.frames.push_back(frame(0, {x_now[0], x_now[1], x_now[0], x_now[1], x_now[0], x_now[1]}, {1, 0, 1}));
  const Tensor z = enc.encode(w, w.current().x);

  const auto zero_state = gru_by_hand(enc.forward_cell(), x_now, {0.0, 0.0});
  const auto chained = gru_by_hand(enc.forward_cell(), x_now, gru_by_hand(enc.forward_cell(), x_prev, {0.0, 0.0}));
  for (std::size_t j = 0; j < 2; ++j) {
    CHECK(z.at(0, j) == doctest::Approx(chained[j]).epsilon(1e-12));
    CHECK(z.at(1, j) == doctest::Approx(zero_state[j]).epsilon(1e-12));
    CHECK(z.at(2, j) == doctest::Approx(zero_state[j]).epsilon(1e-12));
  }

  SUBCASE("decay scales the carried state by the gap") {
    set(enc.lambda(), {0.5});
    const Tensor zd = enc.encode(w, w.current().x);
    auto h = gru_by_hand(enc.forward_cell(), x_prev, {0.0, 0.0});
    const double g = std::exp(-0.5);
    const auto expected = gru_by_hand(enc.forward_cell(), x_now, {g * h[0], g * h[1]});
    for (std::size_t j = 0; j < 2; ++j) CHECK(zd.at(0, j) == doctest::Approx(expected[j]).epsilon(1e-12));
  }
}

TEST_CASE("single unmasked step attends fully") {
  tensor::ParameterSet params;
  Rng rng(5);
  SelfAttentionEncoder sa(2, 1, params, rng);
  EncoderWindow w;
  w.frames.push_back(frame(-1, {1.0, 2.0}, {0}));
  w.frames.push_back(frame(0, {0.5, -0.5}, {1}));
  const AttentionOutput out = sa.attend(w, w.current().x);
  CHECK(out.beta.at(0, 0) == 0.0);
  CHECK(out.beta.at(0, 1) == 1.0);
  const double v0 = 0.5 * sa.w_value().at(0, 0) - 0.5 * sa.w_value().at(1, 0);
  CHECK(out.z.at(0, 0) == doctest::Approx(v0));
}

TEST_CASE("identical steps with no decay split attention evenly") {
  tensor::ParameterSet params;
  Rng rng(6);
  SelfAttentionEncoder sa(2, 1, params, rng);
  set(sa.lambda(), {0.0});
  EncoderWindow w;
  w.frames.push_back(frame(-1, {0.3, 0.1}, {1}));
  w.frames.push_back(frame(0, {0.3, 0.1}, {1}));
  const AttentionOutput out = sa.attend(w, w.current().x);
  CHECK(out.beta.at(0, 0) == doctest::Approx(0.5));
  CHECK(out.beta.at(0, 1) == doctest::Approx(0.5));
}

TEST_CASE("three-step attention, hand-evaluated") {
  tensor::ParameterSet params;
  Rng rng(7);
  SelfAttentionEncoder sa(2, 1, params, rng);
  set(sa.w_query(), {1.0, 0.0, 0.0, 1.0});
  set(sa.w_key(), {0.5, 0.0, 0.0, 2.0});
  set(sa.w_value(), {1.0, 1.0, 0.0, -1.0});
  set(sa.lambda(), {1.0});
  set(sa.bias(), {0.0});
  EncoderWindow w;
  w.frames.push_back(frame(-2, {1.0, 0.0}, {1}));
  w.frames.push_back(frame(-1, {0.0, 1.0}, {1}));
  w.frames.push_back(frame(0, {1.0, 1.0}, {1}));
  const AttentionOutput out = sa.attend(w, w.current().x);
  // q = (1, 1); keys (0.5, 0), (0, 2), (0.5, 2); scale 1/sqrt(2); decay 2, 1, 0.
  const double s = 1.0 / std::sqrt(2.0);
  const double e[3] = {0.5 * s - 2.0, 2.0 * s - 1.0, 2.5 * s};
  const double m = std::max({e[0], e[1], e[2]});
  double total = 0.0, beta[3];
  for (int k = 0; k < 3; ++k) total += beta[k] = std::exp(e[k] - m);
  for (double& b : beta) b /= total;
  // values: (1, 1), (0, -1), (1, 0)
  const double z0 = beta[0] * 1.0 + beta[2] * 1.0;
  const double z1 = beta[0] * 1.0 - beta[1];
  for (int k = 0; k < 3; ++k) CHECK(out.beta.at(0, static_cast<std::size_t>(k)) == doctest::Approx(beta[k]).epsilon(1e-12));
  CHECK(out.z.at(0, 0) == doctest::Approx(z0).epsilon(1e-12));
  CHECK(out.z.at(0, 1) == doctest::Approx(z1).epsilon(1e-12));
}

TEST_CASE("heads must divide the dimension") {
  tensor::ParameterSet params;
  Rng rng(8);
  CHECK_THROWS(SelfAttentionEncoder(6, 4, params, rng));
}

TEST_CASE("positional embeddings") {
  const Tensor p = Tensor::from(3, 2, {1, 2, 3, 4, 5, 6});
  const Tensor zeros = Tensor::zeros(4, 2);
  const Tensor out = add_positional(zeros, p, 1);
  for (std::size_t i = 0; i < 4; ++i) {
    CHECK(out.at(i, 0) == 3.0);
    CHECK(out.at(i, 1) == 4.0);
  }
  const Tensor z = Tensor::from(2, 2, {0.1, -0.7, 2.5, 1e-3});
  const Tensor same = add_positional(z, Tensor::zeros(3, 2), 2);
  CHECK(std::vector<double>(same.values().begin(), same.values().end()) ==
        std::vector<double>(z.values().begin(), z.values().end()));
  const Tensor back = tensor::sub(add_positional(z, p, 2), add_positional(Tensor::zeros(2, 2), p, 2));
  for (std::size_t i = 0; i < 4; ++i) CHECK(back.values()[i] == doctest::Approx(z.values()[i]).epsilon(1e-15));
}
