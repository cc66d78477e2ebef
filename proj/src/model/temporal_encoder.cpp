#include "tkg/model/temporal_encoder.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <optional>

#include "tkg/error.hpp"
#include "tkg/model/init.hpp"

namespace tkg::model {

using tensor::Tensor;

double decay_weight(double delta_t, double lambda, double b) {
  return std::exp(-std::max(0.0, lambda * delta_t + b));
}

Tensor decay_column(std::span<const double> deltas, const Tensor& lambda, const Tensor& b) {
  const Tensor d = Tensor::from(deltas.size(), 1, std::vector<double>(deltas.begin(), deltas.end()));
  const Tensor linear = tensor::add_row(tensor::mul_scalar(lambda, d), b);
  return tensor::exp(tensor::scale(tensor::max_const(linear, 0.0), -1.0));
}

const WindowFrame& EncoderWindow::current() const {
  for (const WindowFrame& f : frames) {
    if (f.offset == 0) return f;
  }
  throw Error("encoder window has no frame at offset 0");
}

// ---------------------------------------------------------------------------
// GRU

GruCell GruCell::create(std::size_t dim, tensor::ParameterSet& params, Rng& rng, const std::string& prefix) {
  GruCell c;
  c.w_input = params.add(prefix + ".w_input", xavier_parameter(dim, 3 * dim, rng));
  c.w_hidden = params.add(prefix + ".w_hidden", xavier_parameter(dim, 3 * dim, rng));
  c.b_input = params.add(prefix + ".b_input", constant_parameter(1, 3 * dim, 0.0));
  c.b_hidden = params.add(prefix + ".b_hidden", constant_parameter(1, 3 * dim, 0.0));
  return c;
}

Tensor GruCell::step(const Tensor& x, const Tensor& h) const {
  const std::size_t d = dim();
  const Tensor gi = tensor::add_row(tensor::matmul(x, w_input), b_input);
  const Tensor gh = tensor::add_row(tensor::matmul(h, w_hidden), b_hidden);
  const Tensor r = tensor::sigmoid(tensor::add(tensor::slice_cols(gi, 0, d), tensor::slice_cols(gh, 0, d)));
  const Tensor u = tensor::sigmoid(tensor::add(tensor::slice_cols(gi, d, 2 * d), tensor::slice_cols(gh, d, 2 * d)));
  const Tensor n =
      tensor::tanh(tensor::add(tensor::slice_cols(gi, 2 * d, 3 * d), tensor::mul(r, tensor::slice_cols(gh, 2 * d, 3 * d))));
  // (1 - u) * n + u * h = n + u * (h - n)
  return tensor::add(n, tensor::mul(u, tensor::sub(h, n)));
}

GruEncoder::GruEncoder(std::size_t dim, bool bidirectional, tensor::ParameterSet& params, Rng& rng,
                       const std::string& prefix)
    : bidirectional_(bidirectional) {
  forward_ = GruCell::create(dim, params, rng, prefix + ".fwd");
  if (bidirectional) backward_ = GruCell::create(dim, params, rng, prefix + ".bwd");
  lambda_ = params.add(prefix + ".decay.lambda", constant_parameter(1, 1, 0.1));
  bias_ = params.add(prefix + ".decay.bias", constant_parameter(1, 1, 0.0));
}

Tensor GruEncoder::run(const EncoderWindow& window, const Tensor& x_query, const GruCell& cell, bool future) const {
  const std::size_t E = window.entity_count();
  const std::size_t d = cell.dim();
  std::vector<const WindowFrame*> order;
  for (const WindowFrame& f : window.frames) {
    if (future ? f.offset > 0 : f.offset < 0) order.push_back(&f);
  }
  if (future) std::reverse(order.begin(), order.end());

  Tensor state = Tensor::zeros(E, d);
  std::vector<std::optional<int>> last(E);
  bool any_history = false;
  for (const WindowFrame* f : order) {
    std::vector<std::uint32_t> active;
    for (std::size_t e = 0; e < E; ++e) {
      if (f->active[e]) active.push_back(static_cast<std::uint32_t>(e));
    }
    if (active.empty()) continue;
    std::vector<double> gaps(active.size(), 0.0);
    for (std::size_t k = 0; k < active.size(); ++k) {
      if (last[active[k]]) gaps[k] = std::abs(f->offset - *last[active[k]]);
    }
    const Tensor previous = tensor::gather_rows(state, active);
    const Tensor carried = tensor::scale_rows(previous, decay_column(gaps, lambda_, bias_));
    const Tensor next = cell.step(tensor::gather_rows(f->x, active), carried);
    state = tensor::add(state, tensor::scatter_add_rows(tensor::sub(next, previous), active, E));
    for (auto e : active) last[e] = f->offset;
    any_history = true;
  }

  if (!any_history) return cell.step(x_query, state);
  std::vector<double> gaps(E, 0.0);
  for (std::size_t e = 0; e < E; ++e) {
    if (last[e]) gaps[e] = std::abs(*last[e]);
  }
  return cell.step(x_query, tensor::scale_rows(state, decay_column(gaps, lambda_, bias_)));
}

Tensor GruEncoder::encode(const EncoderWindow& window, const Tensor& x_query) const {
  Tensor z = run(window, x_query, forward_, false);
  if (bidirectional_) z = tensor::add(z, run(window, x_query, backward_, true));
  return z;
}

// ---------------------------------------------------------------------------
// Self-attention

SelfAttentionEncoder::SelfAttentionEncoder(std::size_t dim, std::size_t heads, tensor::ParameterSet& params, Rng& rng,
                                           const std::string& prefix)
    : heads_(heads) {
  if (heads == 0 || dim % heads != 0) {
    throw ConfigError("attention: dimension " + std::to_string(dim) + " is not divisible by " +
                      std::to_string(heads) + " heads");
  }
  w_query_ = params.add(prefix + ".w_query", xavier_parameter(dim, dim, rng));
  w_key_ = params.add(prefix + ".w_key", xavier_parameter(dim, dim, rng));
  w_value_ = params.add(prefix + ".w_value", xavier_parameter(dim, dim, rng));
  lambda_ = params.add(prefix + ".decay.lambda", constant_parameter(1, 1, 0.1));
  bias_ = params.add(prefix + ".decay.bias", constant_parameter(1, 1, 0.0));
}

AttentionOutput SelfAttentionEncoder::attend(const EncoderWindow& window, const Tensor& x_query) const {
  const std::size_t E = window.entity_count();
  const std::size_t F = window.frames.size();
  const std::size_t d = w_query_.rows();
  const std::size_t dh = d / heads_;

  std::size_t current = F;
  std::vector<Tensor> keys, values;
  std::vector<double> distance(F);
  for (std::size_t k = 0; k < F; ++k) {
    const WindowFrame& f = window.frames[k];
    if (f.offset == 0) current = k;
    const Tensor& x = f.offset == 0 ? x_query : f.x;
    keys.push_back(tensor::matmul(x, w_key_));
    values.push_back(tensor::matmul(x, w_value_));
    distance[k] = std::abs(f.offset);
  }
  if (current == F) throw Error("encoder window has no frame at offset 0");

  std::vector<std::uint8_t> keep(E * F, 0);
  for (std::size_t e = 0; e < E; ++e) {
    bool any = false;
    for (std::size_t k = 0; k < F; ++k) {
      keep[e * F + k] = window.frames[k].active[e];
      any = any || keep[e * F + k];
    }
    if (!any) keep[e * F + current] = 1;
  }

  const Tensor decay = tensor::relu(tensor::add(tensor::mul_scalar(lambda_, Tensor::from(1, F, distance)),
                                                tensor::mul_scalar(bias_, Tensor::filled(1, F, 1.0))));
  const Tensor penalty = tensor::scale(decay, -1.0);
  const Tensor queries = tensor::matmul(x_query, w_query_);
  const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(dh));

  AttentionOutput out;
  std::vector<Tensor> head_outputs;
  std::vector<double> mean_beta(E * F, 0.0);
  for (std::size_t h = 0; h < heads_; ++h) {
    const std::size_t lo = h * dh, hi = lo + dh;
    const Tensor q = tensor::slice_cols(queries, lo, hi);
    std::vector<Tensor> logits;
    for (std::size_t k = 0; k < F; ++k) {
      logits.push_back(tensor::scale(tensor::sum_cols(tensor::mul(q, tensor::slice_cols(keys[k], lo, hi))), inv_sqrt));
    }
    const Tensor e = tensor::add_row(F == 1 ? logits[0] : tensor::concat_cols(logits), penalty);
    const Tensor beta = tensor::masked_softmax(e, keep);
    Tensor acc;
    for (std::size_t k = 0; k < F; ++k) {
      const Tensor term = tensor::scale_rows(tensor::slice_cols(values[k], lo, hi), tensor::slice_cols(beta, k, k + 1));
      acc = acc.defined() ? tensor::add(acc, term) : term;
    }
    head_outputs.push_back(acc);
    const auto bv = beta.values();
    for (std::size_t i = 0; i < bv.size(); ++i) mean_beta[i] += bv[i] / static_cast<double>(heads_);
    out.head_beta.push_back(beta.detached());
  }
  out.z = heads_ == 1 ? head_outputs[0] : tensor::concat_cols(head_outputs);
  out.beta = Tensor::from(E, F, std::move(mean_beta));
  return out;
}

Tensor add_positional(const Tensor& z, const Tensor& positions, TimeStep t) {
  if (t >= positions.rows()) {
    throw ShapeError("positional embedding requested for step " + std::to_string(t) + " of " +
                     std::to_string(positions.rows()));
  }
  const std::uint32_t row = t;
  return tensor::add_row(z, tensor::gather_rows(positions, std::span<const std::uint32_t>(&row, 1)));
}

}  // namespace tkg::model
