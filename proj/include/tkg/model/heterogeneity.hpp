#pragma once

// Temporal pattern frequencies (TPFs), imputation of inactive entities and
// frequency-based gating between structural and temporal embeddings.

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "tkg/core/dataset.hpp"
#include "tkg/core/random.hpp"
#include "tkg/model/temporal_encoder.hpp"
#include "tkg/tensor/tensor.hpp"

namespace tkg::model {

// ---------------------------------------------------------------------------
// TPF

enum class PatternKind : std::uint8_t { S, O, R, SR, RO, SO, SRO };

inline constexpr std::array<PatternKind, 7> kAllPatternKinds = {
    PatternKind::S, PatternKind::O, PatternKind::R, PatternKind::SR, PatternKind::RO, PatternKind::SO, PatternKind::SRO};

/// "s", "o", "r", "s_r", "r_o", "s_o", "s_r_o".
const char* pattern_name(PatternKind kind);
PatternKind parse_pattern(const std::string& name);

/// Which training steps count toward the frequency at query step t. Step t
/// itself never counts.
struct WindowPolicy {
  enum class Kind { FullHistory, Trailing, Symmetric };
  Kind kind = Kind::FullHistory;
  std::size_t width = 0;

  static WindowPolicy full_history() { return {}; }
  static WindowPolicy trailing(std::size_t w) { return {Kind::Trailing, w}; }
  static WindowPolicy symmetric(std::size_t w) { return {Kind::Symmetric, w}; }
  static WindowPolicy parse(const std::string& kind, std::size_t width);

  /// Inclusive [lo, hi] range of steps around t (t excluded separately).
  std::pair<std::int64_t, std::int64_t> range(TimeStep t) const;
};

/// Frequency of each pattern of a quadruple, counted over training facts.
class TpfTable {
 public:
  static TpfTable build(const TkgDataset& dataset, WindowPolicy policy = WindowPolicy::full_history());

  /// Frequency of the pattern of `q` (of the given kind) at step q.time.
  std::size_t frequency(PatternKind kind, const Quadruple& q) const;
  std::array<std::size_t, 7> frequencies(const Quadruple& q) const;

  /// F_s = [f_s, f_r, f_sr] for (s, r, ?, t).
  std::array<double, 3> object_query_features(EntityId s, RelationId r, TimeStep t) const;
  /// F_o = [f_o, f_r, f_ro] for (?, r, o, t).
  std::array<double, 3> subject_query_features(RelationId r, EntityId o, TimeStep t) const;

  const WindowPolicy& policy() const { return policy_; }

  /// CSV `pattern_kind,key,els,time,count` for every (kind, key, time)
  /// referenced by `queries`. `key` joins the ids with ':'; `els` joins the
  /// vocabulary names (ids when the dataset has no names).
  void export_csv(std::ostream& out, std::span<const Quadruple> queries, const TkgDataset& dataset) const;

 private:
  std::size_t count(PatternKind kind, std::uint64_t key, TimeStep t) const;
  std::uint64_t key(PatternKind kind, EntityId s, RelationId r, EntityId o) const;

  WindowPolicy policy_;
  std::uint64_t entities_ = 0;
  std::uint64_t relations_ = 0;
  std::array<std::unordered_map<std::uint64_t, std::vector<TimeStep>>, 7> times_;
};

// ---------------------------------------------------------------------------
// Imputation

/// x_hat = gamma * x_prev + (1 - gamma) * x_t, with gamma = decay(dt; lambda, b).
/// An absent x_prev yields x_t.
std::vector<double> impute(std::span<const double> x_t, std::optional<std::span<const double>> x_prev, double delta_t,
                           double lambda, double b);

struct BidirectionalCoefficients {
  double previous = 0.0;
  double next = 0.0;
  double current = 1.0;
};

/// (gamma-/2, gamma+/2, 1 - gamma-/2 - gamma+/2); an absent side has gamma 0.
BidirectionalCoefficients bidirectional_coefficients(std::optional<double> delta_prev, std::optional<double> delta_next,
                                                     double lambda, double b);

std::vector<double> impute_bidirectional(std::span<const double> x_t, std::optional<std::span<const double>> x_prev,
                                         std::optional<std::span<const double>> x_next,
                                         std::optional<double> delta_prev, std::optional<double> delta_next,
                                         double lambda, double b);

/// Learned imputation applied to every entity inactive at the window's
/// current step, using its nearest active frame(s) in the window.
class Imputer {
 public:
  Imputer(tensor::ParameterSet& params, const std::string& prefix = "impute");

  tensor::Tensor apply(const EncoderWindow& window, bool bidirectional) const;

  const tensor::Tensor& lambda() const { return lambda_; }
  const tensor::Tensor& bias() const { return bias_; }

 private:
  tensor::Tensor lambda_;
  tensor::Tensor bias_;
};

// ---------------------------------------------------------------------------
// Gating

/// 3 -> hidden (ReLU) -> 1 (sigmoid) perceptron over log(1 + f) features.
class FrequencyGate {
 public:
  FrequencyGate() = default;
  FrequencyGate(tensor::ParameterSet& params, Rng& rng, const std::string& prefix, std::size_t hidden = 64);

  /// n x 3 raw counts (constants) -> n x 1 coefficients in [0, 1].
  tensor::Tensor forward(std::span<const std::array<double, 3>> frequencies) const;
  double evaluate(const std::array<double, 3>& frequencies) const;

  static tensor::Tensor features(std::span<const std::array<double, 3>> frequencies);

  tensor::Tensor w1, b1, w2, b2;
};

/// The four gates: os/oo for object queries, ss/so for subject queries.
struct GateSet {
  FrequencyGate os, oo, ss, so;

  static GateSet create(tensor::ParameterSet& params, Rng& rng, const std::string& prefix = "gate",
                        std::size_t hidden = 64);
};

struct GatedEmbeddings {
  tensor::Tensor anchor;      // 1 x d: the query's known entity
  tensor::Tensor candidates;  // |E| x d: every candidate entity
  double alpha_anchor = 0.0;
  double alpha_candidates = 0.0;
};

/// (s, r, ?, t): s~ = a_os x_s + (1 - a_os) z_s and o~ = a_oo x_o + (1 - a_oo) z_o
/// for every candidate, with a = MLP(F_s).
GatedEmbeddings gate_object_query(const tensor::Tensor& x_s, const tensor::Tensor& z_s, const tensor::Tensor& x_all,
                                  const tensor::Tensor& z_all, const std::array<double, 3>& f_s, const GateSet& gates);

/// (?, r, o, t): o~ uses MLP_so(F_o), every candidate subject MLP_ss(F_o).
GatedEmbeddings gate_subject_query(const tensor::Tensor& x_o, const tensor::Tensor& z_o, const tensor::Tensor& x_all,
                                   const tensor::Tensor& z_all, const std::array<double, 3>& f_o, const GateSet& gates);

}  // namespace tkg::model
