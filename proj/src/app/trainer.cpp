#include "tkg/app/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>
#include <numeric>

#include <json.hpp>

#include "tkg/error.hpp"
#include "tkg/eval/evaluation.hpp"
#include "tkg/log.hpp"
#include "tkg/model/structural_encoder.hpp"
#include "tkg/tensor/checkpoint.hpp"

namespace tkg::app {

using model::Query;
using tensor::Tensor;

std::string TrainingLog::to_jsonl(bool with_time) const {
  std::string out;
  for (const EpochRecord& e : epochs) {
    nlohmann::ordered_json rec;
    rec["epoch"] = e.epoch;
    rec["train_loss"] = e.train_loss;
    rec["valid_mrr"] = e.valid_mrr ? nlohmann::ordered_json(*e.valid_mrr) : nlohmann::ordered_json(nullptr);
    rec["improved"] = e.improved;
    rec["epochs_without_improvement"] = e.epochs_without_improvement;
    if (with_time) rec["seconds"] = e.seconds;
    out += rec.dump() + "\n";
  }
  return out;
}

Trainer::Trainer(model::TempModel& model, const TkgDataset& dataset, const TrainConfig& config,
                 const model::TpfTable* tpf, IndexTimeMode filter)
    : model_(model),
      dataset_(dataset),
      config_(config),
      tpf_(tpf),
      train_index_(TrueTripleIndex::build(dataset, {Split::Train})),
      filter_index_(TrueTripleIndex::build(dataset, {Split::Train, Split::Valid, Split::Test}, filter)) {
  adam_.options.learning_rate = config.learning_rate;
  if (model.config().gating && tpf == nullptr) throw ConfigError("gating needs a frequency table");
}

double Trainer::train_epoch(std::size_t epoch) {
  const std::size_t T = dataset_.step_count;
  const std::size_t B = config_.batch_snapshots;
  const std::size_t E = dataset_.entity_count;
  const auto& train = dataset_.split(Split::Train);

  std::vector<std::size_t> blocks((T + B - 1) / B);
  std::iota(blocks.begin(), blocks.end(), 0);
  Rng order_rng(derive_seed(config_.seed, {epoch, 0xB10C}));
  std::shuffle(blocks.begin(), blocks.end(), order_rng);

  double epoch_loss = 0.0;
  std::size_t replaced = 0;
  for (std::size_t block : blocks) {
    Rng rng(derive_seed(config_.seed, {epoch, block, 0x5A3F}));
    tensor::Tape tape;
    tensor::TapeScope scope(tape);
    // Encodings of (step, role); role 0 = current snapshot, 1 = reference.
    std::map<std::pair<TimeStep, int>, model::StepEncoding> cache;
    auto encoding = [&](TimeStep s, int role) -> const model::StepEncoding& {
      auto it = cache.find({s, role});
      if (it == cache.end()) {
        const double rate = role == 0 ? config_.dropout_current : config_.dropout_reference;
        const Snapshot dropped = model::drop_edges(train[s], rate, derive_seed(config_.seed, {epoch, s, static_cast<std::uint64_t>(role)}));
        it = cache.emplace(std::make_pair(s, role), model_.encode_snapshot(dropped)).first;
      }
      return it->second;
    };

    Tensor loss;
    for (std::size_t t = block * B; t < std::min(T, (block + 1) * B); ++t) {
      const auto& triples = train[t].triples;
      if (triples.empty()) continue;
      std::vector<std::size_t> picked(triples.size());
      std::iota(picked.begin(), picked.end(), 0);
      if (picked.size() > config_.snapshot_cap) {
        std::shuffle(picked.begin(), picked.end(), rng);
        picked.resize(config_.snapshot_cap);
        std::sort(picked.begin(), picked.end());
      }

      std::vector<Query> object_queries, subject_queries;
      std::vector<std::vector<EntityId>> object_cands, subject_cands;
      for (std::size_t i : picked) {
        const Quadruple q{triples[i].subject, triples[i].relation, triples[i].object, static_cast<TimeStep>(t)};
        const auto negatives = model::sample_negatives(q, train_index_, E, config_.negatives, rng);
        if (negatives.objects.valid) {
          object_queries.push_back(Query::object(q));
          object_cands.push_back({q.object});
          object_cands.back().insert(object_cands.back().end(), negatives.objects.entities.begin(),
                                     negatives.objects.entities.end());
          replaced += negatives.objects.with_replacement;
        }
        if (negatives.subjects.valid) {
          subject_queries.push_back(Query::subject(q));
          subject_cands.push_back({q.subject});
          subject_cands.back().insert(subject_cands.back().end(), negatives.subjects.entities.begin(),
                                      negatives.subjects.entities.end());
          replaced += negatives.subjects.with_replacement;
        }
      }
      if (object_queries.empty() && subject_queries.empty()) continue;

      const TimeStep step = static_cast<TimeStep>(t);
      const auto states = model_.states(step, [&](TimeStep s) -> const model::StepEncoding& {
        return encoding(s, s == step ? 0 : 1);
      });
      for (auto [queries, cands] : {std::pair{&object_queries, &object_cands}, std::pair{&subject_queries, &subject_cands}}) {
        if (queries->empty()) continue;
        const Tensor term =
            model::query_loss(model_.candidate_scores(states, *queries, *cands, tpf_), config_.loss);
        loss = loss.defined() ? tensor::add(loss, term) : term;
      }
    }
    if (!loss.defined()) continue;
    const double value = loss.item();
    if (!std::isfinite(value)) {
      throw NumericError("non-finite training loss " + std::to_string(value) + " at epoch " + std::to_string(epoch) +
                         ", batch " + std::to_string(block));
    }
    const auto grads = tape.backward(loss, model_.parameters());
    tensor::adam_step(model_.parameters(), grads, adam_);
    epoch_loss += value;
  }
  if (replaced > 0 && !warned_replacement_) {
    warned_replacement_ = true;
    log::warn("fewer valid negatives than requested; sampling with replacement",
              {{"slots", replaced}, {"negatives", config_.negatives}, {"entities", E}});
  }
  return epoch_loss;
}

double Trainer::validation_mrr() const {
  eval::ModelScorer scorer(model_, dataset_, tpf_);
  eval::EvalOptions options;
  options.max_facts = config_.validation_queries;
  return eval::evaluate(dataset_, Split::Valid, scorer, filter_index_, options).metrics.mrr;
}

TrainingLog Trainer::fit(const std::optional<std::filesystem::path>& checkpoint) {
  TrainingLog log;
  const bool has_valid = dataset_.size(Split::Valid) > 0;
  std::vector<std::vector<double>> best;
  auto snapshot_params = [&] {
    best.clear();
    for (const auto& [name, t] : model_.parameters().entries()) best.emplace_back(t.values().begin(), t.values().end());
  };
  std::size_t bad = 0;
  for (std::size_t epoch = 0; epoch < config_.epochs; ++epoch) {
    const auto start = std::chrono::steady_clock::now();
    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = train_epoch(epoch);
    if (has_valid) {
      rec.valid_mrr = validation_mrr();
      rec.improved = log.epochs.empty() || *rec.valid_mrr > log.best_valid_mrr;
    } else {
      rec.improved = true;
    }
    if (rec.improved) {
      bad = 0;
      log.best_epoch = epoch;
      log.best_valid_mrr = rec.valid_mrr.value_or(0.0);
      snapshot_params();
      if (checkpoint) tensor::save_checkpoint(*checkpoint, model_.parameters());
    } else {
      ++bad;
    }
    rec.epochs_without_improvement = bad;
    rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    log.epochs.push_back(rec);
    log::info("epoch", {{"epoch", epoch},
                        {"train_loss", rec.train_loss},
                        {"valid_mrr", rec.valid_mrr ? nlohmann::json(*rec.valid_mrr) : nlohmann::json(nullptr)},
                        {"seconds", rec.seconds}});
    if (has_valid && bad >= config_.patience) {
      log.early_stopped = true;
      break;
    }
  }
  if (!best.empty()) {
    std::size_t i = 0;
    for (const auto& [name, t] : model_.parameters().entries()) {
      tensor::Tensor p = t;
      std::copy(best[i].begin(), best[i].end(), p.mutable_values().begin());
      ++i;
    }
  }
  return log;
}

}  // namespace tkg::app
