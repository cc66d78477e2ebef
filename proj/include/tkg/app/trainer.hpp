#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "tkg/app/config.hpp"
#include "tkg/core/dataset.hpp"
#include "tkg/core/true_index.hpp"
#include "tkg/model/heterogeneity.hpp"
#include "tkg/model/temp_model.hpp"
#include "tkg/tensor/optim.hpp"

namespace tkg::app {

struct EpochRecord {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  /// Absent when there is no validation split.
  std::optional<double> valid_mrr;
  double seconds = 0.0;
  bool improved = false;
  std::size_t epochs_without_improvement = 0;
};

struct TrainingLog {
  std::vector<EpochRecord> epochs;
  std::size_t best_epoch = 0;
  double best_valid_mrr = 0.0;
  bool early_stopped = false;

  /// One JSON object per epoch. Wall time is omitted unless requested, so
  /// that logs of identical runs compare equal.
  std::string to_jsonl(bool with_time = true) const;
};

/// Mini-batch trainer: batches of consecutive snapshots in shuffled order,
/// temporal edge dropout, sampled negatives for both query directions,
/// L = L_obj + L_sub, Adam, early stopping on validation MRR.
class Trainer {
 public:
  Trainer(model::TempModel& model, const TkgDataset& dataset, const TrainConfig& config,
          const model::TpfTable* tpf, IndexTimeMode filter = IndexTimeMode::PerStep);

  /// One pass over the training snapshots; returns the summed loss.
  double train_epoch(std::size_t epoch);

  /// MRR on (a capped subsample of) the validation split.
  double validation_mrr() const;

  /// Runs up to config.epochs epochs. The best parameters (by validation
  /// MRR; the last ones without a validation split) are restored at the end
  /// and written to `checkpoint` whenever they improve.
  TrainingLog fit(const std::optional<std::filesystem::path>& checkpoint = std::nullopt);

 private:
  model::TempModel& model_;
  const TkgDataset& dataset_;
  TrainConfig config_;
  const model::TpfTable* tpf_;
  TrueTripleIndex train_index_;
  TrueTripleIndex filter_index_;
  tensor::AdamState adam_;
  bool warned_replacement_ = false;
};

}  // namespace tkg::app
