#pragma once

// Implementations behind the `tkgc` subcommands. Each writes its files into
// `out` (created if missing, every file replaced atomically) and returns a
// JSON summary for stdout.

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "tkg/app/config.hpp"
#include "tkg/core/dataset.hpp"

namespace tkg::app {

TkgDataset load_configured_dataset(const RunConfig& config);

/// Writes `content` to a temporary sibling and renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);

struct DatasetStats {
  std::size_t entities = 0;
  std::size_t relations = 0;
  std::size_t steps = 0;
  std::array<std::size_t, 3> split_sizes{};
  /// Entities active at each step over all splits.
  std::vector<std::size_t> active_per_step;
  /// Mean, over entities active at t, of the number of steps in
  /// [t - window + 1, t] at which they are active.
  std::vector<double> mean_trailing_activity;
  /// histogram[k] = number of (step, active entity) pairs active at exactly
  /// k of the trailing window's steps (k = 1..window).
  std::vector<std::size_t> trailing_histogram;
};

DatasetStats compute_stats(const TkgDataset& dataset, std::size_t window = 15);

nlohmann::json cmd_train(const RunConfig& config, const std::filesystem::path& out,
                         const std::optional<std::filesystem::path>& checkpoint);
nlohmann::json cmd_eval(const RunConfig& config, const std::filesystem::path& out,
                        const std::optional<std::filesystem::path>& checkpoint);
nlohmann::json cmd_ted(const RunConfig& config, const std::filesystem::path& out);
nlohmann::json cmd_synth(const RunConfig& config, const std::filesystem::path& out);
nlohmann::json cmd_stats(const RunConfig& config, const std::filesystem::path& out);
nlohmann::json cmd_analyze(const RunConfig& config, const std::filesystem::path& results,
                           const std::filesystem::path& out);

}  // namespace tkg::app
