#pragma once

// Run configuration: `key = value` lines under `[section]` headers.
// Blank lines and lines starting with '#' or ';' are ignored. Unknown
// sections or keys are errors.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "tkg/core/dataset.hpp"
#include "tkg/core/true_index.hpp"
#include "tkg/model/decoder.hpp"
#include "tkg/model/heterogeneity.hpp"
#include "tkg/model/temp_model.hpp"
#include "tkg/ted/ted.hpp"

namespace tkg::app {

struct DataConfig {
  std::string path;
  DatasetFormat format = DatasetFormat::Auto;
  TimeGranularity granularity = TimeGranularity::Auto;
};

struct TrainConfig {
  std::size_t epochs = 100;
  std::size_t batch_snapshots = 8;
  std::size_t snapshot_cap = 3000;
  std::size_t negatives = 500;
  double dropout_current = 0.5;
  double dropout_reference = 0.2;
  double learning_rate = 0.001;
  std::size_t patience = 10;
  std::uint64_t seed = 0;
  model::LossMode loss = model::LossMode::CrossEntropy;
  /// Facts sampled for per-epoch validation MRR (0 = whole split).
  std::size_t validation_queries = 500;
};

struct EvalConfig {
  IndexTimeMode filter = IndexTimeMode::PerStep;
  std::size_t threads = 1;
  model::WindowPolicy tpf_window;
  double bin_width = 1.0;
  Split split = Split::Test;
};

struct TedSection {
  std::vector<double> sigmas = {1e-5, 1e-2, 1e-1, 1.0, 10.0, 100.0, 1e5};
  ted::Blend blend = ted::Blend::Lexicographic;
  Split split = Split::Valid;
};

struct RunConfig {
  DataConfig data;
  model::ModelConfig model;
  TrainConfig train;
  EvalConfig eval;
  TedSection ted;
  SyntheticParams synth;
};

/// `origin` names the source in error messages.
RunConfig parse_config(std::string_view text, const std::string& origin = "<config>");
RunConfig load_config(const std::filesystem::path& path);

/// Checks cross-field constraints; throws ConfigError.
void validate(const RunConfig& config);

}  // namespace tkg::app
