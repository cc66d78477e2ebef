#include "tkg/app/commands.hpp"

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "tkg/app/trainer.hpp"
#include "tkg/error.hpp"
#include "tkg/eval/evaluation.hpp"
#include "tkg/log.hpp"
#include "tkg/tensor/checkpoint.hpp"
#include "tkg/ted/ted.hpp"

namespace tkg::app {

namespace fs = std::filesystem;

TkgDataset load_configured_dataset(const RunConfig& config) {
  if (config.data.path.empty()) throw ConfigError("data.path is not set");
  return load_dataset(config.data.path, {config.data.format, config.data.granularity});
}

void write_file_atomic(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + tmp.string());
    out << content;
    if (!out) throw Error("short write to " + tmp.string());
  }
  fs::rename(tmp, path);
}

DatasetStats compute_stats(const TkgDataset& ds, std::size_t window) {
  DatasetStats s;
  s.entities = ds.entity_count;
  s.relations = ds.relation_count;
  s.steps = ds.step_count;
  for (Split sp : kAllSplits) s.split_sizes[static_cast<std::size_t>(sp)] = ds.size(sp);

  std::vector<std::vector<std::uint8_t>> active(ds.step_count, std::vector<std::uint8_t>(ds.entity_count, 0));
  for (Split sp : kAllSplits) {
    for (const Snapshot& snap : ds.split(sp)) {
      for (const Triple& tr : snap.triples) {
        active[snap.time][tr.subject] = 1;
        active[snap.time][tr.object] = 1;
      }
    }
  }
  s.trailing_histogram.assign(window + 1, 0);
  std::vector<std::size_t> running(ds.entity_count, 0);
  for (std::size_t t = 0; t < ds.step_count; ++t) {
    for (std::size_t e = 0; e < ds.entity_count; ++e) {
      running[e] += active[t][e];
      if (t >= window) running[e] -= active[t - window][e];
    }
    std::size_t count = 0, occurrences = 0;
    for (std::size_t e = 0; e < ds.entity_count; ++e) {
      if (!active[t][e]) continue;
      ++count;
      occurrences += running[e];
      ++s.trailing_histogram[running[e]];
    }
    s.active_per_step.push_back(count);
    s.mean_trailing_activity.push_back(count ? static_cast<double>(occurrences) / static_cast<double>(count) : 0.0);
  }
  return s;
}

namespace {

model::TpfTable build_tpf(const TkgDataset& ds, const RunConfig& config) {
  return model::TpfTable::build(ds, config.eval.tpf_window);
}

nlohmann::json metrics_json(const eval::Metrics& m) {
  return {{"mrr", m.mrr}, {"hits1", m.hits1}, {"hits3", m.hits3}, {"hits10", m.hits10}, {"queries", m.count}};
}

std::string to_string(const auto& writer) {
  std::ostringstream out;
  writer(out);
  return out.str();
}

}  // namespace

nlohmann::json cmd_train(const RunConfig& config, const fs::path& out, const std::optional<fs::path>& checkpoint) {
  const TkgDataset ds = load_configured_dataset(config);
  const model::TpfTable tpf = build_tpf(ds, config);
  model::TempModel model(config.model, ds.entity_count, ds.relation_count, ds.step_count, config.train.seed);
  const fs::path ckpt = checkpoint.value_or(out / "model.ckpt");
  fs::create_directories(out);
  if (ckpt.has_parent_path()) fs::create_directories(ckpt.parent_path());
  Trainer trainer(model, ds, config.train, &tpf, config.eval.filter);
  const TrainingLog log = trainer.fit(ckpt);
  // Without a validation split the last epoch is kept; make sure it is on disk.
  tensor::save_checkpoint(ckpt, model.parameters());
  write_file_atomic(out / "training_log.jsonl", log.to_jsonl(true));
  return {{"command", "train"},
          {"epochs", log.epochs.size()},
          {"best_epoch", log.best_epoch},
          {"best_valid_mrr", log.best_valid_mrr},
          {"early_stopped", log.early_stopped},
          {"checkpoint", ckpt.string()}};
}

nlohmann::json cmd_eval(const RunConfig& config, const fs::path& out, const std::optional<fs::path>& checkpoint) {
  const TkgDataset ds = load_configured_dataset(config);
  const model::TpfTable tpf = build_tpf(ds, config);
  model::TempModel model(config.model, ds.entity_count, ds.relation_count, ds.step_count, config.train.seed);
  if (checkpoint) {
    tensor::load_checkpoint(*checkpoint, model.parameters());
  } else {
    log::warn("no checkpoint given; evaluating a freshly initialised model");
  }
  const auto filter = TrueTripleIndex::build(ds, {Split::Train, Split::Valid, Split::Test}, config.eval.filter);
  eval::ModelScorer scorer(model, ds, &tpf);
  eval::EvalOptions options;
  options.tpf = &tpf;
  const auto report = eval::evaluate(ds, config.eval.split, scorer, filter, options);
  const auto bins = eval::tpf_binned_analysis(report.results, config.eval.bin_width);
  write_file_atomic(out / "results.jsonl", to_string([&](std::ostream& o) { eval::write_results_jsonl(o, report.results); }));
  write_file_atomic(out / "summary.csv", to_string([&](std::ostream& o) { eval::write_summary_csv(o, report.metrics); }));
  write_file_atomic(out / "bins.csv", to_string([&](std::ostream& o) { eval::write_bins_csv(o, bins); }));
  nlohmann::json j = metrics_json(report.metrics);
  j["command"] = "eval";
  j["split"] = split_name(config.eval.split);
  return j;
}

nlohmann::json cmd_ted(const RunConfig& config, const fs::path& out) {
  const TkgDataset ds = load_configured_dataset(config);
  const auto filter = TrueTripleIndex::build(ds, {Split::Train, Split::Valid, Split::Test}, config.eval.filter);
  const auto rows = ted::sigma_sweep(ds, config.ted.split, config.ted.sigmas, config.ted.blend, filter,
                                     config.eval.threads);
  const fs::path file = out / (std::string("ted_sweep_") + split_name(config.ted.split) + ".csv");
  write_file_atomic(file, to_string([&](std::ostream& o) { ted::write_sweep_csv(o, rows); }));
  nlohmann::json sweep = nlohmann::json::array();
  for (const auto& r : rows) {
    nlohmann::json j = metrics_json(r.metrics);
    j["sigma"] = r.sigma;
    sweep.push_back(j);
  }
  return {{"command", "ted"}, {"split", split_name(config.ted.split)}, {"sweep", sweep}, {"file", file.string()}};
}

nlohmann::json cmd_synth(const RunConfig& config, const fs::path& out) {
  const TkgDataset ds = generate_synthetic(config.synth, config.train.seed);
  write_dataset(ds, out);
  return {{"command", "synth"},
          {"entities", ds.entity_count},
          {"relations", ds.relation_count},
          {"steps", ds.step_count},
          {"train", ds.size(Split::Train)},
          {"valid", ds.size(Split::Valid)},
          {"test", ds.size(Split::Test)},
          {"dir", out.string()}};
}

nlohmann::json cmd_stats(const RunConfig& config, const fs::path& out) {
  const TkgDataset ds = load_configured_dataset(config);
  const DatasetStats s = compute_stats(ds);
  nlohmann::ordered_json summary;
  summary["command"] = "stats";
  summary["entities"] = s.entities;
  summary["relations"] = s.relations;
  summary["steps"] = s.steps;
  summary["train"] = s.split_sizes[0];
  summary["valid"] = s.split_sizes[1];
  summary["test"] = s.split_sizes[2];
  write_file_atomic(out / "stats.json", summary.dump(2) + "\n");
  write_file_atomic(out / "active_per_step.csv", to_string([&](std::ostream& o) {
                      o << std::setprecision(12) << "time,active_entities,mean_trailing_activity\n";
                      for (std::size_t t = 0; t < s.steps; ++t) {
                        o << t << ',' << s.active_per_step[t] << ',' << s.mean_trailing_activity[t] << '\n';
                      }
                    }));
  write_file_atomic(out / "activity_histogram.csv", to_string([&](std::ostream& o) {
                      o << "occurrences,count\n";
                      for (std::size_t k = 1; k < s.trailing_histogram.size(); ++k) {
                        o << k << ',' << s.trailing_histogram[k] << '\n';
                      }
                    }));
  return nlohmann::json(summary);
}

nlohmann::json cmd_analyze(const RunConfig& config, const fs::path& results, const fs::path& out) {
  std::ifstream in(results);
  if (!in) throw DataError("cannot open results file " + results.string());
  auto rows = eval::read_results_jsonl(in);
  const bool missing = std::any_of(rows.begin(), rows.end(), [](const auto& r) { return !r.tpf; });
  if (missing) {
    if (config.data.path.empty()) throw ConfigError("results lack TPFs and data.path is not set to recompute them");
    const TkgDataset ds = load_configured_dataset(config);
    const model::TpfTable tpf = build_tpf(ds, config);
    for (auto& r : rows) {
      if (!r.tpf) r.tpf = tpf.frequencies(r.query.quadruple());
    }
  }
  const auto bins = eval::tpf_binned_analysis(rows, config.eval.bin_width);
  write_file_atomic(out / "bins.csv", to_string([&](std::ostream& o) { eval::write_bins_csv(o, bins); }));
  return {{"command", "analyze"}, {"queries", rows.size()}, {"bins", bins.size()}};
}

}  // namespace tkg::app
