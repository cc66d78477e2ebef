// tkgc: command-line front end for training, evaluation and analysis.

#include <exception>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "tkg/app/commands.hpp"
#include "tkg/error.hpp"

namespace {

struct Options {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out = ".";
  std::string checkpoint;
  std::string data;
  std::string results;
};

const char* error_kind(const std::exception& e) {
  if (dynamic_cast<const tkg::ConfigError*>(&e)) return "config";
  if (dynamic_cast<const tkg::DataError*>(&e)) return "data";
  if (dynamic_cast<const tkg::ShapeError*>(&e)) return "shape";
  if (dynamic_cast<const tkg::NumericError*>(&e)) return "numeric";
  if (dynamic_cast<const tkg::Error*>(&e)) return "error";
  return "internal";
}

void report(const char* kind, const std::string& message) {
  std::cerr << nlohmann::json{{"error", kind}, {"message", message}}.dump() << std::endl;
}

tkg::app::RunConfig resolve(const Options& o) {
  tkg::app::RunConfig config = o.config.empty() ? tkg::app::RunConfig{} : tkg::app::load_config(o.config);
  if (o.seed) config.train.seed = *o.seed;
  if (!o.data.empty()) config.data.path = o.data;
  tkg::app::validate(config);
  return config;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Temporal knowledge graph completion toolkit"};
  app.require_subcommand(1);
  Options o;

  auto common = [&](CLI::App* sub, bool checkpoint) {
    sub->add_option("--config", o.config, "Configuration file")->check(CLI::ExistingFile);
    sub->add_option("--seed", o.seed, "Override train.seed");
    sub->add_option("--out", o.out, "Output directory");
    sub->add_option("--data", o.data, "Override data.path");
    if (checkpoint) sub->add_option("--checkpoint", o.checkpoint, "Checkpoint file");
  };

  auto* train = app.add_subcommand("train", "Train a model and save its best checkpoint");
  common(train, true);
  auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint with filtered ranking");
  common(eval, true);
  auto* ted = app.add_subcommand("ted", "Run the TED baseline sigma sweep");
  common(ted, false);
  auto* synth = app.add_subcommand("synth", "Generate a synthetic dataset");
  common(synth, false);
  auto* stats = app.add_subcommand("stats", "Dataset statistics");
  common(stats, false);
  auto* analyze = app.add_subcommand("analyze", "Bin ranking results by temporal pattern frequency");
  common(analyze, false);
  analyze->add_option("--results", o.results, "results.jsonl from eval")->required()->check(CLI::ExistingFile);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    report("usage", e.what());
    return 2;
  }

  try {
    const tkg::app::RunConfig config = resolve(o);
    const std::filesystem::path out = o.out;
    std::optional<std::filesystem::path> checkpoint;
    if (!o.checkpoint.empty()) checkpoint = o.checkpoint;

    nlohmann::json summary;
    if (*train) summary = tkg::app::cmd_train(config, out, checkpoint);
    else if (*eval) summary = tkg::app::cmd_eval(config, out, checkpoint);
    else if (*ted) summary = tkg::app::cmd_ted(config, out);
    else if (*synth) summary = tkg::app::cmd_synth(config, out);
    else if (*stats) summary = tkg::app::cmd_stats(config, out);
    else summary = tkg::app::cmd_analyze(config, o.results, out);
    std::cout << summary.dump() << std::endl;
    return 0;
  } catch (const std::exception& e) {
    report(error_kind(e), e.what());
    return 1;
  }
}
