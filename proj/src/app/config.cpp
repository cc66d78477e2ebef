#include "tkg/app/config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "tkg/error.hpp"

namespace tkg::app {
namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

struct Field {
  std::string where;
  std::string value;

  [[noreturn]] void fail(const std::string& what) const { throw ConfigError(where + ": " + what); }

  std::size_t size() const {
    std::size_t v = 0;
    const auto [p, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
    if (ec != std::errc() || p != value.data() + value.size()) fail("expected a non-negative integer, got '" + value + "'");
    return v;
  }
  std::uint64_t u64() const { return size(); }
  double real() const {
    try {
      std::size_t used = 0;
      const double v = std::stod(value, &used);
      if (used != value.size()) throw std::invalid_argument(value);
      return v;
    } catch (const std::exception&) {
      fail("expected a number, got '" + value + "'");
    }
  }
  double probability() const {
    const double v = real();
    if (v < 0.0 || v > 1.0) fail("expected a value in [0, 1], got '" + value + "'");
    return v;
  }
  bool flag() const {
    if (value == "true" || value == "on" || value == "1" || value == "yes") return true;
    if (value == "false" || value == "off" || value == "0" || value == "no") return false;
    fail("expected true or false, got '" + value + "'");
  }
  template <typename F>
  auto parsed(F f) const {
    try {
      return f(value);
    } catch (const ConfigError& e) {
      fail(e.what());
    } catch (const DataError& e) {
      fail(e.what());
    }
  }
};

using Setter = std::function<void(RunConfig&, const Field&)>;

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = {
      {"data.path", [](RunConfig& c, const Field& f) { c.data.path = f.value; }},
      {"data.format", [](RunConfig& c, const Field& f) { c.data.format = f.parsed(parse_dataset_format); }},
      {"data.time_granularity",
       [](RunConfig& c, const Field& f) { c.data.granularity = f.parsed(parse_time_granularity); }},

      {"model.variant", [](RunConfig& c, const Field& f) { c.model.variant = f.parsed(model::parse_variant); }},
      {"model.gating", [](RunConfig& c, const Field& f) { c.model.gating = f.flag(); }},
      {"model.imputation", [](RunConfig& c, const Field& f) { c.model.imputation = f.flag(); }},
      {"model.bidirectional", [](RunConfig& c, const Field& f) { c.model.bidirectional = f.flag(); }},
      {"model.positional", [](RunConfig& c, const Field& f) { c.model.positional = f.flag(); }},
      {"model.dim", [](RunConfig& c, const Field& f) { c.model.dim = f.size(); }},
      {"model.layers", [](RunConfig& c, const Field& f) { c.model.layers = f.size(); }},
      {"model.heads", [](RunConfig& c, const Field& f) { c.model.heads = f.size(); }},
      {"model.window", [](RunConfig& c, const Field& f) { c.model.window = f.size(); }},
      {"model.gate_hidden", [](RunConfig& c, const Field& f) { c.model.gate_hidden = f.size(); }},
      {"model.decoder", [](RunConfig& c, const Field& f) { c.model.decoder = f.parsed(model::parse_decoder); }},

      {"train.epochs", [](RunConfig& c, const Field& f) { c.train.epochs = f.size(); }},
      {"train.batch_snapshots", [](RunConfig& c, const Field& f) { c.train.batch_snapshots = f.size(); }},
      {"train.snapshot_cap", [](RunConfig& c, const Field& f) { c.train.snapshot_cap = f.size(); }},
      {"train.negatives", [](RunConfig& c, const Field& f) { c.train.negatives = f.size(); }},
      {"train.dropout_current", [](RunConfig& c, const Field& f) { c.train.dropout_current = f.probability(); }},
      {"train.dropout_reference", [](RunConfig& c, const Field& f) { c.train.dropout_reference = f.probability(); }},
      {"train.learning_rate", [](RunConfig& c, const Field& f) { c.train.learning_rate = f.real(); }},
      {"train.patience", [](RunConfig& c, const Field& f) { c.train.patience = f.size(); }},
      {"train.seed", [](RunConfig& c, const Field& f) { c.train.seed = f.u64(); }},
      {"train.loss", [](RunConfig& c, const Field& f) { c.train.loss = f.parsed(model::parse_loss); }},
      {"train.validation_queries", [](RunConfig& c, const Field& f) { c.train.validation_queries = f.size(); }},

      {"eval.filter",
       [](RunConfig& c, const Field& f) {
         if (f.value == "time_aware") {
           c.eval.filter = IndexTimeMode::PerStep;
         } else if (f.value == "static") {
           c.eval.filter = IndexTimeMode::Static;
         } else {
           f.fail("expected time_aware or static, got '" + f.value + "'");
         }
       }},
      {"eval.threads", [](RunConfig& c, const Field& f) { c.eval.threads = f.size(); }},
      {"eval.tpf_window",
       [](RunConfig& c, const Field& f) {
         c.eval.tpf_window =
             f.parsed([&](const std::string& v) { return model::WindowPolicy::parse(v, c.eval.tpf_window.width); });
       }},
      {"eval.tpf_width", [](RunConfig& c, const Field& f) { c.eval.tpf_window.width = f.size(); }},
      {"eval.bin_width", [](RunConfig& c, const Field& f) { c.eval.bin_width = f.real(); }},
      {"eval.split", [](RunConfig& c, const Field& f) { c.eval.split = f.parsed(parse_split); }},

      {"ted.sigmas",
       [](RunConfig& c, const Field& f) {
         c.ted.sigmas.clear();
         std::stringstream ss(f.value);
         std::string item;
         while (std::getline(ss, item, ',')) c.ted.sigmas.push_back(Field{f.where, trim(item)}.real());
         if (c.ted.sigmas.empty()) f.fail("expected a comma-separated list of sigmas");
       }},
      {"ted.blend", [](RunConfig& c, const Field& f) { c.ted.blend = f.parsed(ted::parse_blend); }},
      {"ted.split", [](RunConfig& c, const Field& f) { c.ted.split = f.parsed(parse_split); }},

      {"synth.entities", [](RunConfig& c, const Field& f) { c.synth.entities = f.size(); }},
      {"synth.relations", [](RunConfig& c, const Field& f) { c.synth.relations = f.size(); }},
      {"synth.steps", [](RunConfig& c, const Field& f) { c.synth.steps = f.size(); }},
      {"synth.facts_per_step", [](RunConfig& c, const Field& f) { c.synth.facts_per_step = f.size(); }},
      {"synth.periodicity", [](RunConfig& c, const Field& f) { c.synth.periodicity = f.probability(); }},
      {"synth.period", [](RunConfig& c, const Field& f) { c.synth.period = f.size(); }},
      {"synth.persistence", [](RunConfig& c, const Field& f) { c.synth.persistence = f.probability(); }},
      {"synth.valid_fraction", [](RunConfig& c, const Field& f) { c.synth.valid_fraction = f.probability(); }},
      {"synth.test_fraction", [](RunConfig& c, const Field& f) { c.synth.test_fraction = f.probability(); }},
  };
  return table;
}

}  // namespace

RunConfig parse_config(std::string_view text, const std::string& origin) {
  RunConfig config;
  std::string section;
  std::size_t line_no = 0;
  std::istringstream in{std::string(text)};
  std::string raw;
  // tpf_window may precede tpf_width; apply the window kind once at the end.
  std::optional<std::pair<Field, std::string>> window_kind;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string where = origin + ":" + std::to_string(line_no);
    const std::string line = trim(raw);
    if (line.empty() || line[0] == '#' || line[0] == ';') continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError(where + ": unterminated section header");
      section = trim(std::string_view(line).substr(1, line.size() - 2));
      static const char* known[] = {"data", "model", "train", "eval", "ted", "synth"};
      if (std::find(std::begin(known), std::end(known), section) == std::end(known)) {
        throw ConfigError(where + ": unknown section [" + section + "]");
      }
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(where + ": expected 'key = value'");
    if (section.empty()) throw ConfigError(where + ": key outside of any [section]");
    const std::string key = section + "." + trim(std::string_view(line).substr(0, eq));
    const std::string value = trim(std::string_view(line).substr(eq + 1));
    const auto it = setters().find(key);
    if (it == setters().end()) throw ConfigError(where + ": unknown key '" + key + "'");
    if (key == "eval.tpf_window") {
      window_kind.emplace(Field{where, value}, value);
      continue;
    }
    it->second(config, Field{where, value});
  }
  if (window_kind) setters().at("eval.tpf_window")(config, window_kind->first);
  validate(config);
  return config;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str(), path.string());
}

void validate(const RunConfig& c) {
  c.model.validate();
  if (c.train.batch_snapshots == 0) throw ConfigError("train.batch_snapshots must be positive");
  if (c.train.snapshot_cap == 0) throw ConfigError("train.snapshot_cap must be positive");
  if (c.train.negatives == 0) throw ConfigError("train.negatives must be positive");
  if (!(c.train.learning_rate > 0.0)) throw ConfigError("train.learning_rate must be positive");
  if (c.eval.threads == 0) throw ConfigError("eval.threads must be positive");
  if (!(c.eval.bin_width > 0.0)) throw ConfigError("eval.bin_width must be positive");
  for (double s : c.ted.sigmas) {
    if (!(s > 0.0)) throw ConfigError("ted.sigmas must all be positive");
  }
}

}  // namespace tkg::app
