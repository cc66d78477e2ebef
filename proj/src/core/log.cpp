#include "tkg/log.hpp"

#include <atomic>
#include <cstdlib>
#include <iostream>
#include <mutex>
#include <string>

namespace tkg::log {
namespace {

Level parse_level(const char* text) {
  if (text == nullptr) return Level::Warn;
  const std::string value(text);
  if (value == "debug") return Level::Debug;
  if (value == "info") return Level::Info;
  if (value == "warn") return Level::Warn;
  if (value == "error") return Level::Error;
  if (value == "off") return Level::Off;
  return Level::Warn;
}

std::atomic<int>& threshold_storage() {
  static std::atomic<int> level{static_cast<int>(parse_level(std::getenv("TKG_LOG")))};
  return level;
}

const char* level_name(Level level) {
  switch (level) {
    case Level::Debug: return "debug";
    case Level::Info: return "info";
    case Level::Warn: return "warn";
    case Level::Error: return "error";
    case Level::Off: return "off";
  }
  return "unknown";
}

}  // namespace

Level threshold() { return static_cast<Level>(threshold_storage().load()); }

void set_threshold(Level level) { threshold_storage().store(static_cast<int>(level)); }

void write(Level level, std::string_view message, const nlohmann::json& fields) {
  if (level < threshold() || level == Level::Off) return;
  nlohmann::json record = {{"level", level_name(level)}, {"msg", message}};
  if (fields.is_object()) {
    for (auto it = fields.begin(); it != fields.end(); ++it) record[it.key()] = it.value();
  }
  static std::mutex mutex;
  const std::lock_guard lock(mutex);
  std::cerr << record.dump() << '\n';
}

}  // namespace tkg::log
