#pragma once

#include <string_view>

#include <json.hpp>

namespace tkg::log {

enum class Level { Debug = 0, Info = 1, Warn = 2, Error = 3, Off = 4 };

/// Threshold read once from the TKG_LOG environment variable
/// (debug|info|warn|error|off). Defaults to warn.
Level threshold();
void set_threshold(Level level);

/// Emits one JSON object per line on stderr:
/// {"level": ..., "msg": ..., <fields>}.
void write(Level level, std::string_view message, const nlohmann::json& fields = {});

inline void debug(std::string_view m, const nlohmann::json& f = {}) { write(Level::Debug, m, f); }
inline void info(std::string_view m, const nlohmann::json& f = {}) { write(Level::Info, m, f); }
inline void warn(std::string_view m, const nlohmann::json& f = {}) { write(Level::Warn, m, f); }
inline void error(std::string_view m, const nlohmann::json& f = {}) { write(Level::Error, m, f); }

}  // namespace tkg::log
