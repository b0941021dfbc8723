#pragma once

#include <string_view>

namespace storyline::log {

enum class Level { kDebug = 0, kInfo = 1, kWarn = 2, kError = 3 };

// Threshold comes from STORYLINE_LOG_LEVEL (debug|info|warn|error), default info.
Level Threshold();

void Write(Level level, std::string_view message);

inline void Debug(std::string_view m) { Write(Level::kDebug, m); }
inline void Info(std::string_view m) { Write(Level::kInfo, m); }
inline void Warn(std::string_view m) { Write(Level::kWarn, m); }
inline void Error(std::string_view m) { Write(Level::kError, m); }

}  // namespace storyline::log
