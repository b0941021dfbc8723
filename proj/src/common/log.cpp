#include "storyline/common/log.hpp"

#include <chrono>
#include <cstdlib>
#include <ctime>
#include <iostream>
#include <mutex>
#include <string>

namespace storyline::log {

namespace {

Level ParseLevel(const char* text) {
  if (text == nullptr) return Level::kInfo;
  const std::string s(text);
  if (s == "debug") return Level::kDebug;
  if (s == "warn" || s == "warning") return Level::kWarn;
  if (s == "error") return Level::kError;
  return Level::kInfo;
}

constexpr const char* kNames[] = {"debug", "info", "warn", "error"};

}  // namespace

Level Threshold() {
  static const Level level = ParseLevel(std::getenv("STORYLINE_LOG_LEVEL"));
  return level;
}

void Write(Level level, std::string_view message) {
  if (level < Threshold()) return;
  static std::mutex mu;
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char stamp[32];
  std::strftime(stamp, sizeof(stamp), "%Y-%m-%dT%H:%M:%SZ", &tm);
  std::lock_guard lock(mu);
  std::cerr << stamp << ' ' << kNames[static_cast<int>(level)] << ' ' << message << '\n';
}

}  // namespace storyline::log
