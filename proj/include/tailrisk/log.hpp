#ifndef TAILRISK_LOG_HPP_
#define TAILRISK_LOG_HPP_

#include <cstdlib>
#include <iostream>
#include <mutex>
#include <string>
#include <string_view>

namespace tailrisk::log {

enum class Level { Error = 0, Warn = 1, Info = 2, Debug = 3 };

/// Verbosity from TAILRISK_LOG_LEVEL (error, warn, info, debug); default warn.
inline Level threshold() {
  static const Level level = [] {
    const char* env = std::getenv("TAILRISK_LOG_LEVEL");
    const std::string_view v = env ? env : "";
    if (v == "error") return Level::Error;
    if (v == "info") return Level::Info;
    if (v == "debug") return Level::Debug;
    return Level::Warn;
  }();
  return level;
}

inline void write(Level lvl, std::string_view msg) {
  if (lvl > threshold()) return;
  static std::mutex mu;
  static constexpr const char* kTags[] = {"error", "warn", "info", "debug"};
  std::lock_guard lock(mu);
  std::cerr << "[tailrisk " << kTags[static_cast<int>(lvl)] << "] " << msg << '\n';
}

inline void error(std::string_view m) { write(Level::Error, m); }
inline void warn(std::string_view m) { write(Level::Warn, m); }
inline void info(std::string_view m) { write(Level::Info, m); }
inline void debug(std::string_view m) { write(Level::Debug, m); }

}  // namespace tailrisk::log

#endif  // TAILRISK_LOG_HPP_
