#pragma once

#include <string_view>

namespace mce::log {

enum class Level { error = 0, warn = 1, info = 2, debug = 3 };

/// Verbosity comes from MCE_LOG (error|warn|info|debug), default warn.
Level threshold();

/// Temporarily raises or lowers the threshold for the current scope.
class ScopedLevel {
 public:
  explicit ScopedLevel(Level level);
  ~ScopedLevel();
  ScopedLevel(const ScopedLevel&) = delete;
  ScopedLevel& operator=(const ScopedLevel&) = delete;

 private:
  int previous_;
};

void write(Level level, std::string_view message);

inline void warn(std::string_view message) { write(Level::warn, message); }
inline void info(std::string_view message) { write(Level::info, message); }
inline void debug(std::string_view message) { write(Level::debug, message); }

}  // namespace mce::log
