#include "mce/log.hpp"

#include <atomic>
#include <cstdlib>
#include <iostream>
#include <string>

namespace mce::log {

namespace {

std::atomic<int> override_level{-1};

Level env_threshold() {
  static const Level level = [] {
    const char* env = std::getenv("MCE_LOG");
    std::string v = env ? env : "";
    if (v == "error") return Level::error;
    if (v == "info") return Level::info;
    if (v == "debug") return Level::debug;
    return Level::warn;
  }();
  return level;
}

}  // namespace

Level threshold() {
  int o = override_level.load();
  return o >= 0 ? static_cast<Level>(o) : env_threshold();
}

ScopedLevel::ScopedLevel(Level level) : previous_(override_level.exchange(static_cast<int>(level))) {}

ScopedLevel::~ScopedLevel() { override_level.store(previous_); }

void write(Level level, std::string_view message) {
  if (static_cast<int>(level) > static_cast<int>(threshold())) return;
  static constexpr const char* names[] = {"error", "warn", "info", "debug"};
  std::cerr << "[mce " << names[static_cast<int>(level)] << "] " << message << "\n";
}

}  // namespace mce::log
