#include "okwugbe/logging.hpp"

#include <cstdio>
#include <cstdlib>
#include <cstring>

namespace okwugbe::log {

namespace {

Level parse_env() {
  const char* env = std::getenv("OKWUGBE_LOG");
  if (env == nullptr) return Level::kWarn;
  if (std::strcmp(env, "error") == 0) return Level::kError;
  if (std::strcmp(env, "warn") == 0) return Level::kWarn;
  if (std::strcmp(env, "info") == 0) return Level::kInfo;
  if (std::strcmp(env, "debug") == 0) return Level::kDebug;
  return Level::kWarn;
}

Level& level_ref() {
  static Level lvl = parse_env();
  return lvl;
}

const char* tag(Level lvl) {
  switch (lvl) {
    case Level::kError: return "error";
    case Level::kWarn: return "warn";
    case Level::kInfo: return "info";
    case Level::kDebug: return "debug";
  }
  return "?";
}

}  // namespace

Level level() { return level_ref(); }

void set_level(Level lvl) { level_ref() = lvl; }

void write(Level lvl, const char* fmt, ...) {
  if (static_cast<int>(lvl) > static_cast<int>(level())) return;
  std::fprintf(stderr, "[okwugbe %s] ", tag(lvl));
  va_list args;
  va_start(args, fmt);
  std::vfprintf(stderr, fmt, args);
  va_end(args);
  std::fputc('\n', stderr);
}

}  // namespace okwugbe::log
