#pragma once

#include <cstdarg>

namespace okwugbe::log {

enum class Level { kError = 0, kWarn = 1, kInfo = 2, kDebug = 3 };

// Current threshold; initialized from the OKWUGBE_LOG environment variable
// (error|warn|info|debug) on first use, default "warn".
Level level();
void set_level(Level lvl);

void write(Level lvl, const char* fmt, ...)
#if defined(__GNUC__)
    __attribute__((format(printf, 2, 3)))
#endif
    ;

}  // namespace okwugbe::log

#define OKWUGBE_ERROR(...) ::okwugbe::log::write(::okwugbe::log::Level::kError, __VA_ARGS__)
#define OKWUGBE_WARN(...) ::okwugbe::log::write(::okwugbe::log::Level::kWarn, __VA_ARGS__)
#define OKWUGBE_INFO(...) ::okwugbe::log::write(::okwugbe::log::Level::kInfo, __VA_ARGS__)
#define OKWUGBE_DEBUG(...) ::okwugbe::log::write(::okwugbe::log::Level::kDebug, __VA_ARGS__)
