#pragma once

namespace delrank {

// Level comes from DELRANK_LOG (error|info|debug), read once; defaults to info.
enum class LogLevel { kError = 0, kInfo = 1, kDebug = 2 };

LogLevel log_level();
void set_log_level(LogLevel level);

void log_error(const char* fmt, ...);
void log_info(const char* fmt, ...);
void log_debug(const char* fmt, ...);

}  // namespace delrank
