#include "delrank/logging.hpp"

#include <cstdarg>
#include <cstdio>
#include <cstdlib>
#include <cstring>

namespace delrank {

namespace {

LogLevel initial_level() {
  const char* env = std::getenv("DELRANK_LOG");
  if (env == nullptr) return LogLevel::kInfo;
  if (std::strcmp(env, "error") == 0) return LogLevel::kError;
  if (std::strcmp(env, "info") == 0) return LogLevel::kInfo;
  if (std::strcmp(env, "debug") == 0) return LogLevel::kDebug;
  std::fprintf(stderr, "[warn] unknown DELRANK_LOG value '%s', using info\n", env);
  return LogLevel::kInfo;
}

LogLevel& level_ref() {
  static LogLevel level = initial_level();
  return level;
}

void emit(const char* tag, const char* fmt, va_list args) {
  std::fprintf(stderr, "[%s] ", tag);
  std::vfprintf(stderr, fmt, args);
  std::fputc('\n', stderr);
}

}  // namespace

LogLevel log_level() { return level_ref(); }

void set_log_level(LogLevel level) { level_ref() = level; }

void log_error(const char* fmt, ...) {
  va_list args;
  va_start(args, fmt);
  emit("error", fmt, args);
  va_end(args);
}

void log_info(const char* fmt, ...) {
  if (level_ref() < LogLevel::kInfo) return;
  va_list args;
  va_start(args, fmt);
  emit("info", fmt, args);
  va_end(args);
}

void log_debug(const char* fmt, ...) {
  if (level_ref() < LogLevel::kDebug) return;
  va_list args;
  va_start(args, fmt);
  emit("debug", fmt, args);
  va_end(args);
}

}  // namespace delrank
