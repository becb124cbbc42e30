#pragma once

#include <string>

namespace foliate {

enum class LogLevel { Quiet = 0, Normal = 1, Debug = 2 };

void set_log_level(LogLevel level);
LogLevel log_level();

/// Writes to stderr when `level` is enabled. Thread-safe.
void log(LogLevel level, const std::string& message);

inline void log_info(const std::string& m) { log(LogLevel::Normal, m); }
inline void log_debug(const std::string& m) { log(LogLevel::Debug, m); }

}  // namespace foliate
