#include "foliate/log.hpp"

#include <atomic>
#include <iostream>
#include <mutex>

namespace foliate {

namespace {
std::atomic<int> g_level{static_cast<int>(LogLevel::Quiet)};
std::mutex g_mutex;
}  // namespace

void set_log_level(LogLevel level) { g_level.store(static_cast<int>(level)); }

LogLevel log_level() { return static_cast<LogLevel>(g_level.load()); }

void log(LogLevel level, const std::string& message) {
    if (level == LogLevel::Quiet || static_cast<int>(level) > g_level.load()) {
        return;
    }
    std::lock_guard lock(g_mutex);
    std::cerr << (level == LogLevel::Debug ? "[debug] " : "") << message << '\n';
}

}  // namespace foliate
