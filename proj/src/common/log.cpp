#include "common/log.hpp"

#include <cstdlib>
#include <iostream>
#include <mutex>

namespace xkde {

namespace {

bool logging_enabled() {
    static const bool enabled = [] {
        const char* v = std::getenv("XKDE_LOG");
        return !(v && std::string(v) == "off");
    }();
    return enabled;
}

std::mutex& log_mutex() {
    static std::mutex m;
    return m;
}

} // namespace

void log_info(const std::string& msg) {
    if (!logging_enabled()) return;
    std::lock_guard<std::mutex> lock(log_mutex());
    std::cerr << "[info] " << msg << "\n";
}

void log_warn(const std::string& msg) {
    if (!logging_enabled()) return;
    std::lock_guard<std::mutex> lock(log_mutex());
    std::cerr << "[warn] " << msg << "\n";
}

} // namespace xkde
