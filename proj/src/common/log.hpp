#pragma once

#include <string>

namespace xkde {

// Minimal stderr logger. Quiet by default in tests via XKDE_LOG=off.
void log_info(const std::string& msg);
void log_warn(const std::string& msg);

} // namespace xkde
