#include "xdifflab/log.hpp"

#include <atomic>
#include <iostream>
#include <mutex>

namespace xdl {

namespace {
std::atomic<bool> g_enabled{true};
std::mutex g_mutex;
} // namespace

void log_warning(const std::string& message) {
    if (!g_enabled.load()) return;
    std::lock_guard lock(g_mutex);
    std::clog << "warning: " << message << '\n';
}

void set_warnings_enabled(bool enabled) noexcept { g_enabled.store(enabled); }

bool warnings_enabled() noexcept { return g_enabled.load(); }

} // namespace xdl
