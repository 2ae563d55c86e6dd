#pragma once

#include <string>

namespace xdl {

/// Warnings go to std::clog unless silenced (tests and sweeps silence them).
void log_warning(const std::string& message);
void set_warnings_enabled(bool enabled) noexcept;
bool warnings_enabled() noexcept;

} // namespace xdl
