#include "xdifflab/error.hpp"

namespace xdl {

ConfigError::ConfigError(std::vector<std::string> issues)
    : ValidationError([&] {
          std::string msg = "invalid configuration";
          for (const auto& s : issues) msg += "\n  " + s;
          return msg;
      }()),
      issues_(std::move(issues)) {}

} // namespace xdl
