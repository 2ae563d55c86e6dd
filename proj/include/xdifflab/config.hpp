#pragma once

#include "xdifflab/harness.hpp"

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace xdl {

enum class Mode { run_cross, run_fast, sweep_eps, refine, stability, diagnose };

std::string to_string(Mode m);
std::optional<Mode> mode_from_string(std::string_view s);

struct OutputConfig {
    long snapshot_every = 0; // 0: initial and final snapshots only
    std::string dir = "out";

    bool operator==(const OutputConfig&) const = default;
};

/// Everything a CLI invocation needs. Optional entries fall back to
/// regime-dependent defaults at use sites.
struct RunConfig {
    std::optional<Mode> mode;
    Problem problem;
    std::optional<double> epsilon;
    std::vector<double> eps_list;
    std::optional<double> defect_p;
    std::vector<double> p_list;
    int refine_levels = 3;
    std::vector<double> delta_list;
    long stability_snapshot_every = 50;
    OutputConfig output;

    std::vector<double> effective_p_list() const;
    double effective_defect_p() const;

    bool operator==(const RunConfig&) const = default;
};

struct ParseOptions {
    std::optional<Mode> mode; // overrides the file's `mode` key
    bool allow_unsupported = false;
};

/// Parses the sectioned key = value format documented in the README.
/// Collects every problem and throws one ConfigError listing them all.
RunConfig parse_config(std::string_view text, const ParseOptions& opts = {});

/// Reads a file and parses it; an unreadable file is a ConfigError.
RunConfig load_config(const std::string& path, const ParseOptions& opts = {});

/// Inverse of parse_config: parse_config(serialize_config(c)) == c.
std::string serialize_config(const RunConfig& cfg);

} // namespace xdl
