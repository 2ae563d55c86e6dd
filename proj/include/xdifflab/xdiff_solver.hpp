#pragma once

#include "xdifflab/grid.hpp"
#include "xdifflab/model.hpp"

#include <functional>
#include <vector>

namespace xdl {

/// Time-stepping controls shared by both solvers.
struct SolverConfig {
    double dt = 1e-3;
    double t_end = 1.0;
    double linear_tol = 1e-10;
    int max_linear_iters = 1000;

    /// dt > 0, t_end >= 0, linear_tol > 0, max_linear_iters >= 1.
    void validate() const;
    /// Number of steps to reach t_end; the last step is shortened if needed.
    long step_count() const;

    bool operator==(const SolverConfig&) const = default;
};

struct CrossDiffState {
    double t = 0.0;
    Field u;
    Field v;

    /// Same grid, finite, nonnegative; otherwise ValidationError.
    void validate() const;
};

/// Roundoff floor below which negative values are clipped to zero; anything
/// more negative is a positivity violation.
inline constexpr double kNegativeClip = -1e-13;

/// One semi-implicit step of the limit system: v first (Patankar reaction,
/// implicit diffusion), then u with the product diffusion Delta((d_u + phi(v)) u)
/// evaluated at the new v.
CrossDiffState step_cross(const CrossDiffState& state, const ModelParams& params, const SolverConfig& cfg,
                          double dt_override = 0.0);

struct StepInfo {
    long step = 0; // 0 for the initial state
    double dt = 0.0;
};

using CrossObserver = std::function<void(const CrossDiffState&, const StepInfo&)>;

/// Stored snapshots of a direct-solver run.
struct CrossHistory {
    Grid grid;
    std::vector<double> times;
    std::vector<Field> u;
    std::vector<Field> v;

    std::size_t size() const noexcept { return times.size(); }
};

/// Steps to cfg.t_end, calling `observer` on the initial state and after every
/// step, and storing every `snapshot_every`-th state (plus the last one).
CrossHistory run_cross(const CrossDiffState& init, const ModelParams& params, const SolverConfig& cfg,
                       const CrossObserver& observer = {}, long snapshot_every = 1);

} // namespace xdl
