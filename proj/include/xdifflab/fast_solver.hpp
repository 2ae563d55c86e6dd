#pragma once

#include "xdifflab/grid.hpp"
#include "xdifflab/model.hpp"
#include "xdifflab/xdiff_solver.hpp"

#include <functional>
#include <utility>
#include <vector>

namespace xdl {

/// Quiet (uA) and stressed (uB) sub-populations plus the competitor v.
struct FastState {
    double t = 0.0;
    Field uA;
    Field uB;
    Field v;

    Field total() const { return uA + uB; }
    void validate() const;
};

struct ExchangeResult {
    double uA;
    double uB;
};

/// Exact flow of uA' = (k uB - h uA)/eps, uB' = -uA' over a time dt with
/// frozen rates. The sum is returned bit-for-bit unchanged.
ExchangeResult exchange_exact(double uA, double uB, double h, double k, double epsilon, double dt);

/// Strang step: half exchange at h(v^n), k(v^n); implicit diffusion with
/// Patankar reactions for v, uA (rate d_A) and uB (rate d_A + d_B); half
/// exchange at the new v.
FastState step_fast(const FastState& state, const ModelParams& params, const FastReactionConfig& frc,
                    const SolverConfig& cfg, double dt_override = 0.0);

/// Mollifies with the normalized bump (1 - (r/eps)^2)^2 of radius eps (data
/// zero-extended outside the box), multiplies by the boundary cutoff (0 within
/// eps of the boundary, 1 beyond 2 eps) and adds eps. When eps is below one
/// cell the result is u_in + eps and a warning is logged.
Field mollify_initial(const Field& u_in, double epsilon);

/// Discrete kernel weights used by mollify_initial, indexed by cell offset.
struct MollifierKernel {
    int reach_x = 0;
    int reach_y = 0;
    std::vector<double> weights; // (2 reach_x + 1) x (2 reach_y + 1), y fastest
};
MollifierKernel mollifier_kernel(const Grid& g, double epsilon);

struct Partition {
    Field uA;
    Field uB;
};

/// uA = k/(h+k) u, uB = h/(h+k) u pointwise, with h, k evaluated at v.
Partition partition_initial(const Field& u_in, const Field& v_in, const FastReactionConfig& frc);

/// Regularised fast-system initial state: partition, mollify each part, shift v by eps.
FastState prepare_fast_initial(const Field& u_in, const Field& v_in, const FastReactionConfig& frc);

/// (d_A uA + (d_A + d_B) uB) / (uA + uB); d_A where uA + uB = 0.
Field effective_m(const FastState& state, const FastReactionConfig& frc);

using FastObserver = std::function<void(const FastState&, const StepInfo&)>;

struct FastHistory {
    Grid grid;
    std::vector<double> times;
    std::vector<Field> uA;
    std::vector<Field> uB;
    std::vector<Field> v;

    std::size_t size() const noexcept { return times.size(); }
};

FastHistory run_fast(const FastState& init, const ModelParams& params, const FastReactionConfig& frc,
                     const SolverConfig& cfg, const FastObserver& observer = {}, long snapshot_every = 1);

} // namespace xdl
