#pragma once

#include "linear_solve.hpp"
#include "xdifflab/grid.hpp"
#include "xdifflab/model.hpp"
#include "xdifflab/xdiff_solver.hpp"

#include <cmath>
#include <span>
#include <vector>

namespace xdl::detail {

void require_nonnegative(const Field& f, const char* what);

/// Clips roundoff negatives, throws PositivityError below kNegativeClip.
void enforce_positivity(std::vector<double>& w, const char* what, double t);

/// 1 + dt (loss - gain) per cell; throws if any entry is not positive.
std::vector<double> patankar_diagonal(double dt, double gain, std::span<const double> loss, double t,
                                      const char* what);

/// Shared v-equation step: implicit diffusion, gain r_v implicit, loss
/// (r_c v^c + r_d u^d) lagged in its coefficient.
Field update_v(const Field& v, const Field& u_total, const ModelParams& p, double dt, const KrylovSettings& ks,
               double t);

/// Time of step n and its size: uniform dt except a shortened final step.
struct StepClock {
    explicit StepClock(const SolverConfig& cfg) : cfg_(cfg), steps_(cfg.step_count()) {}
    long steps() const noexcept { return steps_; }
    double time(long n) const noexcept { return n >= steps_ ? cfg_.t_end : n * cfg_.dt; }
    double dt(long n) const noexcept {
        if (n < steps_) return cfg_.dt;
        const double last = cfg_.t_end - static_cast<double>(steps_ - 1) * cfg_.dt;
        return std::abs(last - cfg_.dt) <= 1e-9 * cfg_.dt ? cfg_.dt : last;
    }

private:
    SolverConfig cfg_;
    long steps_;
};

} // namespace xdl::detail
