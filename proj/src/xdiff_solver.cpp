#include "xdifflab/xdiff_solver.hpp"

#include "linear_solve.hpp"
#include "step_common.hpp"
#include "xdifflab/error.hpp"

#include <cmath>
#include <sstream>

namespace xdl {

void SolverConfig::validate() const {
    if (!(dt > 0.0) || !std::isfinite(dt)) throw ValidationError("time.dt must be positive");
    if (!(t_end >= 0.0) || !std::isfinite(t_end)) throw ValidationError("time.t_end must be nonnegative");
    if (!(linear_tol > 0.0)) throw ValidationError("solver.linear_tol must be positive");
    if (max_linear_iters < 1) throw ValidationError("solver.max_linear_iters must be >= 1");
}

long SolverConfig::step_count() const {
    const double ratio = t_end / dt;
    const double rounded = std::round(ratio);
    if (std::abs(ratio - rounded) <= 1e-9 * std::max(1.0, ratio)) return static_cast<long>(rounded);
    return static_cast<long>(std::ceil(ratio));
}

void CrossDiffState::validate() const {
    if (!(u.grid == v.grid)) throw ValidationError("state: u and v live on different grids");
    detail::require_nonnegative(u, "u");
    detail::require_nonnegative(v, "v");
}

namespace detail {

void require_nonnegative(const Field& f, const char* what) {
    require_finite(f, what);
    for (double x : f.values)
        if (x < 0.0) throw ValidationError(std::string(what) + ": negative density");
}

void enforce_positivity(std::vector<double>& w, const char* what, double t) {
    for (double& x : w) {
        if (!std::isfinite(x)) {
            std::ostringstream msg;
            msg << what << ": non-finite value at t = " << t;
            throw SolverError(msg.str());
        }
        if (x < 0.0) {
            if (x < kNegativeClip) {
                std::ostringstream msg;
                msg << what << ": positivity violated (value " << x << ") at t = " << t
                    << "; reduce time.dt";
                throw PositivityError(msg.str());
            }
            x = 0.0;
        }
    }
}

std::vector<double> patankar_diagonal(double dt, double gain, std::span<const double> loss, double t,
                                      const char* what) {
    std::vector<double> diag(loss.size());
    for (std::size_t k = 0; k < loss.size(); ++k) {
        diag[k] = 1.0 + dt * (loss[k] - gain);
        if (!(diag[k] > 0.0)) {
            std::ostringstream msg;
            msg << what << ": implicit operator lost positivity at t = " << t
                << " (dt * growth rate >= 1); reduce time.dt";
            throw PositivityError(msg.str());
        }
    }
    return diag;
}

Field update_v(const Field& v, const Field& u_total, const ModelParams& p, double dt,
               const detail::KrylovSettings& ks, double t) {
    const Grid& g = v.grid;
    std::vector<double> loss(g.size());
    for (std::size_t k = 0; k < g.size(); ++k)
        loss[k] = p.r_c * std::pow(v[k], p.c) + p.r_d * std::pow(u_total[k], p.d);
    const auto diag = patankar_diagonal(dt, p.r_v, loss, t, "v-update");
    auto w = solve_symmetric(g, diag, dt, p.d_v, v.values, v.values, ks, "v-update");
    enforce_positivity(w, "v", t);
    return Field(g, std::move(w));
}

} // namespace detail

CrossDiffState step_cross(const CrossDiffState& state, const ModelParams& params, const SolverConfig& cfg,
                          double dt_override) {
    const double dt = dt_override > 0.0 ? dt_override : cfg.dt;
    const Grid& g = state.u.grid;
    const detail::KrylovSettings ks{cfg.linear_tol, cfg.max_linear_iters};
    const double t_new = state.t + dt;

    Field v_new = detail::update_v(state.v, state.u, params, dt, ks, t_new);

    std::vector<double> loss(g.size()), mobility(g.size());
    for (std::size_t k = 0; k < g.size(); ++k) {
        loss[k] = params.r_a * std::pow(state.u[k], params.a) + params.r_b * std::pow(v_new[k], params.b);
        mobility[k] = params.d_u + params.phi(v_new[k]);
    }
    const auto diag = detail::patankar_diagonal(dt, params.r_u, loss, t_new, "u-update");
    auto w = detail::solve_product_diffusion(g, diag, mobility, dt, state.u.values, state.u.values, ks,
                                             "u-update");
    detail::enforce_positivity(w, "u", t_new);
    return {t_new, Field(g, std::move(w)), std::move(v_new)};
}

CrossHistory run_cross(const CrossDiffState& init, const ModelParams& params, const SolverConfig& cfg,
                       const CrossObserver& observer, long snapshot_every) {
    params.validate();
    cfg.validate();
    init.validate();
    if (snapshot_every < 1) throw ValidationError("snapshot interval must be >= 1");

    CrossHistory hist{init.u.grid, {}, {}, {}};
    auto store = [&](const CrossDiffState& s) {
        hist.times.push_back(s.t);
        hist.u.push_back(s.u);
        hist.v.push_back(s.v);
    };
    store(init);
    if (observer) observer(init, {0, 0.0});

    const detail::StepClock clock(cfg);
    CrossDiffState state = init;
    for (long n = 1; n <= clock.steps(); ++n) {
        const double dt = clock.dt(n);
        state = step_cross(state, params, cfg, dt);
        state.t = clock.time(n);
        if (observer) observer(state, {n, dt});
        if (n % snapshot_every == 0 || n == clock.steps()) store(state);
    }
    return hist;
}

} // namespace xdl
