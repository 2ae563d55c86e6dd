#include "xdifflab/fast_solver.hpp"

#include "step_common.hpp"
#include "xdifflab/error.hpp"
#include "xdifflab/log.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace xdl {

void FastState::validate() const {
    if (!(uA.grid == uB.grid) || !(uA.grid == v.grid))
        throw ValidationError("fast state: fields live on different grids");
    detail::require_nonnegative(uA, "uA");
    detail::require_nonnegative(uB, "uB");
    detail::require_nonnegative(v, "v");
}

ExchangeResult exchange_exact(double uA, double uB, double h, double k, double epsilon, double dt) {
    if (!(h >= 0.0) || !(k >= 0.0) || !(h + k > 0.0))
        throw ValidationError("exchange_exact: rates must be nonnegative with h + k > 0");
    if (!(epsilon > 0.0) || !(dt >= 0.0)) throw ValidationError("exchange_exact: need epsilon > 0, dt >= 0");
    const double s = uA + uB;
    const double eq = k * s / (h + k);
    const double x = (h + k) * dt / epsilon;
    double a = x > 700.0 ? eq : eq + (uA - eq) * std::exp(-x);
    a = std::clamp(a, 0.0, s);
    return {a, s - a};
}

namespace {

void exchange_field(std::vector<double>& a, std::vector<double>& b, const Field& v, const FastReactionConfig& frc,
                    double dt) {
    for (std::size_t k = 0; k < a.size(); ++k) {
        const auto r = exchange_exact(a[k], b[k], frc.h(v[k]), frc.k(v[k]), frc.epsilon, dt);
        a[k] = r.uA;
        b[k] = r.uB;
    }
}

void require_rates(const FastReactionConfig& frc) {
    if (!frc.h || !frc.k) throw ValidationError("fast-reaction config has no exchange rates");
    if (!(frc.epsilon > 0.0)) throw ValidationError("fast-reaction config: epsilon must be positive");
    if (!(frc.d_A > 0.0) || !(frc.d_B >= 0.0)) throw ValidationError("fast-reaction config: bad diffusion rates");
}

} // namespace

FastState step_fast(const FastState& state, const ModelParams& params, const FastReactionConfig& frc,
                    const SolverConfig& cfg, double dt_override) {
    require_rates(frc);
    const double dt = dt_override > 0.0 ? dt_override : cfg.dt;
    const Grid& g = state.v.grid;
    const detail::KrylovSettings ks{cfg.linear_tol, cfg.max_linear_iters};
    const double t_new = state.t + dt;

    std::vector<double> a = state.uA.values;
    std::vector<double> b = state.uB.values;
    exchange_field(a, b, state.v, frc, 0.5 * dt);

    std::vector<double> total(g.size());
    for (std::size_t k = 0; k < g.size(); ++k) total[k] = a[k] + b[k];
    Field v_new = detail::update_v(state.v, Field(g, total), params, dt, ks, t_new);

    std::vector<double> loss(g.size());
    for (std::size_t k = 0; k < g.size(); ++k)
        loss[k] = params.r_a * std::pow(total[k], params.a) + params.r_b * std::pow(v_new[k], params.b);
    const auto diag = detail::patankar_diagonal(dt, params.r_u, loss, t_new, "uA/uB-update");
    auto a_new = detail::solve_symmetric(g, diag, dt, frc.d_A, a, a, ks, "uA-update");
    auto b_new = detail::solve_symmetric(g, diag, dt, frc.d_A + frc.d_B, b, b, ks, "uB-update");
    detail::enforce_positivity(a_new, "uA", t_new);
    detail::enforce_positivity(b_new, "uB", t_new);

    exchange_field(a_new, b_new, v_new, frc, 0.5 * dt);
    return {t_new, Field(g, std::move(a_new)), Field(g, std::move(b_new)), std::move(v_new)};
}

MollifierKernel mollifier_kernel(const Grid& g, double epsilon) {
    MollifierKernel kern;
    kern.reach_x = static_cast<int>(std::floor(epsilon / g.hx()));
    kern.reach_y = g.dim() == 2 ? static_cast<int>(std::floor(epsilon / g.hy())) : 0;
    const int wx = 2 * kern.reach_x + 1, wy = 2 * kern.reach_y + 1;
    kern.weights.assign(static_cast<std::size_t>(wx) * wy, 0.0);
    double sum = 0.0;
    for (int a = -kern.reach_x; a <= kern.reach_x; ++a)
        for (int b = -kern.reach_y; b <= kern.reach_y; ++b) {
            const double dx = a * g.hx();
            const double dy = g.dim() == 2 ? b * g.hy() : 0.0;
            const double q = (dx * dx + dy * dy) / (epsilon * epsilon);
            const double w = q < 1.0 ? (1.0 - q) * (1.0 - q) : 0.0;
            kern.weights[static_cast<std::size_t>(a + kern.reach_x) * wy + (b + kern.reach_y)] = w;
            sum += w;
        }
    for (double& w : kern.weights) w /= sum;
    return kern;
}

Field mollify_initial(const Field& u_in, double epsilon) {
    if (!(epsilon > 0.0 && epsilon < 1.0)) throw ValidationError("mollify_initial: epsilon must lie in (0, 1)");
    detail::require_nonnegative(u_in, "u_in");
    const Grid& g = u_in.grid;
    Field out(g);
    if (epsilon < g.min_spacing()) {
        std::ostringstream msg;
        msg << "mollifier radius " << epsilon << " is below one cell (" << g.min_spacing()
            << "); using identity plus epsilon";
        log_warning(msg.str());
        for (std::size_t k = 0; k < g.size(); ++k) out[k] = u_in[k] + epsilon;
        return out;
    }
    const MollifierKernel kern = mollifier_kernel(g, epsilon);
    const int wy = 2 * kern.reach_y + 1;
    for (int i = 0; i < g.nx(); ++i)
        for (int j = 0; j < g.ny(); ++j) {
            double conv = 0.0;
            for (int a = -kern.reach_x; a <= kern.reach_x; ++a) {
                const int ii = i + a;
                if (ii < 0 || ii >= g.nx()) continue; // zero extension
                for (int b = -kern.reach_y; b <= kern.reach_y; ++b) {
                    const int jj = j + b;
                    if (jj < 0 || jj >= g.ny()) continue;
                    conv += kern.weights[static_cast<std::size_t>(a + kern.reach_x) * wy + (b + kern.reach_y)] *
                            u_in[g.index(ii, jj)];
                }
            }
            const double dist = g.boundary_distance(i, j);
            double chi = 1.0;
            if (dist <= epsilon) {
                chi = 0.0;
            } else if (dist < 2.0 * epsilon) {
                const double s = (dist - epsilon) / epsilon;
                chi = s * s * s * (s * (6.0 * s - 15.0) + 10.0);
            }
            out[g.index(i, j)] = chi * conv + epsilon;
        }
    return out;
}

Partition partition_initial(const Field& u_in, const Field& v_in, const FastReactionConfig& frc) {
    require_rates(frc);
    if (!(u_in.grid == v_in.grid)) throw ValidationError("partition_initial: grid mismatch");
    Field uA(u_in.grid), uB(u_in.grid);
    for (std::size_t k = 0; k < u_in.size(); ++k) {
        const double h = frc.h(v_in[k]), kk = frc.k(v_in[k]);
        uA[k] = kk / (h + kk) * u_in[k];
        uB[k] = u_in[k] - uA[k];
    }
    return {std::move(uA), std::move(uB)};
}

FastState prepare_fast_initial(const Field& u_in, const Field& v_in, const FastReactionConfig& frc) {
    auto parts = partition_initial(u_in, v_in, frc);
    Field v(v_in.grid);
    for (std::size_t k = 0; k < v.size(); ++k) v[k] = v_in[k] + frc.epsilon;
    return {0.0, mollify_initial(parts.uA, frc.epsilon), mollify_initial(parts.uB, frc.epsilon), std::move(v)};
}

Field effective_m(const FastState& state, const FastReactionConfig& frc) {
    Field m(state.uA.grid);
    for (std::size_t k = 0; k < m.size(); ++k) {
        const double s = state.uA[k] + state.uB[k];
        m[k] = s > 0.0 ? (frc.d_A * state.uA[k] + (frc.d_A + frc.d_B) * state.uB[k]) / s : frc.d_A;
    }
    return m;
}

FastHistory run_fast(const FastState& init, const ModelParams& params, const FastReactionConfig& frc,
                     const SolverConfig& cfg, const FastObserver& observer, long snapshot_every) {
    params.validate();
    cfg.validate();
    init.validate();
    require_rates(frc);
    if (snapshot_every < 1) throw ValidationError("snapshot interval must be >= 1");

    FastHistory hist{init.v.grid, {}, {}, {}, {}};
    auto store = [&](const FastState& s) {
        hist.times.push_back(s.t);
        hist.uA.push_back(s.uA);
        hist.uB.push_back(s.uB);
        hist.v.push_back(s.v);
    };
    store(init);
    if (observer) observer(init, {0, 0.0});

    const detail::StepClock clock(cfg);
    FastState state = init;
    for (long n = 1; n <= clock.steps(); ++n) {
        const double dt = clock.dt(n);
        state = step_fast(state, params, frc, cfg, dt);
        state.t = clock.time(n);
        if (observer) observer(state, {n, dt});
        if (n % snapshot_every == 0 || n == clock.steps()) store(state);
    }
    return hist;
}

} // namespace xdl
