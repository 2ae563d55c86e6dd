#include "xdifflab/harness.hpp"

#include "xdifflab/error.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <functional>
#include <numbers>
#include <thread>

namespace xdl {

using nlohmann::ordered_json;

std::string to_string(InitialProfile::Kind k) {
    switch (k) {
    case InitialProfile::Kind::constant: return "constant";
    case InitialProfile::Kind::cosine: return "cosine";
    case InitialProfile::Kind::file: return "file";
    }
    return "?";
}

Field InitialProfile::realize(const Grid& g) const {
    switch (kind) {
    case Kind::constant: return Field(g, mean);
    case Kind::cosine: {
        const double lx = g.lx(), ly = g.ly();
        const bool two = g.dim() == 2;
        return Field::sample(g, [&](double x, double y) {
            const double cy = two ? std::cos(mode_y * std::numbers::pi * y / ly) : 1.0;
            return mean + amplitude * std::cos(mode * std::numbers::pi * x / lx) * cy;
        });
    }
    case Kind::file: return read_field_csv(path, g);
    }
    throw ValidationError("unknown initial profile kind");
}

Problem skt_preset() {
    Problem p;
    p.params.d_u = 0.2;
    p.params.d_v = 0.1;
    p.params.r_u = 1.0;
    p.params.r_a = 1.0;
    p.params.r_b = 0.5;
    p.params.r_v = 1.0;
    p.params.r_c = 1.0;
    p.params.r_d = 0.5;
    p.params.a = p.params.b = p.params.c = p.params.d = 1.0;
    p.params.phi = CrossFunction::linear(1.0);
    p.grid = Grid::line(200, 1.0);
    p.solver.dt = 2e-4;
    p.solver.t_end = 1.0;
    p.u_in = {InitialProfile::Kind::cosine, 1.0, 0.5, 2.0, 0.0, {}};
    p.v_in = {InitialProfile::Kind::cosine, 1.0, 0.5, 1.0, 0.0, {}};
    return p;
}

Problem theorem1_preset() {
    Problem p = skt_preset();
    p.params.a = 2.0;
    return p;
}

std::vector<double> default_p_list(Regime r) {
    if (r == Regime::theorem2) return {0.5};
    return {1.5, 2.0};
}

double default_defect_p(Regime r) { return r == Regime::theorem2 ? 0.5 : 2.0; }

// ---------------------------------------------------------------- invariants

void InvariantSummary::merge(const InvariantSummary& o) {
    if (o.states == 0) return;
    if (states == 0) {
        *this = o;
        return;
    }
    states += o.states;
    v_bound = std::max(v_bound, o.v_bound);
    v_paper_bound = std::max(v_paper_bound, o.v_paper_bound);
    max_v_excess = std::max(max_v_excess, o.max_v_excess);
    v_violations += o.v_violations;
    paper_v_exceedances += o.paper_v_exceedances;
    mass_excess = std::max(mass_excess, o.mass_excess);
    mass_violations += o.mass_violations;
    min_dissipation = std::min(min_dissipation, o.min_dissipation);
    min_bound_margin = std::min(min_bound_margin, o.min_bound_margin);
    dissipation_violations += o.dissipation_violations;
    fast = fast || o.fast;
}

InvariantMonitor::InvariantMonitor(const ModelParams& p, double dt)
    : params_(p), dt_(dt), k_true_(mass_growth_constant(p).k_true) {}

void InvariantMonitor::check(double t, const Field& u, const Field& v) {
    const double vmax = v.max();
    const double mass = integrate(u);
    if (sum_.states == 0) {
        mass0_ = mass;
        sum_.v_bound = std::max(vmax, v_reaction_zero(params_));
        sum_.v_paper_bound = v_bound_constants(params_, vmax).paper_bound;
    }
    ++sum_.states;
    const double excess = vmax - sum_.v_bound;
    sum_.max_v_excess = std::max(sum_.max_v_excess, excess);
    if (excess > 1e-9) ++sum_.v_violations;
    if (vmax > sum_.v_paper_bound) ++sum_.paper_v_exceedances;
    const double allowed = mass0_ + k_true_ * u.grid.domain_volume() * t + 1e-9 * t / dt_;
    sum_.mass_excess = std::max(sum_.mass_excess, mass - allowed);
    if (mass > allowed) ++sum_.mass_violations;
}

void InvariantMonitor::observe(const CrossDiffState& s) { check(s.t, s.u, s.v); }

void InvariantMonitor::observe(const FastState& s, const FastReactionConfig& frc) {
    check(s.t, s.total(), s.v);
    sum_.fast = true;
    for (double p : kSignExponents) {
        const SignCheck sc = exchange_dissipation_signcheck(s, frc, p);
        sum_.min_dissipation = std::min(sum_.min_dissipation, sc.min_cellwise);
        bool bad = sc.min_cellwise < -1e-14;
        if (p < 1.0) {
            sum_.min_bound_margin = std::min(sum_.min_bound_margin, sc.bound_margin);
            bad = bad || sc.bound_margin < -1e-14;
        }
        if (bad) ++sum_.dissipation_violations;
    }
}

// ------------------------------------------------------------------- fitting

SlopeFit fit_loglog(const std::vector<double>& x, const std::vector<double>& y, double floor) {
    if (x.size() != y.size()) throw ValidationError("fit_loglog: length mismatch");
    SlopeFit fit;
    fit.floored.assign(x.size(), false);
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int m = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (floor > 0.0 && y[i] <= 3.0 * floor) {
            fit.floored[i] = true;
            continue;
        }
        if (!(x[i] > 0.0) || !(y[i] > 0.0) || !std::isfinite(y[i])) continue;
        const double lx = std::log(x[i]), ly = std::log(y[i]);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
        ++m;
    }
    const double den = m * sxx - sx * sx;
    if (m >= 2 && den > 0.0) fit.slope = (m * sxy - sx * sy) / den;
    return fit;
}

namespace {

// Runs task(i) for i in [0, n) on up to `threads` workers; results are
// written by index so the outcome does not depend on scheduling.
void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& task) {
    const std::size_t workers = std::min<std::size_t>(n, static_cast<std::size_t>(std::max(1, threads)));
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) task(i);
        return;
    }
    std::vector<std::exception_ptr> errors(n);
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w)
        pool.emplace_back([&, w] {
            for (std::size_t i = w; i < n; i += workers) {
                try {
                    task(i);
                } catch (...) {
                    errors[i] = std::current_exception();
                }
            }
        });
    for (auto& t : pool) t.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

void require_decreasing(const std::vector<double>& v, const char* what, bool allow_zero) {
    if (v.empty()) throw ValidationError(std::string(what) + " is empty");
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (!(allow_zero ? v[i] >= 0.0 : v[i] > 0.0) || !std::isfinite(v[i]))
            throw ValidationError(std::string(what) + " entries must be " + (allow_zero ? "nonnegative" : "positive"));
        if (i > 0 && !(v[i] < v[i - 1])) throw ValidationError(std::string(what) + " must be strictly decreasing");
    }
}

// Walks a sorted list of snapshot times; matching by time keeps comparisons
// aligned when the last step is shortened or the other run steps faster.
class TimeCursor {
public:
    TimeCursor(const std::vector<double>& times, double dt) : times_(times), tol_(1e-9 * dt) {}
    std::optional<std::size_t> find(double t) {
        while (idx_ < times_.size() && times_[idx_] < t - tol_) ++idx_;
        if (idx_ < times_.size() && std::abs(times_[idx_] - t) <= tol_) return idx_;
        return std::nullopt;
    }

private:
    const std::vector<double>& times_;
    double tol_;
    std::size_t idx_ = 0;
};

CrossDiffState initial_cross(const Problem& pb, const Grid& g) {
    return {0.0, pb.u_in.realize(g), pb.v_in.realize(g)};
}

SolverConfig scaled(const SolverConfig& cfg, int factor) {
    SolverConfig c = cfg;
    c.dt = cfg.dt / factor;
    return c;
}

} // namespace

// --------------------------------------------------------------------- sweep

SweepReport eps_sweep(const Problem& problem, const std::vector<double>& eps_list, const HarnessOptions& opts) {
    require_decreasing(eps_list, "eps_list", false);
    for (double e : eps_list)
        if (!(e < 1.0)) throw ValidationError("eps_list entries must lie in (0, 1)");
    problem.params.validate();
    problem.solver.validate();

    SweepReport rep;
    rep.eps_values = eps_list;
    rep.defect_p = opts.defect_p;

    const CrossDiffState init = initial_cross(problem, problem.grid);
    InvariantMonitor direct_mon(problem.params, problem.solver.dt);
    const CrossHistory direct = run_cross(
        init, problem.params, problem.solver, [&](const CrossDiffState& s, const StepInfo&) { direct_mon.observe(s); },
        1);
    rep.direct_invariants = direct_mon.summary();
    rep.direct_duality = duality_accumulate(direct);

    const std::size_t n_eps = eps_list.size();
    rep.runs.resize(n_eps);
    const double v_sup = init.v.max();
    const int threads = opts.threads;

    // Task 0 is the refined reference; tasks 1.. are the fast runs.
    double floor_l1 = 0.0, floor_l2 = 0.0, floor_v1 = 0.0, floor_v2 = 0.0;
    std::optional<std::string> ref_failure;
    InvariantSummary ref_inv;
    const Grid fine = problem.grid.refined(2);
    const SolverConfig ref_cfg = scaled(problem.solver, 2);

    parallel_for(n_eps + 1, threads, [&](std::size_t task) {
        if (task == 0) {
            try {
                InvariantMonitor mon(problem.params, ref_cfg.dt);
                TimeCursor cursor(direct.times, problem.solver.dt);
                run_cross(
                    initial_cross(problem, fine), problem.params, ref_cfg,
                    [&](const CrossDiffState& s, const StepInfo&) {
                        mon.observe(s);
                        const auto idx = cursor.find(s.t);
                        if (!idx) return;
                        const Field du = restrict_to(s.u, problem.grid) - direct.u[*idx];
                        const Field dv = restrict_to(s.v, problem.grid) - direct.v[*idx];
                        floor_l1 = std::max(floor_l1, lp_norm(du, 1.0));
                        floor_l2 = std::max(floor_l2, lp_norm(du, 2.0));
                        floor_v1 = std::max(floor_v1, lp_norm(dv, 1.0));
                        floor_v2 = std::max(floor_v2, lp_norm(dv, 2.0));
                    },
                    1L << 40);
                ref_inv = mon.summary();
            } catch (const Error& e) {
                ref_failure = e.what();
            }
            return;
        }
        const std::size_t i = task - 1;
        EpsRun& run = rep.runs[i];
        run.epsilon = eps_list[i];
        try {
            const FastReactionConfig frc = build_fast_reaction(problem.params, v_sup, run.epsilon);
            const FastState fi = prepare_fast_initial(init.u, init.v, frc);
            InvariantMonitor mon(problem.params, problem.solver.dt);
            TimeCursor cursor(direct.times, problem.solver.dt);
            double last_t = 0.0, last_def2 = 0.0, last_l2 = 0.0, def_acc = 0.0, dual_acc = 0.0;
            run_fast(
                fi, problem.params, frc, problem.solver,
                [&](const FastState& s, const StepInfo& info) {
                    mon.observe(s, frc);
                    const Field tot = s.total();
                    const double d = relaxation_defect(s, frc, opts.defect_p);
                    const double l2 = lp_norm(tot, 2.0);
                    if (info.step > 0) {
                        def_acc += 0.5 * (d * d + last_def2) * (s.t - last_t);
                        dual_acc += 0.5 * (l2 * l2 + last_l2) * (s.t - last_t);
                    }
                    last_t = s.t;
                    last_def2 = d * d;
                    last_l2 = l2 * l2;
                    const auto idx = cursor.find(s.t);
                    if (!idx) return;
                    const Field du = tot - direct.u[*idx];
                    const Field dv = s.v - direct.v[*idx];
                    run.err_u_l1 = std::max(run.err_u_l1, lp_norm(du, 1.0));
                    run.err_u_l2 = std::max(run.err_u_l2, lp_norm(du, 2.0));
                    run.err_v_l1 = std::max(run.err_v_l1, lp_norm(dv, 1.0));
                    run.err_v_l2 = std::max(run.err_v_l2, lp_norm(dv, 2.0));
                },
                1L << 40);
            run.defect = std::sqrt(def_acc);
            run.duality = std::sqrt(dual_acc);
            run.invariants = mon.summary();
        } catch (const Error& e) {
            run.failure = e.what();
            run.invariants = {};
        }
    });

    rep.floor_u_l1 = floor_l1;
    rep.floor_u_l2 = floor_l2;
    rep.reference_invariants = ref_inv;
    rep.reference_meta = {{"nx", problem.grid.nx()},
                          {"ny", problem.grid.ny()},
                          {"dt", problem.solver.dt},
                          {"t_end", problem.solver.t_end},
                          {"reference_nx", fine.nx()},
                          {"reference_ny", fine.ny()},
                          {"reference_dt", ref_cfg.dt},
                          {"floor_v_l1", floor_v1},
                          {"floor_v_l2", floor_v2}};
    if (ref_failure) {
        rep.reference_meta["failure"] = *ref_failure;
        rep.anomalies.push_back("reference run failed: " + *ref_failure);
    }

    std::vector<double> eps_ok, e1, e2, ev1, ev2, def;
    for (const EpsRun& r : rep.runs) {
        if (r.failure) {
            rep.anomalies.push_back("eps " + format_real(r.epsilon) + " failed: " + *r.failure);
            continue;
        }
        eps_ok.push_back(r.epsilon);
        e1.push_back(r.err_u_l1);
        e2.push_back(r.err_u_l2);
        ev1.push_back(r.err_v_l1);
        ev2.push_back(r.err_v_l2);
        def.push_back(r.defect);
    }
    rep.slope_u_l1 = fit_loglog(eps_ok, e1, floor_l1);
    rep.slope_u_l2 = fit_loglog(eps_ok, e2, floor_l2);
    rep.slope_v_l1 = fit_loglog(eps_ok, ev1, floor_v1);
    rep.slope_v_l2 = fit_loglog(eps_ok, ev2, floor_v2);
    rep.slope_defect = fit_loglog(eps_ok, def, 0.0);

    for (std::size_t i = 1; i < e1.size(); ++i)
        if (e1[i] > e1[i - 1] && e1[i - 1] > 3.0 * floor_l1) {
            rep.monotone_to_floor = false;
            rep.anomalies.push_back("L1 error increases from eps " + format_real(eps_ok[i - 1]) + " to " +
                                    format_real(eps_ok[i]) + " above the discretization floor");
        }
    return rep;
}

// -------------------------------------------------------------------- refine

RefineReport refine_study(const Problem& problem, int levels, const HarnessOptions& opts) {
    if (levels < 2) throw ValidationError("refine.levels must be at least 2 (distinct consecutive levels)");
    if (levels > 8) throw ValidationError("refine.levels above 8 is not supported");
    problem.params.validate();
    problem.solver.validate();
    if (!(problem.solver.t_end > 0.0)) throw ValidationError("refine study needs time.t_end > 0");

    RefineReport rep;
    rep.levels.resize(levels);
    std::vector<std::optional<CrossDiffState>> finals(levels);
    parallel_for(static_cast<std::size_t>(levels), opts.threads, [&](std::size_t l) {
        const int factor = 1 << l;
        const Grid g = problem.grid.refined(factor);
        const SolverConfig cfg = scaled(problem.solver, factor);
        WeakResidualAccumulator wr(g, problem.params, default_test_set(g, cfg.t_end));
        InvariantMonitor mon(problem.params, cfg.dt);
        double last_t = 0.0, last_l2 = 0.0, dual = 0.0;
        const CrossHistory h = run_cross(
            initial_cross(problem, g), problem.params, cfg,
            [&](const CrossDiffState& s, const StepInfo& info) {
                wr.add(s.t, s.u, s.v);
                mon.observe(s);
                const double l2 = lp_norm(s.u, 2.0);
                if (info.step > 0) dual += 0.5 * (l2 * l2 + last_l2) * (s.t - last_t);
                last_t = s.t;
                last_l2 = l2 * l2;
            },
            1L << 40);
        RefineLevel& lv = rep.levels[l];
        lv.nx = g.nx();
        lv.ny = g.ny();
        lv.dt = cfg.dt;
        lv.weak_residual = wr.result().max_residual;
        lv.duality = std::sqrt(dual);
        lv.invariants = mon.summary();
        finals[l] = CrossDiffState{h.times.back(), h.u.back(), h.v.back()};
    });

    for (int l = 0; l + 1 < levels; ++l) {
        const CrossDiffState& lo = *finals[l];
        const CrossDiffState& hi = *finals[l + 1];
        const Field du = restrict_to(hi.u, lo.u.grid) - lo.u;
        const Field dv = restrict_to(hi.v, lo.v.grid) - lo.v;
        rep.diff_u_l1.push_back(lp_norm(du, 1.0));
        rep.diff_u_l2.push_back(lp_norm(du, 2.0));
        rep.diff_v_l2.push_back(lp_norm(dv, 2.0));
        const double next = rep.levels[l + 1].weak_residual;
        rep.weak_residual_ratios.push_back(next > 0.0 ? rep.levels[l].weak_residual / next
                                                      : std::numeric_limits<double>::infinity());
    }
    if (rep.diff_u_l2.size() >= 2) {
        std::vector<double> h;
        for (std::size_t l = 0; l < rep.diff_u_l2.size(); ++l) h.push_back(std::ldexp(1.0, -static_cast<int>(l)));
        rep.fitted_order = fit_loglog(h, rep.diff_u_l2, 0.0).slope;
    }
    return rep;
}

// ----------------------------------------------------------------- stability

Field perturbation_bump(const Grid& g) {
    const double lx = g.lx(), ly = g.ly();
    const bool two = g.dim() == 2;
    return Field::sample(g, [&](double x, double y) {
        const double bx = 0.5 * (1.0 + std::cos(std::numbers::pi * x / lx));
        return two ? bx * 0.5 * (1.0 + std::cos(std::numbers::pi * y / ly)) : bx;
    });
}

StabilityExperiment stability_experiment(const Problem& problem, const std::vector<double>& delta_list,
                                         const HarnessOptions& opts) {
    require_decreasing(delta_list, "delta_list", true);
    problem.params.validate();
    problem.solver.validate();
    if (opts.snapshot_every < 1) throw ValidationError("snapshot interval must be >= 1");

    const CrossDiffState init = initial_cross(problem, problem.grid);
    const Field bump = perturbation_bump(problem.grid);
    StabilityExperiment rep;
    rep.runs.resize(delta_list.size());
    CrossHistory base{problem.grid, {}, {}, {}};
    std::vector<CrossHistory> perturbed(delta_list.size(), base);

    parallel_for(delta_list.size() + 1, opts.threads, [&](std::size_t task) {
        InvariantMonitor mon(problem.params, problem.solver.dt);
        auto obs = [&mon](const CrossDiffState& s, const StepInfo&) { mon.observe(s); };
        if (task == 0) {
            base = run_cross(init, problem.params, problem.solver, obs, opts.snapshot_every);
            rep.base_invariants = mon.summary();
            return;
        }
        const std::size_t i = task - 1;
        const CrossDiffState pi{0.0, init.u + delta_list[i] * bump, init.v};
        perturbed[i] = run_cross(pi, problem.params, problem.solver, obs, opts.snapshot_every);
        rep.runs[i].invariants = mon.summary();
    });

    std::vector<double> ratios, rates;
    for (std::size_t i = 0; i < delta_list.size(); ++i) {
        StabilityRun& run = rep.runs[i];
        run.delta = delta_list[i];
        run.report = stability_compare(perturbed[i], base);
        run.gap_final = run.report.l2_diff_u.back() + run.report.l2_diff_v.back();
        rep.envelopes_ok = rep.envelopes_ok && run.report.envelope_ok;
        if (run.delta > 0.0) {
            run.gap_over_delta = run.gap_final / run.delta;
            ratios.push_back(*run.gap_over_delta);
            rates.push_back(run.report.fitted_growth_rate);
        }
    }
    if (!ratios.empty()) {
        const auto [lo, hi] = std::minmax_element(ratios.begin(), ratios.end());
        rep.ratio_spread = *lo > 0.0 ? *hi / *lo - 1.0 : std::numeric_limits<double>::infinity();
        double scale = 0.0, spread = 0.0;
        for (double r : rates) scale = std::max(scale, std::abs(r));
        for (double a : rates)
            for (double b : rates) spread = std::max(spread, std::abs(a - b));
        rep.rate_spread = scale > 0.0 ? spread / scale : 0.0;
    }
    return rep;
}

// ---------------------------------------------------------------------- JSON

namespace {

ordered_json opt_number(const std::optional<double>& v) { return v ? ordered_json(*v) : ordered_json(nullptr); }

ordered_json finite_or_null(double v) { return std::isfinite(v) && std::abs(v) < 1e299 ? ordered_json(v) : ordered_json(nullptr); }

} // namespace

ordered_json to_json(const InvariantSummary& s) {
    ordered_json j;
    j["states"] = s.states;
    j["ok"] = s.ok();
    j["v_bound"] = s.v_bound;
    j["max_v_excess"] = finite_or_null(s.max_v_excess);
    j["v_violations"] = s.v_violations;
    j["v_paper_bound"] = s.v_paper_bound;
    j["paper_v_exceedances"] = s.paper_v_exceedances;
    j["mass_excess"] = finite_or_null(s.mass_excess);
    j["mass_violations"] = s.mass_violations;
    if (s.fast) {
        j["min_dissipation"] = finite_or_null(s.min_dissipation);
        j["min_bound_margin"] = finite_or_null(s.min_bound_margin);
        j["dissipation_violations"] = s.dissipation_violations;
    }
    return j;
}

ordered_json to_json(const SlopeFit& f) {
    return {{"slope", opt_number(f.slope)}, {"floored", f.floored}};
}

ordered_json to_json(const SweepReport& r) {
    ordered_json j;
    j["eps_values"] = r.eps_values;
    ordered_json runs = ordered_json::array();
    for (const EpsRun& e : r.runs) {
        ordered_json x;
        x["epsilon"] = e.epsilon;
        x["failure"] = e.failure ? ordered_json(*e.failure) : ordered_json(nullptr);
        x["err_u_l1"] = e.err_u_l1;
        x["err_u_l2"] = e.err_u_l2;
        x["err_v_l1"] = e.err_v_l1;
        x["err_v_l2"] = e.err_v_l2;
        x["defect"] = e.defect;
        x["duality"] = e.duality;
        x["invariants"] = to_json(e.invariants);
        runs.push_back(std::move(x));
    }
    j["errors"] = std::move(runs);
    j["floor_u_l1"] = r.floor_u_l1;
    j["floor_u_l2"] = r.floor_u_l2;
    j["defect_p"] = r.defect_p;
    j["direct_duality"] = r.direct_duality;
    j["fitted_slopes"] = {{"u_l1", to_json(r.slope_u_l1)},
                          {"u_l2", to_json(r.slope_u_l2)},
                          {"v_l1", to_json(r.slope_v_l1)},
                          {"v_l2", to_json(r.slope_v_l2)},
                          {"defect", to_json(r.slope_defect)}};
    j["monotone_to_floor"] = r.monotone_to_floor;
    j["anomalies"] = r.anomalies;
    j["direct_invariants"] = to_json(r.direct_invariants);
    j["reference_invariants"] = to_json(r.reference_invariants);
    j["reference_meta"] = r.reference_meta;
    return j;
}

ordered_json to_json(const RefineReport& r) {
    ordered_json j;
    ordered_json lv = ordered_json::array();
    for (const RefineLevel& l : r.levels)
        lv.push_back({{"nx", l.nx},
                      {"ny", l.ny},
                      {"dt", l.dt},
                      {"weak_residual", l.weak_residual},
                      {"duality", l.duality},
                      {"invariants", to_json(l.invariants)}});
    j["levels"] = std::move(lv);
    j["diff_u_l1"] = r.diff_u_l1;
    j["diff_u_l2"] = r.diff_u_l2;
    j["diff_v_l2"] = r.diff_v_l2;
    j["fitted_order"] = opt_number(r.fitted_order);
    j["weak_residual_ratios"] = r.weak_residual_ratios;
    return j;
}

ordered_json to_json(const StabilityReport& r) {
    ordered_json j;
    j["t_grid"] = r.t_grid;
    j["l2_diff_u"] = r.l2_diff_u;
    j["l2_diff_v"] = r.l2_diff_v;
    j["initial_gap"] = r.initial_gap;
    j["fitted_growth_rate"] = r.fitted_growth_rate;
    j["envelope_max_ratio"] = finite_or_null(r.envelope_max_ratio);
    j["envelope_ok"] = r.envelope_ok;
    return j;
}

ordered_json to_json(const StabilityExperiment& r) {
    ordered_json j;
    ordered_json runs = ordered_json::array();
    for (const StabilityRun& s : r.runs)
        runs.push_back({{"delta", s.delta},
                        {"gap_final", s.gap_final},
                        {"gap_over_delta", opt_number(s.gap_over_delta)},
                        {"report", to_json(s.report)},
                        {"invariants", to_json(s.invariants)}});
    j["runs"] = std::move(runs);
    j["ratio_spread"] = r.ratio_spread;
    j["rate_spread"] = r.rate_spread;
    j["envelopes_ok"] = r.envelopes_ok;
    j["base_invariants"] = to_json(r.base_invariants);
    return j;
}

} // namespace xdl
