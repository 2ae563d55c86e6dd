#include "doctest.h"

#include "xdifflab/error.hpp"
#include "xdifflab/harness.hpp"
#include "xdifflab/xdiff_solver.hpp"

#include <cmath>

using namespace xdl;

namespace {

CrossDiffState uniform_state(const Grid& g, double u, double v) { return {0.0, Field(g, u), Field(g, v)}; }

double max_abs_diff(const Field& a, const Field& b) {
    double m = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) m = std::max(m, std::abs(a[k] - b[k]));
    return m;
}

CrossDiffState run_to(const Problem& pb, double dt, double t_end) {
    SolverConfig cfg = pb.solver;
    cfg.dt = dt;
    cfg.t_end = t_end;
    const CrossDiffState init{0.0, pb.u_in.realize(pb.grid), pb.v_in.realize(pb.grid)};
    const auto h = run_cross(init, pb.params, cfg, {}, 1000000);
    return {h.times.back(), h.u.back(), h.v.back()};
}

} // namespace

TEST_CASE("steady states do not drift") {
    struct Case {
        Problem pb;
        double u, v;
    };
    for (const auto& c : {Case{skt_preset(), 2.0 / 3.0, 2.0 / 3.0},
                          Case{theorem1_preset(), 0.843070330817253582, 0.578464834591373209}}) {
        CHECK(std::abs(reaction_u(c.u, c.v, c.pb.params)) <= 1e-15);
        CHECK(std::abs(reaction_v(c.u, c.v, c.pb.params)) <= 1e-15);
        SolverConfig cfg = c.pb.solver;
        cfg.t_end = 0.2;
        const auto h = run_cross(uniform_state(c.pb.grid, c.u, c.v), c.pb.params, cfg, {}, 100000);
        for (std::size_t k = 0; k < c.pb.grid.size(); ++k) {
            CHECK(std::abs(h.u.back()[k] - c.u) <= 1e-8 * c.u);
            CHECK(std::abs(h.v.back()[k] - c.v) <= 1e-8 * c.v);
        }
    }
}

TEST_CASE("uniform states follow the scalar semi-implicit recurrence") {
    const Problem pb = theorem1_preset();
    const auto& p = pb.params;
    SolverConfig cfg = pb.solver;
    cfg.dt = 1e-2;
    cfg.linear_tol = 1e-14;
    CrossDiffState s = uniform_state(Grid::rect(6, 5, 1.0, 1.0), 0.3, 1.4);
    double u = 0.3, v = 1.4;
    for (int n = 0; n < 50; ++n) {
        s = step_cross(s, p, cfg);
        v = v / (1.0 + cfg.dt * (p.r_c * std::pow(v, p.c) + p.r_d * std::pow(u, p.d) - p.r_v));
        u = u / (1.0 + cfg.dt * (p.r_a * std::pow(u, p.a) + p.r_b * std::pow(v, p.b) - p.r_u));
    }
    for (std::size_t k = 0; k < s.u.size(); ++k) {
        CHECK(s.u[k] == doctest::Approx(u).epsilon(1e-12));
        CHECK(s.v[k] == doctest::Approx(v).epsilon(1e-12));
    }
}

TEST_CASE("u = 0 is invariant and v follows logistic diffusion") {
    const Problem pb = skt_preset();
    SolverConfig cfg = pb.solver;
    cfg.t_end = 0.05;
    const CrossDiffState init{0.0, Field(pb.grid, 0.0), pb.v_in.realize(pb.grid)};
    const auto h = run_cross(init, pb.params, cfg, {}, 1);

    Field v = init.v;
    for (std::size_t n = 1; n < h.size(); ++n) {
        for (double x : h.u[n].values) CHECK(x == 0.0);
        // the same v update with u = 0 and phi irrelevant
        ModelParams q = pb.params;
        q.phi = CrossFunction::linear(0.0);
        v = step_cross({h.times[n - 1], Field(pb.grid, 0.0), v}, q, cfg).v;
        CHECK(max_abs_diff(v, h.v[n]) <= 1e-14);
    }
}

TEST_CASE("zero horizon returns only the initial state") {
    const Problem pb = skt_preset();
    SolverConfig cfg = pb.solver;
    cfg.t_end = 0.0;
    int calls = 0;
    const CrossDiffState init{0.0, pb.u_in.realize(pb.grid), pb.v_in.realize(pb.grid)};
    const auto h = run_cross(init, pb.params, cfg, [&](const CrossDiffState&, const StepInfo&) { ++calls; });
    CHECK(h.size() == 1);
    CHECK(calls == 1);
    CHECK(h.u[0].values == init.u.values);
}

TEST_CASE("shortened final step lands on t_end") {
    SolverConfig cfg;
    cfg.dt = 0.3;
    cfg.t_end = 1.0;
    CHECK(cfg.step_count() == 4);
    cfg.dt = 0.1;
    CHECK(cfg.step_count() == 10);
    const Problem pb = skt_preset();
    cfg.dt = 0.03;
    cfg.t_end = 0.1;
    const CrossDiffState init{0.0, pb.u_in.realize(pb.grid), pb.v_in.realize(pb.grid)};
    const auto h = run_cross(init, pb.params, cfg);
    CHECK(h.size() == 5);
    CHECK(h.times.back() == doctest::Approx(0.1).epsilon(1e-15));
}

TEST_CASE("runs are bitwise deterministic") {
    Problem pb = theorem1_preset();
    pb.solver.t_end = 0.05;
    const auto a = run_to(pb, pb.solver.dt, pb.solver.t_end);
    const auto b = run_to(pb, pb.solver.dt, pb.solver.t_end);
    CHECK(a.u.values == b.u.values);
    CHECK(a.v.values == b.v.values);
}

TEST_CASE("first-order self-convergence in time") {
    Problem pb = skt_preset();
    pb.grid = Grid::line(50, 1.0);
    const double T = 0.2;
    const auto s1 = run_to(pb, 4e-3, T);
    const auto s2 = run_to(pb, 2e-3, T);
    const auto s4 = run_to(pb, 1e-3, T);
    const double ratio = lp_norm(s1.u - s2.u, 2.0) / lp_norm(s2.u - s4.u, 2.0);
    CHECK(ratio >= 1.8);
    CHECK(ratio <= 2.2);
}

TEST_CASE("discrete maximum principle for v and mass inequality") {
    for (const Problem& pb : {skt_preset(), theorem1_preset()}) {
        SolverConfig cfg = pb.solver;
        cfg.t_end = 0.3;
        InvariantMonitor mon(pb.params, cfg.dt);
        const CrossDiffState init{0.0, pb.u_in.realize(pb.grid), pb.v_in.realize(pb.grid)};
        run_cross(init, pb.params, cfg, [&](const CrossDiffState& s, const StepInfo&) {
            mon.observe(s);
            CHECK(s.u.min() >= 0.0);
            CHECK(s.v.min() >= 0.0);
        });
        CHECK(mon.summary().ok());
        CHECK(mon.summary().max_v_excess <= 1e-9);
        CHECK(mon.summary().mass_excess <= 0.0);
    }
}

TEST_CASE("positivity failures and invalid input") {
    Problem pb = skt_preset();
    pb.params.r_u = 5.0;
    SolverConfig cfg = pb.solver;
    cfg.dt = 0.5;
    const CrossDiffState small = uniform_state(pb.grid, 1e-3, 1e-3);
    CHECK_THROWS_AS(step_cross(small, pb.params, cfg), PositivityError);

    Field bad(pb.grid, 1.0);
    bad[3] = -0.1;
    CHECK_THROWS_AS(run_cross({0.0, bad, Field(pb.grid, 1.0)}, pb.params, pb.solver), ValidationError);
    bad[3] = INFINITY;
    CHECK_THROWS_AS(run_cross({0.0, Field(pb.grid, 1.0), bad}, pb.params, pb.solver), ValidationError);
    cfg.dt = -1.0;
    CHECK_THROWS_AS(run_cross(small, pb.params, cfg), ValidationError);
}

TEST_CASE("2D run preserves mirror symmetry") {
    Problem pb = skt_preset();
    pb.grid = Grid::rect(16, 16, 1.0, 1.0);
    pb.solver.t_end = 0.05;
    pb.solver.dt = 1e-2;
    pb.u_in.mode_y = 2;
    pb.v_in.mode = 2;
    const auto s = run_to(pb, pb.solver.dt, pb.solver.t_end);
    for (int i = 0; i < 16; ++i)
        for (int j = 0; j < 16; ++j) CHECK(s.u[pb.grid.index(i, j)] == doctest::Approx(s.u[pb.grid.index(15 - i, j)]).epsilon(1e-9));
}
