#include "doctest.h"

#include "xdifflab/error.hpp"
#include "xdifflab/fast_solver.hpp"
#include "xdifflab/harness.hpp"

#include <cmath>
#include <numeric>
#include <random>

using namespace xdl;

namespace {

FastReactionConfig preset_frc(const Problem& pb, double eps) {
    return build_fast_reaction(pb.params, pb.v_in.realize(pb.grid).max(), eps);
}

// classical RK4 on the linear exchange system
std::pair<double, double> rk4_exchange(double a, double b, double h, double k, double eps, double dt, int n) {
    const double tau = dt / n;
    auto f = [&](double x, double y) { return (k * y - h * x) / eps; };
    for (int s = 0; s < n; ++s) {
        const double k1 = f(a, b);
        const double k2 = f(a + 0.5 * tau * k1, b - 0.5 * tau * k1);
        const double k3 = f(a + 0.5 * tau * k2, b - 0.5 * tau * k2);
        const double k4 = f(a + tau * k3, b - tau * k3);
        const double d = tau * (k1 + 2 * k2 + 2 * k3 + k4) / 6;
        a += d;
        b -= d;
    }
    return {a, b};
}

} // namespace

TEST_CASE("exchange examples") {
    const auto r = exchange_exact(1.0, 0.0, 1.0, 1.0, 1.0, 1.0);
    CHECK(r.uA == doctest::Approx(0.567667641618306346).epsilon(1e-15));
    CHECK(r.uB == doctest::Approx(1.0 - 0.567667641618306346).epsilon(1e-14));
    CHECK(r.uA + r.uB == 1.0);

    const auto inf = exchange_exact(0.3, 0.9, 2.0, 6.0, 1e-6, 1.0);
    CHECK(inf.uA == doctest::Approx(0.9).epsilon(1e-15));
    CHECK(inf.uA + inf.uB == 0.3 + 0.9);

    const auto none = exchange_exact(0.3, 0.9, 2.0, 6.0, 0.1, 0.0);
    CHECK(none.uA == doctest::Approx(0.3).epsilon(1e-15));
    CHECK(none.uA + none.uB == 0.3 + 0.9);

    CHECK_THROWS_AS(exchange_exact(1, 1, 0, 0, 0.1, 0.1), ValidationError);
    CHECK_THROWS_AS(exchange_exact(1, 1, -1, 2, 0.1, 0.1), ValidationError);
    CHECK_THROWS_AS(exchange_exact(1, 1, 1, 2, 0.0, 0.1), ValidationError);
}

TEST_CASE("exchange agrees with fine RK4 and conserves the sum") {
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (int trial = 0; trial < 100; ++trial) {
        const double a = 2 * unit(rng), b = 2 * unit(rng);
        const double h = 0.1 + 3 * unit(rng), k = 0.1 + 3 * unit(rng);
        const double eps = std::pow(10.0, -4 + 3 * unit(rng));
        const double z = 0.01 + 4.99 * unit(rng);
        const double dt = z * eps / (h + k);
        const auto r = exchange_exact(a, b, h, k, eps, dt);
        CHECK(r.uA + r.uB == a + b);
        const auto [ra, rb] = rk4_exchange(a, b, h, k, eps, dt, 1000);
        CHECK(std::abs(r.uA - ra) <= 1e-10 * (a + b));
        CHECK(std::abs(r.uB - rb) <= 1e-10 * (a + b));
    }
}

TEST_CASE("mollifier kernel and regularised data") {
    const Grid g = Grid::line(200, 1.0);
    for (double eps : {0.1, 0.05, 0.02}) {
        const auto kern = mollifier_kernel(g, eps);
        CHECK(std::accumulate(kern.weights.begin(), kern.weights.end(), 0.0) == doctest::Approx(1.0).epsilon(1e-14));
        for (double w : kern.weights) CHECK(w >= 0.0);
        const Field m = mollify_initial(Field(g, 2.0), eps);
        CHECK(m.min() >= eps);
        for (int i = 0; i < g.nx(); ++i)
            if (g.boundary_distance(i) >= 2 * eps + eps) CHECK(m[g.index(i)] == doctest::Approx(2.0 + eps).epsilon(1e-13));
    }
    const Grid g2 = Grid::rect(40, 40, 1.0, 1.0);
    const auto kern2 = mollifier_kernel(g2, 0.1);
    CHECK(std::accumulate(kern2.weights.begin(), kern2.weights.end(), 0.0) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(mollify_initial(Field(g2, 0.0), 0.1).min() == doctest::Approx(0.1));

    // below one cell the data is passed through plus eps
    const Field u = Field::sample(g, [](double x, double) { return 1.0 + x; });
    const Field m = mollify_initial(u, 1e-4);
    for (std::size_t k = 0; k < u.size(); ++k) CHECK(m[k] == doctest::Approx(u[k] + 1e-4).epsilon(1e-15));
    CHECK_THROWS_AS(mollify_initial(u, 0.0), ValidationError);
}

TEST_CASE("partition identities") {
    const Problem pb = skt_preset();
    const auto frc = preset_frc(pb, 0.01);
    const Field u = pb.u_in.realize(pb.grid), v = pb.v_in.realize(pb.grid);
    const auto part = partition_initial(u, v, frc);
    for (std::size_t k = 0; k < u.size(); ++k) {
        CHECK(part.uA[k] + part.uB[k] == doctest::Approx(u[k]).epsilon(1e-15));
        CHECK(frc.h(v[k]) * part.uA[k] == doctest::Approx(frc.k(v[k]) * part.uB[k]).epsilon(1e-13));
    }
    const FastState s = prepare_fast_initial(u, v, frc);
    for (std::size_t k = 0; k < u.size(); ++k) CHECK(s.v[k] == doctest::Approx(v[k] + 0.01).epsilon(1e-15));
    CHECK(s.uA.min() >= 0.01);
    CHECK(s.uB.min() >= 0.01);
}

TEST_CASE("effective diffusion rate") {
    const Grid g = Grid::line(4, 1.0);
    FastReactionConfig frc;
    frc.d_A = 0.5;
    frc.d_B = 2.0;
    FastState s{0.0, Field(g, std::vector<double>{1, 0, 1, 0}), Field(g, std::vector<double>{0, 1, 3, 0}),
                Field(g, 1.0)};
    const Field m = effective_m(s, frc);
    CHECK(m[0] == 0.5);
    CHECK(m[1] == 2.5);
    CHECK(m[2] == doctest::Approx((0.5 + 3 * 2.5) / 4));
    CHECK(m[3] == 0.5);
    for (double x : m.values) {
        CHECK(x >= frc.d_A);
        CHECK(x <= frc.d_A + frc.d_B);
    }
}

TEST_CASE("uniform equilibrium does not drift") {
    const Problem pb = theorem1_preset();
    const auto frc = preset_frc(pb, 1e-3);
    const double u = 0.843070330817253582, v = 0.578464834591373209;
    const double h = frc.h(v), k = frc.k(v);
    const FastState init{0.0, Field(pb.grid, k * u / (h + k)), Field(pb.grid, h * u / (h + k)), Field(pb.grid, v)};
    SolverConfig cfg = pb.solver;
    cfg.t_end = 0.1;
    const auto hist = run_fast(init, pb.params, frc, cfg, {}, 100000);
    for (std::size_t c = 0; c < pb.grid.size(); ++c) {
        CHECK(std::abs(hist.uA.back()[c] + hist.uB.back()[c] - u) <= 1e-8 * u);
        CHECK(std::abs(hist.v.back()[c] - v) <= 1e-8 * v);
    }
}

TEST_CASE("with h = 0 and no stressed population uA diffuses at rate d_A") {
    Problem pb = skt_preset();
    pb.params.phi = CrossFunction::linear(0.0);
    FastReactionConfig frc;
    frc.d_A = 0.35;
    frc.d_B = 1.0;
    frc.epsilon = 0.5;
    frc.h = [](double) { return 0.0; };
    frc.k = [](double) { return 1.0; };
    ModelParams direct = pb.params;
    direct.d_u = frc.d_A;

    SolverConfig cfg = pb.solver;
    cfg.t_end = 0.05;
    const Field u = pb.u_in.realize(pb.grid), v = pb.v_in.realize(pb.grid);
    const auto fast = run_fast({0.0, u, Field(pb.grid, 0.0), v}, pb.params, frc, cfg, {}, 1000000);
    const auto ref = run_cross({0.0, u, v}, direct, cfg, {}, 1000000);
    for (double x : fast.uB.back().values) CHECK(x == 0.0);
    CHECK(lp_norm(fast.uA.back() - ref.u.back(), kInfinityNorm) <= 1e-8);
    CHECK(lp_norm(fast.v.back() - ref.v.back(), kInfinityNorm) <= 1e-8);
}

TEST_CASE("fast runs stay nonnegative and are deterministic") {
    const Problem pb = skt_preset();
    const auto frc = preset_frc(pb, 1e-3);
    const Field u = pb.u_in.realize(pb.grid), v = pb.v_in.realize(pb.grid);
    const FastState init = prepare_fast_initial(u, v, frc);
    SolverConfig cfg = pb.solver;
    cfg.t_end = 0.05;
    long calls = 0;
    const auto a = run_fast(init, pb.params, frc, cfg, [&](const FastState& s, const StepInfo&) {
        ++calls;
        CHECK(s.uA.min() >= 0.0);
        CHECK(s.uB.min() >= 0.0);
        CHECK(s.v.min() >= 0.0);
    }, 100);
    const auto b = run_fast(init, pb.params, frc, cfg, {}, 100);
    CHECK(calls == cfg.step_count() + 1);
    CHECK(a.size() == 4);
    CHECK(a.uA.back().values == b.uA.back().values);
    CHECK(a.uB.back().values == b.uB.back().values);

    FastReactionConfig empty;
    CHECK_THROWS_AS(step_fast(init, pb.params, empty, cfg), ValidationError);
}
