#include "doctest.h"

#include "xdifflab/error.hpp"
#include "xdifflab/model.hpp"

#include <cmath>
#include <random>

using namespace xdl;

namespace {

ModelParams unit_params() {
    ModelParams p;
    p.phi = CrossFunction::linear(1.0);
    return p;
}

} // namespace

TEST_CASE("reaction terms") {
    const ModelParams p = unit_params();
    CHECK(reaction_u(0.5, 0.25, p) == doctest::Approx(0.5 * (1 - 0.5 - 0.25)));
    CHECK(reaction_v(0.5, 0.25, p) == doctest::Approx(0.25 * (1 - 0.25 - 0.5)));
    CHECK(reaction_u(0.0, 3.0, p) == 0.0);
    CHECK(reaction_v(3.0, 0.0, p) == 0.0);
    CHECK_THROWS_AS(reaction_u(-1e-3, 1.0, p), ValidationError);
    CHECK_THROWS_AS(reaction_v(1.0, std::nan(""), p), ValidationError);

    ModelParams q = p;
    q.a = 2;
    q.r_b = 0.5;
    CHECK(reaction_u(2.0, 4.0, q) == doctest::Approx(2.0 * (1 - 4 - 2)));
}

TEST_CASE("regime classification") {
    ModelParams p = unit_params();
    CHECK(p.regime() == Regime::theorem2);
    p.a = 2;
    CHECK(p.regime() == Regime::theorem1);
    p.a = 0.5;
    p.d = 3;
    CHECK(p.regime() == Regime::unsupported);
    p.a = 1.5;
    p.d = 1.5;
    CHECK(p.regime() == Regime::unsupported);
    p.a = 1;
    p.d = 2;
    CHECK(p.regime() == Regime::theorem2);
}

TEST_CASE("coefficient validation") {
    ModelParams p = unit_params();
    CHECK_NOTHROW(p.validate());
    p.r_c = 0.0;
    CHECK_THROWS_AS(p.validate(), ModelError);
    p = unit_params();
    p.d_v = std::nan("");
    CHECK_THROWS_AS(p.validate(), ModelError);
}

TEST_CASE("cross functions") {
    CHECK(CrossFunction::linear(2.0)(1.5) == 3.0);
    CHECK(CrossFunction::linear(2.0).derivative(7.0) == 2.0);
    CHECK(CrossFunction::power(3.0, 2.0)(2.0) == doctest::Approx(12.0));
    CHECK(CrossFunction::power(3.0, 0.0)(5.0) == doctest::Approx(3.0));
    CHECK_THROWS_AS(CrossFunction::power(1.0, 0.5), ModelError);
    CHECK_THROWS_AS(CrossFunction::power(-1.0, 1.0), ModelError);
    CHECK_THROWS_AS(CrossFunction::linear(-0.1), ModelError);

    CHECK_THROWS_AS(CrossFunction::tabulated({{0.1, 0.0}, {1.0, 1.0}}), ModelError);
    CHECK_THROWS_AS(CrossFunction::tabulated({{0.0, 0.0}, {1.0, -1.0}}), ModelError);
    CHECK_THROWS_AS(CrossFunction::tabulated({{0.0, 0.0}, {0.0, 1.0}}), ModelError);

    const auto tab = CrossFunction::tabulated({{0.0, 0.0}, {0.5, 0.1}, {1.0, 1.0}, {2.0, 1.2}});
    CHECK(tab(0.5) == doctest::Approx(0.1));
    CHECK(tab(1.0) == doctest::Approx(1.0));
    double prev = -1.0;
    for (int s = 0; s <= 3000; ++s) {
        const double v = 3.0 * s / 3000;
        CHECK(tab(v) >= prev);
        prev = tab(v);
    }
    // derivative continuity across a node and at the end of the table
    for (double node : {0.5, 1.0, 2.0})
        CHECK(tab.derivative(node - 1e-9) == doctest::Approx(tab.derivative(node + 1e-9)).epsilon(1e-5));
    CHECK(tab(3.0) == doctest::Approx(1.2 + tab.derivative(2.0)));
}

TEST_CASE("v bounds") {
    ModelParams p = unit_params();
    auto b = v_bound_constants(p, 0.3);
    CHECK(b.paper_bound == doctest::Approx(0.5));
    CHECK(b.comparison_bound == doctest::Approx(1.0));
    b = v_bound_constants(p, 1.5);
    CHECK(b.paper_bound == 1.5);
    CHECK(b.comparison_bound == 1.5);
    p.r_v = 3;
    p.r_c = 0.5;
    p.c = 2;
    b = v_bound_constants(p, 0.0);
    CHECK(b.paper_bound == doctest::Approx(std::sqrt(2.0)));
    CHECK(b.comparison_bound == doctest::Approx(std::sqrt(6.0)));
    CHECK(v_reaction_zero(p) == doctest::Approx(std::sqrt(6.0)));
}

TEST_CASE("mass growth constants") {
    ModelParams p = unit_params();
    auto m = mass_growth_constant(p);
    CHECK(m.k_paper == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(m.k_true == doctest::Approx(0.25).epsilon(1e-15));
    p.a = 2;
    m = mass_growth_constant(p);
    CHECK(m.k_paper == doctest::Approx(0.5773502691896257).epsilon(1e-14));
    CHECK(m.k_true == doctest::Approx(0.38490017945975047).epsilon(1e-14));

    // the supremum of (r_u - r_a w^a) w over a dense scan
    for (double a : {0.5, 1.0, 2.0, 3.5}) {
        p.a = a;
        p.r_u = 1.7;
        p.r_a = 0.6;
        double best = 0.0;
        for (int s = 1; s <= 200000; ++s) {
            const double w = 10.0 * s / 200000;
            best = std::max(best, (p.r_u - p.r_a * std::pow(w, a)) * w);
        }
        CHECK(mass_growth_constant(p).k_true == doctest::Approx(best).epsilon(1e-7));
        CHECK(mass_growth_constant(p).k_true >= best);
    }
}

TEST_CASE("cutoff is C2 and bracketed") {
    const double v1 = 0.8;
    CHECK(cutoff(0.0, v1) == 1.0);
    CHECK(cutoff(v1, v1) == 1.0);
    CHECK(cutoff(2 * v1, v1) == 0.0);
    CHECK(cutoff(5.0, v1) == 0.0);
    CHECK(cutoff(1.5 * v1, v1) == doctest::Approx(0.5));
    double prev = 1.0;
    for (int s = 0; s <= 1000; ++s) {
        const double v = 2.5 * v1 * s / 1000;
        CHECK(cutoff(v, v1) <= prev);
        prev = cutoff(v, v1);
    }
    const double h = 1e-5;
    for (double e : {v1, 2 * v1}) {
        const double d1l = (cutoff(e, v1) - cutoff(e - h, v1)) / h;
        const double d1r = (cutoff(e + h, v1) - cutoff(e, v1)) / h;
        CHECK(std::abs(d1l) < 1e-6);
        CHECK(std::abs(d1r) < 1e-6);
    }
}

TEST_CASE("fast reaction construction") {
    ModelParams p = unit_params();
    p.d_u = 1.0;
    p.phi = CrossFunction::linear(2.0);
    const auto frc = build_fast_reaction(p, 1.0, 0.01);
    CHECK(frc.v1 == doctest::Approx(1.0));
    CHECK(frc.phi1 == doctest::Approx(2.2610415538674948).epsilon(1e-10));
    CHECK(frc.d_A == 0.5);
    CHECK(frc.d_B == doctest::Approx(1.0 + 2.2610415538674948).epsilon(1e-10));
    CHECK(frc.h(0.5) == doctest::Approx(1.5));
    CHECK(frc.k(0.5) == doctest::Approx(0.5 + frc.phi1 - 1.0));
    CHECK(compatibility_residual(frc, p.d_u, 10000) <= 1e-12);

    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> dist(0.0, 2.0 * frc.v1);
    for (int s = 0; s < 10000; ++s) {
        const double v = dist(rng);
        const double h = frc.h(v), k = frc.k(v);
        CHECK(h + k == doctest::Approx(frc.d_B).epsilon(1e-14));
        CHECK(h >= frc.h0 - 1e-15);
        CHECK(k >= frc.h0 - 1e-12);
        CHECK(std::abs(frc.d_A + frc.d_B * h / (h + k) - (p.d_u + frc.phi_B(v))) <= 1e-12);
    }
    CHECK(frc.phi_B(2.5 * frc.v1) == 0.0);

    CHECK_THROWS_AS(build_fast_reaction(p, 1.0, 0.0), ValidationError);
    CHECK_THROWS_AS(build_fast_reaction(p, 1.0, 1.0), ValidationError);
    CHECK_THROWS_AS(build_fast_reaction(p, -1.0, 0.1), ValidationError);
}

TEST_CASE("tabulated phi compatibility") {
    ModelParams p = unit_params();
    p.d_u = 0.3;
    p.phi = CrossFunction::tabulated({{0.0, 0.0}, {0.2, 0.5}, {0.6, 0.4}, {1.0, 1.5}});
    const auto frc = build_fast_reaction(p, 1.2, 0.05);
    CHECK(frc.phi1 >= 1.0);
    CHECK(compatibility_residual(frc, p.d_u) <= 1e-12);
}
