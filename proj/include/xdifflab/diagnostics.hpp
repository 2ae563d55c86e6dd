#pragma once

#include "xdifflab/fast_solver.hpp"
#include "xdifflab/grid.hpp"
#include "xdifflab/model.hpp"
#include "xdifflab/xdiff_solver.hpp"

#include <array>
#include <functional>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

namespace xdl {

/// One row of monitored quantities. Fast-only entries (entropy, defect,
/// dissipation) stay empty or zero for direct-solver states.
struct DiagnosticsRecord {
    double t = 0.0;
    double mass_u = 0.0;
    std::map<double, double> lp_u;
    double linf_v = 0.0;
    double grad_v_l2 = 0.0;
    std::map<double, double> entropy;
    double relaxation_defect = 0.0;
    double exchange_dissipation = 0.0;
    double duality_accum = 0.0;

    bool operator==(const DiagnosticsRecord&) const = default;
};

/// integral of h(v)^(p-1) uA^p / p + k(v)^(p-1) uB^p / p; p > 0, p != 1.
double entropy(const FastState& s, const FastReactionConfig& frc, double p);

/// || (h uA)^(p/2) - (k uB)^(p/2) ||_{L^2}.
double relaxation_defect(const FastState& s, const FastReactionConfig& frc, double p);

struct SignCheck {
    double min_cellwise = 0.0; // sign-adjusted product, >= 0 in exact arithmetic
    double integral = 0.0;     // integral of the sign-adjusted product
    double c_p = 0.0;          // p < 1 only: constant of the lower bound
    double bound_margin = 0.0; // p < 1 only: min of product - c_p |x^(p/2) - y^(p/2)|^2
    long singular_cells = 0;   // p < 1 cells with exactly one of x, y zero (product +inf)
};

/// Evaluates (x - y)(x^(p-1) - y^(p-1)) with x = k uB, y = h uA, negated for p < 1.
SignCheck exchange_dissipation_signcheck(const FastState& s, const FastReactionConfig& frc, double p);

/// inf over x > 0 of (x-1)(1-x^(p-1)) / (x^(p/2)-1)^2 for p in (0, 1), by a
/// logarithmic scan combined with the x -> 1 limit 4(1-p)/p^2.
double elementary_constant(double p);

/// Space-time test function psi(t, x, y) = theta(t) X(x, y).
struct TestFunction {
    std::string name;
    std::function<double(double, double)> space;
    std::function<std::array<double, 2>(double, double)> space_grad;
    std::function<double(double)> time;
    std::function<double(double)> time_deriv;
};

/// Separable Neumann-compatible polynomials {1, s^2(3-2s), s^2(1-s)^2} per
/// axis times theta(t) = 1 - 3 tau^2 + 2 tau^3, tau = t / horizon.
std::vector<TestFunction> default_test_set(const Grid& g, double horizon);

struct WeakResidual {
    double max_residual = 0.0;
    std::vector<double> u_residuals; // per test function
    std::vector<double> v_residuals;
};

/// Streaming form of weak_residual: feed snapshots in time order.
class WeakResidualAccumulator {
public:
    WeakResidualAccumulator(const Grid& g, ModelParams params, std::vector<TestFunction> tests);
    void add(double t, const Field& u, const Field& v);
    long snapshots() const noexcept { return count_; }
    /// Throws ComparisonError with fewer than 3 snapshots.
    WeakResidual result() const;

private:
    struct Sums {
        double initial = 0.0; // theta(t0) * integral psi w(t0)
        double dt_term = 0.0;
        double grad = 0.0;
        double src = 0.0;
        double last_mass = 0.0, last_grad = 0.0, last_src = 0.0;
    };
    void accumulate(Sums& s, const TestFunction& tf, double t, double mass, double grad, double src);

    Grid grid_;
    ModelParams params_;
    std::vector<TestFunction> tests_;
    std::vector<std::vector<double>> psi_;
    std::vector<Sums> u_, v_;
    long count_ = 0;
    double last_t_ = 0.0;
};

/// Violation of both weak-form identities for every test function. Time
/// integrals use the trapezoid rule on snapshots except the psi_t u term,
/// which is integrated exactly against the piecewise-linear interpolant.
WeakResidual weak_residual(const CrossHistory& h, const ModelParams& params, const std::vector<TestFunction>& tests);

/// ||u||_{L^2([0,T] x Omega)} by the trapezoid rule on the snapshot times.
double duality_accumulate(const std::vector<double>& times, const std::vector<Field>& u);
double duality_accumulate(const CrossHistory& h);
double duality_accumulate(const FastHistory& h);

struct StabilityReport {
    std::vector<double> t_grid;
    std::vector<double> l2_diff_u;
    std::vector<double> l2_diff_v;
    double initial_gap = 0.0;
    double fitted_growth_rate = 0.0;
    double envelope_max_ratio = 0.0; // max of gap(t) / (initial_gap exp(R_m t)), R_m = R + 0.1 |R|
    bool envelope_ok = true;
};

/// Both histories must share grid and snapshot times (ComparisonError otherwise).
StabilityReport stability_compare(const CrossHistory& h1, const CrossHistory& h2);

struct RecordOptions {
    std::vector<double> p_list{2.0};
    double defect_p = 2.0;
};

DiagnosticsRecord record(const CrossDiffState& s, const RecordOptions& opts);
DiagnosticsRecord record(const FastState& s, const FastReactionConfig& frc, const RecordOptions& opts);

/// || grad v ||_{L^2} from face differences.
double grad_l2(const Field& v);

std::string to_ndjson(const DiagnosticsRecord& r);

/// Observer sink: fills duality_accum as a running trapezoid of ||u||_2^2 and
/// optionally streams NDJSON lines. Single writer.
class DiagnosticsSink {
public:
    explicit DiagnosticsSink(RecordOptions opts, std::ostream* ndjson = nullptr, bool keep = true);

    void observe(const CrossDiffState& s);
    void observe(const FastState& s, const FastReactionConfig& frc);

    const std::vector<DiagnosticsRecord>& records() const noexcept { return records_; }
    double duality_norm() const;

private:
    void push(DiagnosticsRecord r, double l2sq);

    RecordOptions opts_;
    std::ostream* out_;
    bool keep_;
    std::vector<DiagnosticsRecord> records_;
    bool started_ = false;
    double last_t_ = 0.0;
    double last_l2sq_ = 0.0;
    double accum_ = 0.0;
};

} // namespace xdl
