#pragma once

#include "xdifflab/diagnostics.hpp"
#include "xdifflab/fast_solver.hpp"
#include "xdifflab/grid.hpp"
#include "xdifflab/model.hpp"
#include "xdifflab/xdiff_solver.hpp"

#include "json.hpp"

#include <optional>
#include <string>
#include <vector>

namespace xdl {

/// Initial profile: constant, separable cosine mode, or a snapshot CSV.
struct InitialProfile {
    enum class Kind { constant, cosine, file };
    Kind kind = Kind::constant;
    double mean = 1.0;
    double amplitude = 0.0;
    double mode = 1.0;   // cos(mode * pi * x / lx)
    double mode_y = 0.0; // cos(mode_y * pi * y / ly), 2D only
    std::string path;

    Field realize(const Grid& g) const;
    bool operator==(const InitialProfile&) const = default;
};

std::string to_string(InitialProfile::Kind k);

struct Problem {
    ModelParams params;
    Grid grid = Grid::line(200, 1.0);
    SolverConfig solver;
    InitialProfile u_in;
    InitialProfile v_in;

    bool operator==(const Problem&) const = default;
};

/// SKT system (phi linear, a = b = c = d = 1; second regime).
Problem skt_preset();
/// a = 2, d = 1, b = c = 1 (first regime).
Problem theorem1_preset();

/// Entropy/defect exponents used when the config leaves them unset.
std::vector<double> default_p_list(Regime r);
double default_defect_p(Regime r);

/// Per-run checks of the a-priori bounds, evaluated on every accepted step.
struct InvariantSummary {
    long states = 0;
    double v_bound = 0.0;           // max(max v(0), (r_v/r_c)^(1/c))
    double v_paper_bound = 0.0;     // max(max v(0), [r_v/(r_c(c+1))]^(1/c))
    double max_v_excess = -1e300;   // max over states of max v - v_bound
    long v_violations = 0;          // excess beyond 1e-9
    long paper_v_exceedances = 0;   // logged only
    double mass_excess = -1e300;    // max of mass - (mass(0) + k_true |Omega| t + 1e-9 t/dt)
    long mass_violations = 0;
    double min_dissipation = 1e300; // min sign-adjusted exchange product, fast runs only
    double min_bound_margin = 1e300;
    long dissipation_violations = 0;
    bool fast = false;

    bool ok() const noexcept { return v_violations == 0 && mass_violations == 0 && dissipation_violations == 0; }
    void merge(const InvariantSummary& o);
};

class InvariantMonitor {
public:
    InvariantMonitor(const ModelParams& p, double dt);
    void observe(const CrossDiffState& s);
    void observe(const FastState& s, const FastReactionConfig& frc);
    const InvariantSummary& summary() const noexcept { return sum_; }

    /// Exponents whose exchange products are checked on fast states.
    static constexpr double kSignExponents[] = {2.0, 1.5, 0.5};

private:
    void check(double t, const Field& u, const Field& v);

    ModelParams params_;
    double dt_;
    double k_true_;
    double mass0_ = 0.0;
    InvariantSummary sum_;
};

struct SlopeFit {
    std::optional<double> slope;
    std::vector<bool> floored; // points excluded for sitting within 3x of the floor
};

/// Least-squares slope of log y against log x, skipping points with
/// y <= 3 * floor (pass floor = 0 to use every positive point).
SlopeFit fit_loglog(const std::vector<double>& x, const std::vector<double>& y, double floor);

struct HarnessOptions {
    int threads = 1;
    double defect_p = 2.0;
    long snapshot_every = 50; // stability histories
};

struct EpsRun {
    double epsilon = 0.0;
    std::optional<std::string> failure;
    double err_u_l1 = 0.0; // sup in time
    double err_u_l2 = 0.0;
    double err_v_l1 = 0.0;
    double err_v_l2 = 0.0;
    double defect = 0.0;  // ||(h uA)^(p/2) - (k uB)^(p/2)||_{L^2([0,T] x Omega)}
    double duality = 0.0; // ||uA + uB||_{L^2([0,T] x Omega)}
    InvariantSummary invariants;
};

struct SweepReport {
    std::vector<double> eps_values;
    std::vector<EpsRun> runs;
    double floor_u_l1 = 0.0;
    double floor_u_l2 = 0.0;
    double direct_duality = 0.0;
    double defect_p = 2.0;
    SlopeFit slope_u_l1, slope_u_l2, slope_v_l1, slope_v_l2, slope_defect;
    bool monotone_to_floor = true;
    std::vector<std::string> anomalies;
    InvariantSummary direct_invariants;
    InvariantSummary reference_invariants;
    nlohmann::ordered_json reference_meta;
};

/// Fast runs per eps against one direct run on the same grid and dt, plus a
/// (dt/2, h/2) direct reference that measures the discretization floor.
SweepReport eps_sweep(const Problem& problem, const std::vector<double>& eps_list, const HarnessOptions& opts);

struct RefineLevel {
    int nx = 0;
    int ny = 0;
    double dt = 0.0;
    double weak_residual = 0.0;
    double duality = 0.0;
    InvariantSummary invariants;
};

struct RefineReport {
    std::vector<RefineLevel> levels;
    std::vector<double> diff_u_l1; // ||u_{l+1}(T) restricted - u_l(T)||
    std::vector<double> diff_u_l2;
    std::vector<double> diff_v_l2;
    std::optional<double> fitted_order;
    std::vector<double> weak_residual_ratios; // residual_l / residual_{l+1}
};

/// Direct runs at (dt, h), (dt/2, h/2), ... with `levels` >= 2 entries.
RefineReport refine_study(const Problem& problem, int levels, const HarnessOptions& opts);

/// (1 + cos(pi x / lx)) / 2, times the y analogue in 2D.
Field perturbation_bump(const Grid& g);

struct StabilityRun {
    double delta = 0.0;
    StabilityReport report;
    double gap_final = 0.0;                // l2_diff_u(T) + l2_diff_v(T)
    std::optional<double> gap_over_delta;  // absent for delta = 0
    InvariantSummary invariants;
};

struct StabilityExperiment {
    std::vector<StabilityRun> runs;
    double ratio_spread = 0.0; // max/min of gap/delta minus 1
    double rate_spread = 0.0;  // max |R_i - R_j| / max |R_i|
    bool envelopes_ok = true;
    InvariantSummary base_invariants;
};

/// Pairs of direct runs from u_in and u_in + delta * bump.
StabilityExperiment stability_experiment(const Problem& problem, const std::vector<double>& delta_list,
                                         const HarnessOptions& opts);

nlohmann::ordered_json to_json(const InvariantSummary& s);
nlohmann::ordered_json to_json(const SlopeFit& f);
nlohmann::ordered_json to_json(const SweepReport& r);
nlohmann::ordered_json to_json(const RefineReport& r);
nlohmann::ordered_json to_json(const StabilityReport& r);
nlohmann::ordered_json to_json(const StabilityExperiment& r);

} // namespace xdl
