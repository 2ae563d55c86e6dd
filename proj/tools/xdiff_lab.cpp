#include "xdifflab/config.hpp"
#include "xdifflab/diagnostics.hpp"
#include "xdifflab/error.hpp"
#include "xdifflab/harness.hpp"
#include "xdifflab/log.hpp"

#include "CLI11.hpp"
#include "json.hpp"

#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>

namespace fs = std::filesystem;
using nlohmann::ordered_json;
using namespace xdl;

namespace {

struct Invocation {
    Mode mode = Mode::run_cross;
    std::string config;
    std::string out;
    bool deterministic = true;
    int threads = 1;
    bool allow_unsupported = false;
};

std::string utc_now() {
    const std::time_t t = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw SolverError("cannot write '" + path.string() + "'");
    out << text;
}

void write_report(const fs::path& path, const Invocation& inv, const RunConfig& cfg, ordered_json result,
                  double seconds) {
    ordered_json j;
    j["schema"] = "xdiff-lab/1";
    j["mode"] = to_string(inv.mode);
    j["regime"] = to_string(cfg.problem.params.regime());
    j["config"] = serialize_config(cfg);
    j["result"] = std::move(result);
    j["metadata"] = {{"created_utc", utc_now()},
                     {"wall_seconds", seconds},
                     {"threads", inv.threads},
                     {"deterministic", inv.deterministic}};
    write_text(path, j.dump(2) + "\n");
}

std::string step_tag(long n) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%06ld", n);
    return buf;
}

// Snapshot policy: the initial and final states always, plus every k-th step.
bool wants_snapshot(long step, long total, long every) {
    return step == 0 || step == total || (every > 0 && step % every == 0);
}

ordered_json run_cross_mode(const RunConfig& cfg, const fs::path& out) {
    const Problem& pb = cfg.problem;
    const CrossDiffState init{0.0, pb.u_in.realize(pb.grid), pb.v_in.realize(pb.grid)};
    fs::create_directories(out / "snapshots");
    std::ofstream nd(out / "diagnostics.ndjson");
    DiagnosticsSink sink({cfg.effective_p_list(), cfg.effective_defect_p()}, &nd, false);
    InvariantMonitor mon(pb.params, pb.solver.dt);
    const long total = pb.solver.step_count();
    const CrossHistory h = run_cross(
        init, pb.params, pb.solver,
        [&](const CrossDiffState& s, const StepInfo& info) {
            sink.observe(s);
            mon.observe(s);
            if (!wants_snapshot(info.step, total, cfg.output.snapshot_every)) return;
            write_field_csv((out / "snapshots" / ("u_" + step_tag(info.step) + ".csv")).string(), s.u);
            write_field_csv((out / "snapshots" / ("v_" + step_tag(info.step) + ".csv")).string(), s.v);
        },
        1L << 40);
    ordered_json r;
    r["steps"] = total;
    r["t_final"] = h.times.back();
    r["mass_u_final"] = integrate(h.u.back());
    r["duality"] = sink.duality_norm();
    r["invariants"] = to_json(mon.summary());
    return r;
}

ordered_json run_fast_mode(const RunConfig& cfg, const fs::path& out) {
    const Problem& pb = cfg.problem;
    const Field u0 = pb.u_in.realize(pb.grid), v0 = pb.v_in.realize(pb.grid);
    const FastReactionConfig frc = build_fast_reaction(pb.params, v0.max(), *cfg.epsilon);
    const FastState init = prepare_fast_initial(u0, v0, frc);
    fs::create_directories(out / "snapshots");
    std::ofstream nd(out / "diagnostics.ndjson");
    DiagnosticsSink sink({cfg.effective_p_list(), cfg.effective_defect_p()}, &nd, false);
    InvariantMonitor mon(pb.params, pb.solver.dt);
    const long total = pb.solver.step_count();
    double defect_sq = 0.0, last_t = 0.0, last_d2 = 0.0;
    const FastHistory h = run_fast(
        init, pb.params, frc, pb.solver,
        [&](const FastState& s, const StepInfo& info) {
            sink.observe(s, frc);
            mon.observe(s, frc);
            const double d = relaxation_defect(s, frc, cfg.effective_defect_p());
            if (info.step > 0) defect_sq += 0.5 * (d * d + last_d2) * (s.t - last_t);
            last_t = s.t;
            last_d2 = d * d;
            if (!wants_snapshot(info.step, total, cfg.output.snapshot_every)) return;
            const std::string tag = step_tag(info.step) + ".csv";
            write_field_csv((out / "snapshots" / ("uA_" + tag)).string(), s.uA);
            write_field_csv((out / "snapshots" / ("uB_" + tag)).string(), s.uB);
            write_field_csv((out / "snapshots" / ("u_" + tag)).string(), s.total());
            write_field_csv((out / "snapshots" / ("v_" + tag)).string(), s.v);
        },
        1L << 40);
    ordered_json r;
    r["epsilon"] = frc.epsilon;
    r["fast_reaction"] = {{"d_A", frc.d_A}, {"d_B", frc.d_B}, {"h0", frc.h0}, {"phi1", frc.phi1}, {"v1", frc.v1}};
    r["compatibility_residual"] = compatibility_residual(frc, pb.params.d_u);
    r["steps"] = total;
    r["t_final"] = h.times.back();
    r["mass_u_final"] = integrate(h.uA.back() + h.uB.back());
    r["defect_p"] = cfg.effective_defect_p();
    r["defect"] = std::sqrt(defect_sq);
    r["duality"] = sink.duality_norm();
    r["invariants"] = to_json(mon.summary());
    return r;
}

ordered_json diagnose_mode(const RunConfig& cfg, const fs::path& out) {
    const Problem& pb = cfg.problem;
    if (!(pb.solver.t_end > 0.0)) throw ValidationError("diagnose needs time.t_end > 0");
    const CrossDiffState init{0.0, pb.u_in.realize(pb.grid), pb.v_in.realize(pb.grid)};
    fs::create_directories(out);
    std::ofstream nd(out / "diagnostics.ndjson");
    DiagnosticsSink sink({cfg.effective_p_list(), cfg.effective_defect_p()}, &nd, false);
    InvariantMonitor mon(pb.params, pb.solver.dt);
    WeakResidualAccumulator wr(pb.grid, pb.params, default_test_set(pb.grid, pb.solver.t_end));
    run_cross(
        init, pb.params, pb.solver,
        [&](const CrossDiffState& s, const StepInfo&) {
            sink.observe(s);
            mon.observe(s);
            wr.add(s.t, s.u, s.v);
        },
        1L << 40);
    const WeakResidual w = wr.result();
    const MassGrowth mg = mass_growth_constant(pb.params);
    const VBounds vb = v_bound_constants(pb.params, init.v.max());
    ordered_json r;
    r["weak_residual"] = {{"max", w.max_residual}, {"u", w.u_residuals}, {"v", w.v_residuals}};
    r["duality"] = sink.duality_norm();
    r["duality_bound"] = 3.0 * (lp_norm(init.u, 2.0) + mg.k_true);
    r["constants"] = {{"k_paper", mg.k_paper},
                      {"k_true", mg.k_true},
                      {"v_paper_bound", vb.paper_bound},
                      {"v_comparison_bound", vb.comparison_bound}};
    r["invariants"] = to_json(mon.summary());
    if (cfg.epsilon) {
        const FastReactionConfig frc = build_fast_reaction(pb.params, init.v.max(), *cfg.epsilon);
        InvariantMonitor fmon(pb.params, pb.solver.dt);
        ordered_json ent = ordered_json::object();
        const FastHistory fh = run_fast(
            prepare_fast_initial(init.u, init.v, frc), pb.params, frc, pb.solver,
            [&](const FastState& s, const StepInfo&) { fmon.observe(s, frc); }, 1L << 40);
        const FastState first{fh.times.front(), fh.uA.front(), fh.uB.front(), fh.v.front()};
        const FastState last{fh.times.back(), fh.uA.back(), fh.uB.back(), fh.v.back()};
        for (double p : cfg.effective_p_list())
            if (p != 1.0) ent[format_real(p)] = {entropy(first, frc, p), entropy(last, frc, p)};
        r["fast"] = {{"epsilon", frc.epsilon},
                     {"compatibility_residual", compatibility_residual(frc, pb.params.d_u)},
                     {"entropy_initial_final", ent},
                     {"invariants", to_json(fmon.summary())}};
    }
    return r;
}

int execute(const Invocation& inv) {
    const RunConfig cfg = load_config(inv.config, {inv.mode, inv.allow_unsupported});
    const fs::path out = inv.out.empty() ? fs::path(cfg.output.dir) : fs::path(inv.out);
    fs::create_directories(out);
    const auto start = std::chrono::steady_clock::now();
    HarnessOptions ho;
    ho.threads = inv.threads;
    ho.defect_p = cfg.effective_defect_p();
    ho.snapshot_every = cfg.stability_snapshot_every;

    ordered_json result;
    std::string name;
    switch (inv.mode) {
    case Mode::run_cross:
        result = run_cross_mode(cfg, out);
        name = "run_report.json";
        break;
    case Mode::run_fast:
        result = run_fast_mode(cfg, out);
        name = "run_report.json";
        break;
    case Mode::sweep_eps:
        result = to_json(eps_sweep(cfg.problem, cfg.eps_list, ho));
        name = "sweep_report.json";
        break;
    case Mode::refine:
        result = to_json(refine_study(cfg.problem, cfg.refine_levels, ho));
        name = "refine_report.json";
        break;
    case Mode::stability:
        result = to_json(stability_experiment(cfg.problem, cfg.delta_list, ho));
        name = "stability_report.json";
        break;
    case Mode::diagnose:
        result = diagnose_mode(cfg, out);
        name = "diagnose_report.json";
        break;
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    write_report(out / name, inv, cfg, std::move(result), secs);
    std::cout << (out / name).string() << "\n";
    return 0;
}

int fail(int code, const char* kind, const std::string& message, const std::vector<std::string>& issues = {}) {
    ordered_json j;
    j["error"] = {{"kind", kind}, {"message", message}, {"issues", issues}, {"exit_code", code}};
    std::cerr << j.dump() << "\n";
    return code;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Cross-diffusion and fast-reaction simulation lab"};
    app.require_subcommand(1);
    Invocation inv;
    const std::pair<Mode, const char*> modes[] = {
        {Mode::run_cross, "Integrate the cross-diffusion system"},
        {Mode::run_fast, "Integrate the three-species fast-reaction system at fast.epsilon"},
        {Mode::sweep_eps, "Fast runs over fast.eps_list against the direct solver"},
        {Mode::refine, "Self-convergence study over refine.levels"},
        {Mode::stability, "Two-run stability experiment over stability.delta_list"},
        {Mode::diagnose, "Direct run with weak residual and bound checks"},
    };
    for (const auto& [mode, help] : modes) {
        CLI::App* sub = app.add_subcommand(to_string(mode), help);
        sub->add_option("--config", inv.config, "Config file")->required();
        sub->add_option("--out", inv.out, "Output directory (default: output.dir)");
        sub->add_flag("--deterministic,!--no-deterministic", inv.deterministic,
                      "Fixed reduction order (default on)");
        sub->add_option("--threads", inv.threads, "Worker threads for independent runs")
            ->check(CLI::Range(1, 1024));
        sub->add_flag("--allow-unsupported", inv.allow_unsupported, "Run parameters outside both regimes");
        sub->callback([&inv, mode = mode] { inv.mode = mode; });
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        return fail(1, "usage", e.what());
    }

    try {
        return execute(inv);
    } catch (const ConfigError& e) {
        return fail(1, e.kind(), e.what(), e.issues());
    } catch (const ValidationError& e) {
        return fail(1, e.kind(), e.what());
    } catch (const Error& e) {
        return fail(2, e.kind(), e.what());
    } catch (const std::exception& e) {
        return fail(2, "runtime", e.what());
    }
}
