#include "xdifflab/diagnostics.hpp"

#include "xdifflab/error.hpp"

#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <ostream>

namespace xdl {

namespace {

void require_exponent(double p, bool allow_one) {
    if (!(p > 0.0) || !std::isfinite(p)) throw ValidationError("exponent p must be positive and finite");
    if (!allow_one && p == 1.0) throw ValidationError("entropy is undefined for p = 1");
}

// Trapezoid in time of values(n), with times[n].
double trapezoid(const std::vector<double>& times, const std::vector<double>& values) {
    double acc = 0.0;
    for (std::size_t n = 1; n < times.size(); ++n)
        acc += 0.5 * (values[n] + values[n - 1]) * (times[n] - times[n - 1]);
    return acc;
}

} // namespace

double entropy(const FastState& s, const FastReactionConfig& frc, double p) {
    require_exponent(p, false);
    const Grid& g = s.v.grid;
    Field e(g);
    for (std::size_t k = 0; k < g.size(); ++k) {
        const double h = frc.h(s.v[k]), kk = frc.k(s.v[k]);
        e[k] = (std::pow(h, p - 1.0) * std::pow(s.uA[k], p) + std::pow(kk, p - 1.0) * std::pow(s.uB[k], p)) / p;
    }
    return integrate(e);
}

double relaxation_defect(const FastState& s, const FastReactionConfig& frc, double p) {
    require_exponent(p, true);
    const Grid& g = s.v.grid;
    Field d(g);
    for (std::size_t k = 0; k < g.size(); ++k)
        d[k] = std::pow(frc.h(s.v[k]) * s.uA[k], 0.5 * p) - std::pow(frc.k(s.v[k]) * s.uB[k], 0.5 * p);
    return lp_norm(d, 2.0);
}

double elementary_constant(double p) {
    if (!(p > 0.0 && p < 1.0)) throw ValidationError("elementary_constant needs p in (0, 1)");
    double best = 4.0 * (1.0 - p) / (p * p);
    const int n = 20000;
    for (int i = 0; i <= n; ++i) {
        const double x = std::pow(10.0, -8.0 + 16.0 * i / n);
        if (std::abs(x - 1.0) < 1e-4) continue;
        const double den = std::pow(x, 0.5 * p) - 1.0;
        best = std::min(best, (x - 1.0) * (1.0 - std::pow(x, p - 1.0)) / (den * den));
    }
    return best;
}

SignCheck exchange_dissipation_signcheck(const FastState& s, const FastReactionConfig& frc, double p) {
    require_exponent(p, false);
    const bool flip = p < 1.0;
    SignCheck out;
    out.min_cellwise = std::numeric_limits<double>::infinity();
    out.bound_margin = std::numeric_limits<double>::infinity();
    if (flip) {
        thread_local std::map<double, double> cache;
        auto it = cache.find(p);
        if (it == cache.end()) it = cache.emplace(p, elementary_constant(p)).first;
        out.c_p = it->second;
    }
    const double vol = s.v.grid.cell_volume();
    for (std::size_t k = 0; k < s.v.size(); ++k) {
        const double x = frc.k(s.v[k]) * s.uB[k];
        const double y = frc.h(s.v[k]) * s.uA[k];
        if (x == y) {
            out.min_cellwise = std::min(out.min_cellwise, 0.0);
            out.bound_margin = std::min(out.bound_margin, 0.0);
            continue;
        }
        if (flip && (x == 0.0 || y == 0.0)) {
            ++out.singular_cells;
            continue;
        }
        double prod = (x - y) * (std::pow(x, p - 1.0) - std::pow(y, p - 1.0));
        if (flip) {
            prod = -prod;
            const double gap = std::pow(x, 0.5 * p) - std::pow(y, 0.5 * p);
            // Relative slack for the roundoff in the two powers.
            const double margin = prod - out.c_p * gap * gap * (1.0 - 1e-9);
            out.bound_margin = std::min(out.bound_margin, margin);
        }
        out.min_cellwise = std::min(out.min_cellwise, prod);
        out.integral += prod * vol;
    }
    if (!flip) out.bound_margin = 0.0;
    return out;
}

std::vector<TestFunction> default_test_set(const Grid& g, double horizon) {
    if (!(horizon > 0.0)) throw ValidationError("test functions need a positive horizon");
    struct Mode {
        const char* name;
        double (*f)(double);
        double (*df)(double);
    };
    static const Mode modes[] = {
        {"1", [](double) { return 1.0; }, [](double) { return 0.0; }},
        {"s2(3-2s)", [](double s) { return s * s * (3.0 - 2.0 * s); }, [](double s) { return 6.0 * s * (1.0 - s); }},
        {"s2(1-s)2", [](double s) { return s * s * (1.0 - s) * (1.0 - s); },
         [](double s) { return 2.0 * s * (1.0 - s) * (1.0 - 2.0 * s); }},
    };
    auto theta = [horizon](double t) {
        const double tau = t / horizon;
        return tau >= 1.0 ? 0.0 : 1.0 - tau * tau * (3.0 - 2.0 * tau);
    };
    auto dtheta = [horizon](double t) {
        const double tau = t / horizon;
        return tau >= 1.0 ? 0.0 : -6.0 * tau * (1.0 - tau) / horizon;
    };
    const double lx = g.lx(), ly = g.ly();
    const int ny_modes = g.dim() == 2 ? 3 : 1;
    std::vector<TestFunction> out;
    for (const Mode& mx : modes)
        for (int jy = 0; jy < ny_modes; ++jy) {
            const Mode& my = modes[jy];
            TestFunction tf;
            tf.name = g.dim() == 2 ? std::string(mx.name) + "*" + my.name : std::string(mx.name);
            tf.space = [mx, my, lx, ly](double x, double y) { return mx.f(x / lx) * my.f(y / ly); };
            tf.space_grad = [mx, my, lx, ly](double x, double y) {
                return std::array<double, 2>{mx.df(x / lx) / lx * my.f(y / ly), mx.f(x / lx) * my.df(y / ly) / ly};
            };
            tf.time = theta;
            tf.time_deriv = dtheta;
            out.push_back(std::move(tf));
        }
    return out;
}

namespace {

// integral of grad(psi) . grad(w) with face differences; zero flux on the boundary.
double grad_pairing(const Field& w, const TestFunction& tf) {
    const Grid& g = w.grid;
    double acc = 0.0;
    const double fx = g.hy(); // (dw / hx) * hx * hy
    for (int i = 0; i + 1 < g.nx(); ++i)
        for (int j = 0; j < g.ny(); ++j) {
            const double xf = (i + 1) * g.hx();
            const double dpsi = tf.space_grad(xf, g.y(j))[0];
            acc += dpsi * (w[g.index(i + 1, j)] - w[g.index(i, j)]) * fx;
        }
    if (g.dim() == 2) {
        const double fy = g.hx();
        for (int i = 0; i < g.nx(); ++i)
            for (int j = 0; j + 1 < g.ny(); ++j) {
                const double yf = (j + 1) * g.hy();
                const double dpsi = tf.space_grad(g.x(i), yf)[1];
                acc += dpsi * (w[g.index(i, j + 1)] - w[g.index(i, j)]) * fy;
            }
    }
    return acc;
}

double pairing(const Field& w, const std::vector<double>& psi) {
    double acc = 0.0;
    for (std::size_t k = 0; k < psi.size(); ++k) acc += psi[k] * w[k];
    return acc * w.grid.cell_volume();
}

} // namespace

WeakResidualAccumulator::WeakResidualAccumulator(const Grid& g, ModelParams params, std::vector<TestFunction> tests)
    : grid_(g), params_(std::move(params)), tests_(std::move(tests)), u_(tests_.size()), v_(tests_.size()) {
    for (const TestFunction& tf : tests_) {
        std::vector<double> psi(g.size());
        for (int i = 0; i < g.nx(); ++i)
            for (int j = 0; j < g.ny(); ++j) psi[g.index(i, j)] = tf.space(g.x(i), g.y(j));
        psi_.push_back(std::move(psi));
    }
}

void WeakResidualAccumulator::accumulate(Sums& s, const TestFunction& tf, double t, double mass, double grad,
                                         double src) {
    const double th = tf.time(t);
    if (count_ == 0) {
        s.initial = th * mass;
    } else {
        const double t0 = last_t_, len = t - t0;
        // theta' times the linear interpolant of the mass is cubic: two Gauss
        // points integrate it exactly.
        const double gq = 0.5 / std::sqrt(3.0);
        for (double off : {0.5 - gq, 0.5 + gq})
            s.dt_term += 0.5 * len * tf.time_deriv(t0 + off * len) * ((1.0 - off) * s.last_mass + off * mass);
        s.grad += 0.5 * len * (th * grad + s.last_grad);
        s.src += 0.5 * len * (th * src + s.last_src);
    }
    s.last_mass = mass;
    s.last_grad = th * grad;
    s.last_src = th * src;
}

void WeakResidualAccumulator::add(double t, const Field& u, const Field& v) {
    if (!(u.grid == grid_) || !(v.grid == grid_)) throw ComparisonError("weak residual: snapshot on a different grid");
    if (count_ > 0 && !(t > last_t_)) throw ComparisonError("weak residual: snapshot times must increase");
    Field fu(grid_), fv(grid_), ru(grid_), rv(grid_);
    for (std::size_t k = 0; k < grid_.size(); ++k) {
        fu[k] = (params_.d_u + params_.phi(v[k])) * u[k];
        fv[k] = params_.d_v * v[k];
        ru[k] = reaction_u(u[k], v[k], params_);
        rv[k] = reaction_v(u[k], v[k], params_);
    }
    for (std::size_t i = 0; i < tests_.size(); ++i) {
        const TestFunction& tf = tests_[i];
        accumulate(u_[i], tf, t, pairing(u, psi_[i]), grad_pairing(fu, tf), pairing(ru, psi_[i]));
        accumulate(v_[i], tf, t, pairing(v, psi_[i]), grad_pairing(fv, tf), pairing(rv, psi_[i]));
    }
    last_t_ = t;
    ++count_;
}

WeakResidual WeakResidualAccumulator::result() const {
    if (count_ < 3) throw ComparisonError("weak residual needs at least 3 snapshots");
    WeakResidual out;
    auto value = [](const Sums& s) { return std::abs(-s.dt_term - s.initial + s.grad - s.src); };
    for (std::size_t i = 0; i < tests_.size(); ++i) {
        out.u_residuals.push_back(value(u_[i]));
        out.v_residuals.push_back(value(v_[i]));
        out.max_residual = std::max({out.max_residual, out.u_residuals.back(), out.v_residuals.back()});
    }
    return out;
}

WeakResidual weak_residual(const CrossHistory& h, const ModelParams& params, const std::vector<TestFunction>& tests) {
    if (h.size() < 3) throw ComparisonError("weak residual needs at least 3 snapshots");
    WeakResidualAccumulator acc(h.grid, params, tests);
    for (std::size_t n = 0; n < h.size(); ++n) acc.add(h.times[n], h.u[n], h.v[n]);
    return acc.result();
}

double duality_accumulate(const std::vector<double>& times, const std::vector<Field>& u) {
    if (times.size() != u.size()) throw ComparisonError("duality: times and fields differ in length");
    std::vector<double> sq(u.size());
    for (std::size_t n = 0; n < u.size(); ++n) {
        const double l2 = lp_norm(u[n], 2.0);
        sq[n] = l2 * l2;
    }
    return std::sqrt(trapezoid(times, sq));
}

double duality_accumulate(const CrossHistory& h) { return duality_accumulate(h.times, h.u); }

double duality_accumulate(const FastHistory& h) {
    std::vector<Field> tot;
    tot.reserve(h.size());
    for (std::size_t n = 0; n < h.size(); ++n) tot.push_back(h.uA[n] + h.uB[n]);
    return duality_accumulate(h.times, tot);
}

StabilityReport stability_compare(const CrossHistory& h1, const CrossHistory& h2) {
    if (!(h1.grid == h2.grid)) throw ComparisonError("stability: histories live on different grids");
    if (h1.size() != h2.size()) throw ComparisonError("stability: snapshot counts differ");
    for (std::size_t n = 0; n < h1.size(); ++n)
        if (std::abs(h1.times[n] - h2.times[n]) > 1e-12 * std::max(1.0, std::abs(h1.times[n])))
            throw ComparisonError("stability: snapshot times differ");
    StabilityReport r;
    r.t_grid = h1.times;
    for (std::size_t n = 0; n < h1.size(); ++n) {
        r.l2_diff_u.push_back(lp_norm(h1.u[n] - h2.u[n], 2.0));
        r.l2_diff_v.push_back(lp_norm(h1.v[n] - h2.v[n], 2.0));
    }
    if (r.t_grid.empty()) return r;
    r.initial_gap = r.l2_diff_u.front() + r.l2_diff_v.front();

    // Least-squares line through log(du^2 + dv^2); the growth rate is half the slope.
    double st = 0, sy = 0, stt = 0, sty = 0;
    long m = 0;
    for (std::size_t n = 0; n < r.t_grid.size(); ++n) {
        const double e2 = r.l2_diff_u[n] * r.l2_diff_u[n] + r.l2_diff_v[n] * r.l2_diff_v[n];
        if (!(e2 > 0.0)) continue;
        const double t = r.t_grid[n], y = std::log(e2);
        st += t;
        sy += y;
        stt += t * t;
        sty += t * y;
        ++m;
    }
    const double den = m * stt - st * st;
    r.fitted_growth_rate = m >= 2 && den > 0.0 ? 0.5 * (m * sty - st * sy) / den : 0.0;

    const double rate = r.fitted_growth_rate + 0.1 * std::abs(r.fitted_growth_rate);
    r.envelope_max_ratio = 0.0;
    for (std::size_t n = 0; n < r.t_grid.size(); ++n) {
        const double gap = r.l2_diff_u[n] + r.l2_diff_v[n];
        const double env = r.initial_gap * std::exp(rate * (r.t_grid[n] - r.t_grid.front()));
        if (env > 0.0)
            r.envelope_max_ratio = std::max(r.envelope_max_ratio, gap / env);
        else if (gap > 0.0)
            r.envelope_max_ratio = std::numeric_limits<double>::infinity();
    }
    r.envelope_ok = r.envelope_max_ratio <= 1.0 + 1e-12;
    return r;
}

double grad_l2(const Field& v) {
    const Grid& g = v.grid;
    double acc = 0.0;
    for (int i = 0; i + 1 < g.nx(); ++i)
        for (int j = 0; j < g.ny(); ++j) {
            const double d = (v[g.index(i + 1, j)] - v[g.index(i, j)]) / g.hx();
            acc += d * d;
        }
    if (g.dim() == 2)
        for (int i = 0; i < g.nx(); ++i)
            for (int j = 0; j + 1 < g.ny(); ++j) {
                const double d = (v[g.index(i, j + 1)] - v[g.index(i, j)]) / g.hy();
                acc += d * d;
            }
    return std::sqrt(acc * g.cell_volume());
}

namespace {

DiagnosticsRecord common(double t, const Field& u, const Field& v, const RecordOptions& opts) {
    DiagnosticsRecord r;
    r.t = t;
    r.mass_u = integrate(u);
    for (double p : opts.p_list) r.lp_u[p] = lp_norm(u, p);
    r.linf_v = lp_norm(v, kInfinityNorm);
    r.grad_v_l2 = grad_l2(v);
    return r;
}

} // namespace

DiagnosticsRecord record(const CrossDiffState& s, const RecordOptions& opts) { return common(s.t, s.u, s.v, opts); }

DiagnosticsRecord record(const FastState& s, const FastReactionConfig& frc, const RecordOptions& opts) {
    DiagnosticsRecord r = common(s.t, s.total(), s.v, opts);
    for (double p : opts.p_list)
        if (p != 1.0) r.entropy[p] = entropy(s, frc, p);
    r.relaxation_defect = relaxation_defect(s, frc, opts.defect_p);
    if (opts.defect_p != 1.0) r.exchange_dissipation = exchange_dissipation_signcheck(s, frc, opts.defect_p).integral;
    return r;
}

std::string to_ndjson(const DiagnosticsRecord& r) {
    auto keyed = [](const std::map<double, double>& m) {
        nlohmann::ordered_json j = nlohmann::ordered_json::object();
        for (const auto& [p, val] : m) j[format_real(p)] = val;
        return j;
    };
    nlohmann::ordered_json j;
    j["t"] = r.t;
    j["mass_u"] = r.mass_u;
    j["lp_u"] = keyed(r.lp_u);
    j["linf_v"] = r.linf_v;
    j["grad_v_l2"] = r.grad_v_l2;
    j["entropy"] = keyed(r.entropy);
    j["relaxation_defect"] = r.relaxation_defect;
    j["exchange_dissipation"] = r.exchange_dissipation;
    j["duality_accum"] = r.duality_accum;
    return j.dump();
}

DiagnosticsSink::DiagnosticsSink(RecordOptions opts, std::ostream* ndjson, bool keep)
    : opts_(std::move(opts)), out_(ndjson), keep_(keep) {}

void DiagnosticsSink::observe(const CrossDiffState& s) {
    const double l2 = lp_norm(s.u, 2.0);
    push(record(s, opts_), l2 * l2);
}

void DiagnosticsSink::observe(const FastState& s, const FastReactionConfig& frc) {
    const double l2 = lp_norm(s.total(), 2.0);
    push(record(s, frc, opts_), l2 * l2);
}

void DiagnosticsSink::push(DiagnosticsRecord r, double l2sq) {
    if (started_) accum_ += 0.5 * (l2sq + last_l2sq_) * (r.t - last_t_);
    started_ = true;
    last_t_ = r.t;
    last_l2sq_ = l2sq;
    r.duality_accum = std::sqrt(accum_);
    if (out_) *out_ << to_ndjson(r) << '\n';
    if (keep_) records_.push_back(std::move(r));
}

double DiagnosticsSink::duality_norm() const { return std::sqrt(accum_); }

} // namespace xdl
