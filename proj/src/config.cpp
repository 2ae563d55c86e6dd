#include "xdifflab/config.hpp"

#include "xdifflab/error.hpp"

#include "json.hpp"

#include <cmath>
#include <fstream>
#include <map>
#include <regex>
#include <set>
#include <sstream>

namespace xdl {

using nlohmann::json;

std::string to_string(Mode m) {
    switch (m) {
    case Mode::run_cross: return "run-cross";
    case Mode::run_fast: return "run-fast";
    case Mode::sweep_eps: return "sweep-eps";
    case Mode::refine: return "refine";
    case Mode::stability: return "stability";
    case Mode::diagnose: return "diagnose";
    }
    return "?";
}

std::optional<Mode> mode_from_string(std::string_view s) {
    for (Mode m : {Mode::run_cross, Mode::run_fast, Mode::sweep_eps, Mode::refine, Mode::stability, Mode::diagnose})
        if (s == to_string(m)) return m;
    return std::nullopt;
}

std::vector<double> RunConfig::effective_p_list() const {
    return p_list.empty() ? default_p_list(problem.params.regime()) : p_list;
}

double RunConfig::effective_defect_p() const {
    return defect_p.value_or(default_defect_p(problem.params.regime()));
}

namespace {

struct Entry {
    json value;
    int line;
};

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

// Drops a trailing `# comment` that is not inside a double-quoted string.
std::string strip_comment(const std::string& line) {
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        if (line[i] == '"' && (i == 0 || line[i - 1] != '\\')) quoted = !quoted;
        if (line[i] == '#' && !quoted) return line.substr(0, i);
    }
    return line;
}

std::optional<json> parse_value(const std::string& text) {
    json j = json::parse(text, nullptr, false);
    if (!j.is_discarded()) return j;
    try {
        std::size_t used = 0;
        const double d = std::stod(text, &used);
        if (used == text.size()) return json(d);
    } catch (const std::exception&) {
    }
    static const std::regex bare(R"([A-Za-z0-9_./+\-]+)");
    if (std::regex_match(text, bare)) return json(text);
    return std::nullopt;
}

class Reader {
public:
    explicit Reader(std::map<std::string, Entry> entries) : entries_(std::move(entries)) {}

    std::vector<std::string> issues;

    bool has(const std::string& key) const { return entries_.count(key) > 0; }

    std::optional<double> number(const std::string& key, bool required) {
        const Entry* e = take(key, required);
        if (!e) return std::nullopt;
        if (!e->value.is_number()) {
            issue(key, *e, "expected a number");
            return std::nullopt;
        }
        const double d = e->value.get<double>();
        if (!std::isfinite(d)) {
            issue(key, *e, "must be finite");
            return std::nullopt;
        }
        return d;
    }

    std::optional<long> integer(const std::string& key, bool required) {
        const Entry* e = take(key, required);
        if (!e) return std::nullopt;
        if (e->value.is_number_integer()) return e->value.get<long>();
        if (e->value.is_number_float()) {
            const double d = e->value.get<double>();
            if (std::floor(d) == d && std::abs(d) < 1e15) return static_cast<long>(d);
        }
        issue(key, *e, "expected an integer");
        return std::nullopt;
    }

    std::optional<std::string> string(const std::string& key, bool required) {
        const Entry* e = take(key, required);
        if (!e) return std::nullopt;
        if (!e->value.is_string()) {
            issue(key, *e, "expected a string");
            return std::nullopt;
        }
        return e->value.get<std::string>();
    }

    std::optional<std::vector<double>> numbers(const std::string& key, bool required) {
        const Entry* e = take(key, required);
        if (!e) return std::nullopt;
        std::vector<double> out;
        if (e->value.is_array()) {
            for (const json& x : e->value) {
                if (!x.is_number()) {
                    issue(key, *e, "expected a list of numbers");
                    return std::nullopt;
                }
                out.push_back(x.get<double>());
            }
            return out;
        }
        issue(key, *e, "expected a list of numbers like [1e-1, 1e-2]");
        return std::nullopt;
    }

    std::optional<std::vector<std::pair<double, double>>> pairs(const std::string& key, bool required) {
        const Entry* e = take(key, required);
        if (!e) return std::nullopt;
        std::vector<std::pair<double, double>> out;
        bool ok = e->value.is_array();
        if (ok)
            for (const json& x : e->value) {
                if (!x.is_array() || x.size() != 2 || !x[0].is_number() || !x[1].is_number()) {
                    ok = false;
                    break;
                }
                out.emplace_back(x[0].get<double>(), x[1].get<double>());
            }
        if (!ok) {
            issue(key, *e, "expected a list of [v, phi] pairs");
            return std::nullopt;
        }
        return out;
    }

    void finish() {
        for (const auto& [key, e] : entries_)
            if (!used_.count(key)) issues.push_back("line " + std::to_string(e.line) + ": unknown key '" + key + "'");
    }

    void fail(const std::string& key, const std::string& msg) {
        auto it = entries_.find(key);
        if (it != entries_.end())
            issue(key, it->second, msg);
        else
            issues.push_back("key '" + key + "': " + msg);
    }

private:
    const Entry* take(const std::string& key, bool required) {
        auto it = entries_.find(key);
        if (it == entries_.end()) {
            if (required) issues.push_back("missing required key '" + key + "'");
            return nullptr;
        }
        used_.insert(key);
        return &it->second;
    }

    void issue(const std::string& key, const Entry& e, const std::string& msg) {
        issues.push_back("line " + std::to_string(e.line) + ": key '" + key + "': " + msg);
    }

    std::map<std::string, Entry> entries_;
    std::set<std::string> used_;
};

std::map<std::string, Entry> tokenize(std::string_view text, std::vector<std::string>& issues) {
    std::map<std::string, Entry> entries;
    std::istringstream in{std::string(text)};
    std::string raw, section;
    int line = 0;
    while (std::getline(in, raw)) {
        ++line;
        const std::string s = trim(strip_comment(raw));
        if (s.empty()) continue;
        if (s.front() == '[' && s.back() == ']' && s.find('=') == std::string::npos) {
            section = trim(s.substr(1, s.size() - 2));
            if (section == "model") section.clear();
            continue;
        }
        const auto eq = s.find('=');
        if (eq == std::string::npos) {
            issues.push_back("line " + std::to_string(line) + ": expected 'key = value'");
            continue;
        }
        std::string key = trim(s.substr(0, eq));
        const std::string val = trim(s.substr(eq + 1));
        if (key.empty()) {
            issues.push_back("line " + std::to_string(line) + ": empty key");
            continue;
        }
        if (!section.empty()) key = section + "." + key;
        if (key == "epsilon") key = "fast.epsilon";
        auto parsed = parse_value(val);
        if (!parsed) {
            issues.push_back("line " + std::to_string(line) + ": key '" + key + "': cannot parse value '" + val + "'");
            continue;
        }
        if (entries.count(key)) {
            issues.push_back("line " + std::to_string(line) + ": duplicate key '" + key + "'");
            continue;
        }
        entries.emplace(key, Entry{std::move(*parsed), line});
    }
    return entries;
}

InitialProfile read_profile(Reader& r, const std::string& name) {
    InitialProfile p;
    const auto kind = r.string(name + ".kind", true);
    if (!kind) return p;
    if (*kind == "constant") {
        p.kind = InitialProfile::Kind::constant;
        if (auto m = r.number(name + ".mean", true)) p.mean = *m;
    } else if (*kind == "cosine") {
        p.kind = InitialProfile::Kind::cosine;
        if (auto m = r.number(name + ".mean", true)) p.mean = *m;
        if (auto a = r.number(name + ".amplitude", true)) p.amplitude = *a;
        if (auto m = r.number(name + ".mode", false)) p.mode = *m;
        if (auto m = r.number(name + ".mode_y", false)) p.mode_y = *m;
        if (std::abs(p.amplitude) > p.mean) r.fail(name + ".amplitude", "|amplitude| > mean gives negative densities");
    } else if (*kind == "file") {
        p.kind = InitialProfile::Kind::file;
        if (auto s = r.string(name + ".path", true)) p.path = *s;
    } else {
        r.fail(name + ".kind", "expected constant, cosine or file");
    }
    return p;
}

CrossFunction read_phi(Reader& r, bool& ok) {
    const auto kind = r.string("phi.kind", true);
    ok = false;
    if (!kind) return CrossFunction::linear(0.0);
    try {
        if (*kind == "linear") {
            if (auto s = r.number("phi.slope", true)) {
                ok = true;
                return CrossFunction::linear(*s);
            }
        } else if (*kind == "power") {
            auto c = r.number("phi.coeff", true);
            auto e = r.number("phi.exponent", true);
            if (c && e) {
                ok = true;
                return CrossFunction::power(*c, *e);
            }
        } else if (*kind == "tabulated") {
            if (auto t = r.pairs("phi.table", true)) {
                ok = true;
                return CrossFunction::tabulated(*t);
            }
        } else {
            r.fail("phi.kind", "expected linear, power or tabulated");
        }
    } catch (const ModelError& e) {
        ok = false;
        r.fail("phi." + std::string(*kind == "linear" ? "slope" : *kind == "power" ? "exponent" : "table"), e.what());
    }
    return CrossFunction::linear(0.0);
}

} // namespace

RunConfig parse_config(std::string_view text, const ParseOptions& opts) {
    std::vector<std::string> issues;
    Reader r(tokenize(text, issues));
    RunConfig cfg;

    if (auto m = r.string("mode", false)) {
        cfg.mode = mode_from_string(*m);
        if (!cfg.mode) r.fail("mode", "unknown mode '" + *m + "'");
    }
    if (opts.mode) cfg.mode = opts.mode;

    ModelParams& p = cfg.problem.params;
    const std::pair<const char*, double*> scalars[] = {
        {"d_u", &p.d_u}, {"d_v", &p.d_v}, {"r_u", &p.r_u}, {"r_v", &p.r_v}, {"r_a", &p.r_a}, {"r_b", &p.r_b},
        {"r_c", &p.r_c}, {"r_d", &p.r_d}, {"a", &p.a},     {"b", &p.b},     {"c", &p.c},     {"d", &p.d}};
    bool scalars_ok = true;
    for (const auto& [key, dst] : scalars) {
        if (auto v = r.number(key, true)) {
            *dst = *v;
            if (!(*v > 0.0)) {
                r.fail(key, "must be strictly positive");
                scalars_ok = false;
            }
        } else {
            scalars_ok = false;
        }
    }
    bool phi_ok = false;
    p.phi = read_phi(r, phi_ok);

    // grid
    const long dim = r.integer("grid.dim", false).value_or(1);
    const auto nx = r.integer("grid.nx", true);
    const double lx = r.number("grid.lx", false).value_or(1.0);
    std::optional<long> ny;
    double ly = 1.0;
    if (dim == 2) {
        ny = r.integer("grid.ny", true);
        ly = r.number("grid.ly", false).value_or(1.0);
    } else if (dim != 1) {
        r.fail("grid.dim", "must be 1 or 2");
    } else if (r.has("grid.ny") || r.has("grid.ly")) {
        r.fail(r.has("grid.ny") ? "grid.ny" : "grid.ly", "only valid with grid.dim = 2");
        r.integer("grid.ny", false);
        r.number("grid.ly", false);
    }
    if (nx && (dim == 1 || ny)) {
        try {
            cfg.problem.grid = dim == 2 ? Grid::rect(static_cast<int>(*nx), static_cast<int>(*ny), lx, ly)
                                        : Grid::line(static_cast<int>(*nx), lx);
        } catch (const Error& e) {
            r.fail("grid.nx", e.what());
        }
    }

    // time / solver
    SolverConfig& sc = cfg.problem.solver;
    if (auto v = r.number("time.dt", true)) sc.dt = *v;
    if (auto v = r.number("time.t_end", true)) sc.t_end = *v;
    if (auto v = r.number("solver.linear_tol", false)) sc.linear_tol = *v;
    if (auto v = r.integer("solver.max_linear_iters", false)) sc.max_linear_iters = static_cast<int>(*v);
    try {
        sc.validate();
    } catch (const Error& e) {
        r.fail("time.dt", e.what());
    }

    cfg.problem.u_in = read_profile(r, "u_in");
    cfg.problem.v_in = read_profile(r, "v_in");

    // fast / diagnostics / experiments
    cfg.epsilon = r.number("fast.epsilon", false);
    if (cfg.epsilon && !(*cfg.epsilon > 0.0 && *cfg.epsilon < 1.0)) r.fail("fast.epsilon", "must lie in (0, 1)");
    if (auto l = r.numbers("fast.eps_list", false)) {
        cfg.eps_list = *l;
        for (std::size_t i = 0; i < l->size(); ++i) {
            if (!((*l)[i] > 0.0 && (*l)[i] < 1.0)) r.fail("fast.eps_list", "entries must lie in (0, 1)");
            if (i > 0 && !((*l)[i] < (*l)[i - 1])) r.fail("fast.eps_list", "must be strictly decreasing");
        }
    }
    cfg.defect_p = r.number("fast.defect_p", false);
    if (cfg.defect_p && !(*cfg.defect_p > 0.0)) r.fail("fast.defect_p", "must be positive");
    if (auto l = r.numbers("diagnostics.p_list", false)) {
        cfg.p_list = *l;
        for (double q : *l)
            if (!(q > 0.0)) r.fail("diagnostics.p_list", "entries must be positive");
    }
    if (auto v = r.integer("refine.levels", false)) {
        cfg.refine_levels = static_cast<int>(*v);
        if (*v < 2 || *v > 8) r.fail("refine.levels", "must lie in [2, 8]");
    }
    if (auto l = r.numbers("stability.delta_list", false)) {
        cfg.delta_list = *l;
        for (std::size_t i = 0; i < l->size(); ++i) {
            if (!((*l)[i] >= 0.0)) r.fail("stability.delta_list", "entries must be nonnegative");
            if (i > 0 && !((*l)[i] < (*l)[i - 1])) r.fail("stability.delta_list", "must be strictly decreasing");
        }
    }
    if (auto v = r.integer("stability.snapshot_every", false)) {
        cfg.stability_snapshot_every = *v;
        if (*v < 1) r.fail("stability.snapshot_every", "must be >= 1");
    }
    if (auto v = r.integer("output.snapshot_every", false)) {
        cfg.output.snapshot_every = *v;
        if (*v < 0) r.fail("output.snapshot_every", "must be >= 0");
    }
    if (auto s = r.string("output.dir", false)) cfg.output.dir = *s;

    r.finish();

    if (scalars_ok && phi_ok) {
        try {
            p.validate();
        } catch (const Error& e) {
            r.issues.push_back(e.what());
        }
        if (p.regime() == Regime::unsupported && !opts.allow_unsupported) {
            std::ostringstream msg;
            msg << "parameters fall outside both supported regimes (a = " << format_real(p.a)
                << ", d = " << format_real(p.d)
                << "; need d < a, or a <= d with a <= 1 and d <= 2); pass --allow-unsupported to run anyway";
            r.issues.push_back(msg.str());
        }
    }

    if (cfg.mode) {
        switch (*cfg.mode) {
        case Mode::run_fast:
            if (!cfg.epsilon) r.issues.push_back("mode run-fast requires key 'fast.epsilon'");
            break;
        case Mode::sweep_eps:
            if (cfg.eps_list.empty()) r.issues.push_back("mode sweep-eps requires key 'fast.eps_list'");
            break;
        case Mode::stability:
            if (cfg.delta_list.empty()) r.issues.push_back("mode stability requires key 'stability.delta_list'");
            break;
        case Mode::refine:
            if (!(sc.t_end > 0.0)) r.issues.push_back("mode refine requires time.t_end > 0");
            break;
        default: break;
        }
    }

    issues.insert(issues.end(), r.issues.begin(), r.issues.end());
    if (!issues.empty()) throw ConfigError(std::move(issues));
    return cfg;
}

RunConfig load_config(const std::string& path, const ParseOptions& opts) {
    std::ifstream in(path);
    if (!in) throw ConfigError({"cannot open config file '" + path + "'"});
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str(), opts);
}

namespace {

std::string list(const std::vector<double>& v) {
    std::string s = "[";
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + format_real(v[i]);
    return s + "]";
}

std::string quoted(const std::string& s) { return json(s).dump(); }

void write_profile(std::ostream& out, const std::string& name, const InitialProfile& p) {
    out << "\n[" << name << "]\nkind = " << quoted(to_string(p.kind)) << "\n";
    switch (p.kind) {
    case InitialProfile::Kind::constant: out << "mean = " << format_real(p.mean) << "\n"; break;
    case InitialProfile::Kind::cosine:
        out << "mean = " << format_real(p.mean) << "\namplitude = " << format_real(p.amplitude)
            << "\nmode = " << format_real(p.mode) << "\nmode_y = " << format_real(p.mode_y) << "\n";
        break;
    case InitialProfile::Kind::file: out << "path = " << quoted(p.path) << "\n"; break;
    }
}

} // namespace

std::string serialize_config(const RunConfig& cfg) {
    std::ostringstream out;
    const ModelParams& p = cfg.problem.params;
    if (cfg.mode) out << "mode = " << quoted(to_string(*cfg.mode)) << "\n";
    out << "d_u = " << format_real(p.d_u) << "\nd_v = " << format_real(p.d_v) << "\nr_u = " << format_real(p.r_u)
        << "\nr_v = " << format_real(p.r_v) << "\nr_a = " << format_real(p.r_a) << "\nr_b = " << format_real(p.r_b)
        << "\nr_c = " << format_real(p.r_c) << "\nr_d = " << format_real(p.r_d) << "\na = " << format_real(p.a)
        << "\nb = " << format_real(p.b) << "\nc = " << format_real(p.c) << "\nd = " << format_real(p.d) << "\n";

    out << "\n[phi]\nkind = " << quoted(to_string(p.phi.kind())) << "\n";
    switch (p.phi.kind()) {
    case CrossFunction::Kind::linear: out << "slope = " << format_real(p.phi.slope()) << "\n"; break;
    case CrossFunction::Kind::power:
        out << "coeff = " << format_real(p.phi.coeff()) << "\nexponent = " << format_real(p.phi.exponent()) << "\n";
        break;
    case CrossFunction::Kind::tabulated: {
        out << "table = [";
        const auto& t = p.phi.table();
        for (std::size_t i = 0; i < t.size(); ++i)
            out << (i ? ", " : "") << "[" << format_real(t[i].first) << ", " << format_real(t[i].second) << "]";
        out << "]\n";
        break;
    }
    }

    const Grid& g = cfg.problem.grid;
    out << "\n[grid]\ndim = " << g.dim() << "\nnx = " << g.nx() << "\nlx = " << format_real(g.lx()) << "\n";
    if (g.dim() == 2) out << "ny = " << g.ny() << "\nly = " << format_real(g.ly()) << "\n";

    const SolverConfig& sc = cfg.problem.solver;
    out << "\n[time]\ndt = " << format_real(sc.dt) << "\nt_end = " << format_real(sc.t_end) << "\n";
    out << "\n[solver]\nlinear_tol = " << format_real(sc.linear_tol) << "\nmax_linear_iters = " << sc.max_linear_iters
        << "\n";

    write_profile(out, "u_in", cfg.problem.u_in);
    write_profile(out, "v_in", cfg.problem.v_in);

    if (cfg.epsilon || !cfg.eps_list.empty() || cfg.defect_p) {
        out << "\n[fast]\n";
        if (cfg.epsilon) out << "epsilon = " << format_real(*cfg.epsilon) << "\n";
        if (!cfg.eps_list.empty()) out << "eps_list = " << list(cfg.eps_list) << "\n";
        if (cfg.defect_p) out << "defect_p = " << format_real(*cfg.defect_p) << "\n";
    }
    if (!cfg.p_list.empty()) out << "\n[diagnostics]\np_list = " << list(cfg.p_list) << "\n";
    out << "\n[refine]\nlevels = " << cfg.refine_levels << "\n";
    out << "\n[stability]\n";
    if (!cfg.delta_list.empty()) out << "delta_list = " << list(cfg.delta_list) << "\n";
    out << "snapshot_every = " << cfg.stability_snapshot_every << "\n";
    out << "\n[output]\nsnapshot_every = " << cfg.output.snapshot_every << "\ndir = " << quoted(cfg.output.dir)
        << "\n";
    return out.str();
}

} // namespace xdl
