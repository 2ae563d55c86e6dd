#include "xdifflab/model.hpp"

#include "xdifflab/error.hpp"

#include <algorithm>
#include <cmath>

namespace xdl {

namespace {

bool positive_finite(double x) { return x > 0.0 && std::isfinite(x); }

// Golden-section maximisation of a unimodal function on [lo, hi].
double golden_max(const std::function<double(double)>& f, double lo, double hi, double tol) {
    const double invphi = (std::sqrt(5.0) - 1.0) / 2.0;
    double a = lo, b = hi;
    double c = b - invphi * (b - a);
    double d = a + invphi * (b - a);
    double fc = f(c), fd = f(d);
    while (b - a > tol) {
        if (fc >= fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - invphi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + invphi * (b - a);
            fd = f(d);
        }
    }
    return std::max({f(a), f(b), fc, fd});
}

} // namespace

CrossFunction CrossFunction::linear(double slope) {
    if (!(slope >= 0.0) || !std::isfinite(slope))
        throw ModelError("phi: linear slope must be finite and nonnegative");
    CrossFunction f;
    f.kind_ = Kind::linear;
    f.a_ = slope;
    return f;
}

CrossFunction CrossFunction::power(double coeff, double exponent) {
    if (!(coeff >= 0.0) || !std::isfinite(coeff))
        throw ModelError("phi: power coefficient must be finite and nonnegative");
    if (!std::isfinite(exponent) || !(exponent == 0.0 || exponent >= 1.0))
        throw ModelError("phi: power exponent must be 0 or >= 1 for phi to be C^1 at v = 0");
    CrossFunction f;
    f.kind_ = Kind::power;
    f.a_ = coeff;
    f.b_ = exponent;
    return f;
}

CrossFunction CrossFunction::tabulated(std::vector<std::pair<double, double>> samples) {
    if (samples.size() < 2) throw ModelError("phi: table needs at least two samples");
    if (samples.front().first != 0.0) throw ModelError("phi: table must start at v = 0");
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const auto [v, y] = samples[i];
        if (!std::isfinite(v) || !std::isfinite(y)) throw ModelError("phi: non-finite table entry");
        if (y < 0.0) throw ModelError("phi: table values must be nonnegative");
        if (i > 0 && !(v > samples[i - 1].first))
            throw ModelError("phi: table abscissae must be strictly increasing");
    }
    CrossFunction f;
    f.kind_ = Kind::tabulated;
    const std::size_t n = samples.size();
    std::vector<double> delta(n - 1);
    for (std::size_t i = 0; i + 1 < n; ++i)
        delta[i] = (samples[i + 1].second - samples[i].second) / (samples[i + 1].first - samples[i].first);
    std::vector<double> m(n);
    m.front() = delta.front();
    m.back() = delta.back();
    for (std::size_t i = 1; i + 1 < n; ++i) {
        if (delta[i - 1] * delta[i] <= 0.0) {
            m[i] = 0.0;
            continue;
        }
        const double h0 = samples[i].first - samples[i - 1].first;
        const double h1 = samples[i + 1].first - samples[i].first;
        const double w1 = 2.0 * h1 + h0;
        const double w2 = h1 + 2.0 * h0;
        m[i] = (w1 + w2) / (w1 / delta[i - 1] + w2 / delta[i]);
    }
    f.table_ = std::move(samples);
    f.slopes_ = std::move(m);
    f.validate_nonnegative(f.table_.back().first);
    return f;
}

double CrossFunction::operator()(double v) const {
    switch (kind_) {
    case Kind::linear:
        return a_ * v;
    case Kind::power:
        return b_ == 0.0 ? a_ : a_ * std::pow(v, b_);
    case Kind::tabulated: {
        if (v <= 0.0) return table_.front().second + slopes_.front() * v;
        if (v >= table_.back().first)
            return table_.back().second + slopes_.back() * (v - table_.back().first);
        const auto it = std::upper_bound(table_.begin(), table_.end(), v,
                                         [](double x, const auto& s) { return x < s.first; });
        const std::size_t i = static_cast<std::size_t>(it - table_.begin()) - 1;
        const double h = table_[i + 1].first - table_[i].first;
        const double t = (v - table_[i].first) / h;
        const double t2 = t * t, t3 = t2 * t;
        return (2 * t3 - 3 * t2 + 1) * table_[i].second + (t3 - 2 * t2 + t) * h * slopes_[i] +
               (-2 * t3 + 3 * t2) * table_[i + 1].second + (t3 - t2) * h * slopes_[i + 1];
    }
    }
    return 0.0;
}

double CrossFunction::derivative(double v) const {
    switch (kind_) {
    case Kind::linear:
        return a_;
    case Kind::power:
        return b_ == 0.0 ? 0.0 : a_ * b_ * std::pow(v, b_ - 1.0);
    case Kind::tabulated: {
        if (v <= 0.0) return slopes_.front();
        if (v >= table_.back().first) return slopes_.back();
        const auto it = std::upper_bound(table_.begin(), table_.end(), v,
                                         [](double x, const auto& s) { return x < s.first; });
        const std::size_t i = static_cast<std::size_t>(it - table_.begin()) - 1;
        const double h = table_[i + 1].first - table_[i].first;
        const double t = (v - table_[i].first) / h;
        const double t2 = t * t;
        return ((6 * t2 - 6 * t) * table_[i].second + (3 * t2 - 4 * t + 1) * h * slopes_[i] +
                (-6 * t2 + 6 * t) * table_[i + 1].second + (3 * t2 - 2 * t) * h * slopes_[i + 1]) /
               h;
    }
    }
    return 0.0;
}

void CrossFunction::validate_nonnegative(double v_max, int samples) const {
    for (int s = 0; s <= samples; ++s) {
        const double v = v_max * s / samples;
        const double y = (*this)(v);
        if (!(y >= 0.0)) throw ModelError("phi is negative at v = " + std::to_string(v));
    }
}

std::string to_string(CrossFunction::Kind k) {
    switch (k) {
    case CrossFunction::Kind::linear: return "linear";
    case CrossFunction::Kind::power: return "power";
    case CrossFunction::Kind::tabulated: return "tabulated";
    }
    return "?";
}

std::string to_string(Regime r) {
    switch (r) {
    case Regime::theorem1: return "THEOREM1";
    case Regime::theorem2: return "THEOREM2";
    case Regime::unsupported: return "UNSUPPORTED";
    }
    return "?";
}

void ModelParams::validate() const {
    const std::pair<const char*, double> scalars[] = {
        {"d_u", d_u}, {"d_v", d_v}, {"r_u", r_u}, {"r_v", r_v}, {"r_a", r_a}, {"r_b", r_b},
        {"r_c", r_c}, {"r_d", r_d}, {"a", a},     {"b", b},     {"c", c},     {"d", d}};
    for (const auto& [name, value] : scalars)
        if (!positive_finite(value))
            throw ModelError(std::string("model coefficient ") + name + " must be positive");
}

Regime ModelParams::regime() const noexcept {
    if (d < a) return Regime::theorem1;
    if (a <= d && a <= 1.0 && d <= 2.0) return Regime::theorem2;
    return Regime::unsupported;
}

double reaction_u(double u, double v, const ModelParams& p) {
    if (!(u >= 0.0) || !(v >= 0.0)) throw ValidationError("reaction_u: densities must be nonnegative");
    if (u == 0.0) return 0.0;
    return u * (p.r_u - p.r_a * std::pow(u, p.a) - p.r_b * std::pow(v, p.b));
}

double reaction_v(double u, double v, const ModelParams& p) {
    if (!(u >= 0.0) || !(v >= 0.0)) throw ValidationError("reaction_v: densities must be nonnegative");
    if (v == 0.0) return 0.0;
    return v * (p.r_v - p.r_c * std::pow(v, p.c) - p.r_d * std::pow(u, p.d));
}

double v_reaction_zero(const ModelParams& p) { return std::pow(p.r_v / p.r_c, 1.0 / p.c); }

VBounds v_bound_constants(const ModelParams& p, double v_in_sup) {
    if (!(v_in_sup >= 0.0)) throw ValidationError("v_bound_constants: sup v_in must be nonnegative");
    const double paper = std::pow(p.r_v / (p.r_c * (p.c + 1.0)), 1.0 / p.c);
    return {std::max(v_in_sup, paper), std::max(v_in_sup, v_reaction_zero(p))};
}

MassGrowth mass_growth_constant(const ModelParams& p) {
    const double w_star = std::pow(p.r_u / ((1.0 + p.a) * p.r_a), 1.0 / p.a);
    return {w_star, w_star * p.r_u * p.a / (1.0 + p.a)};
}

double cutoff(double v, double v1) {
    if (v <= v1) return 1.0;
    if (v >= 2.0 * v1) return 0.0;
    const double s = (v - v1) / v1;
    return 1.0 - s * s * s * (s * (6.0 * s - 15.0) + 10.0);
}

FastReactionConfig build_fast_reaction(const ModelParams& p, double v_in_sup, double epsilon) {
    p.validate();
    if (!(epsilon > 0.0 && epsilon < 1.0)) throw ValidationError("epsilon must lie in (0, 1)");
    if (!(v_in_sup >= 0.0) || !std::isfinite(v_in_sup))
        throw ValidationError("sup v_in must be finite and nonnegative");

    const double v1 = v_bound_constants(p, v_in_sup).paper_bound;
    p.phi.validate_nonnegative(2.0 * v1);

    const CrossFunction phi = p.phi;
    auto phi_b = [phi, v1](double v) { return cutoff(v, v1) * phi(v); };

    // dense scan, then polish every local maximum among the samples
    constexpr int kSamples = 100000;
    const double step = 2.0 * v1 / kSamples;
    std::vector<double> vals(kSamples + 1);
    for (int s = 0; s <= kSamples; ++s) vals[s] = phi_b(s * step);
    double phi1 = *std::max_element(vals.begin(), vals.end());
    const double top = phi1;
    for (int s = 0; s <= kSamples; ++s) {
        const bool left_ok = s == 0 || vals[s] >= vals[s - 1];
        const bool right_ok = s == kSamples || vals[s] >= vals[s + 1];
        if (!left_ok || !right_ok || vals[s] < top - 1e-6 * (1.0 + std::abs(top))) continue;
        const double lo = std::max(0.0, (s - 1) * step);
        const double hi = std::min(2.0 * v1, (s + 1) * step);
        phi1 = std::max(phi1, golden_max(phi_b, lo, hi, 1e-12 * (1.0 + v1)));
    }

    FastReactionConfig frc;
    const double half = 0.5 * p.d_u;
    frc.d_A = half;
    frc.d_B = p.d_u + phi1;
    frc.h0 = half;
    frc.phi1 = phi1;
    frc.v1 = v1;
    frc.epsilon = epsilon;
    frc.phi_B = phi_b;
    frc.h = [phi_b, half](double v) { return half + phi_b(v); };
    frc.k = [phi_b, half, phi1](double v) { return half + phi1 - phi_b(v); };
    return frc;
}

double compatibility_residual(const FastReactionConfig& frc, double d_u, int samples) {
    if (!frc.phi_B) throw ValidationError("compatibility_residual needs a built config");
    double worst = 0.0;
    for (int s = 0; s <= samples; ++s) {
        const double v = 2.0 * frc.v1 * s / samples;
        const double h = frc.h(v), k = frc.k(v);
        const double lhs = frc.d_A + frc.d_B * h / (h + k);
        worst = std::max(worst, std::abs(lhs - (d_u + frc.phi_B(v))));
    }
    return worst;
}

} // namespace xdl
