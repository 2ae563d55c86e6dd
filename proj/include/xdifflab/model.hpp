#pragma once

#include <functional>
#include <string>
#include <utility>
#include <vector>

namespace xdl {

/// The cross-diffusion function phi(v) >= 0 appearing as Delta(u * phi(v)).
class CrossFunction {
public:
    enum class Kind { linear, power, tabulated };

    /// phi(v) = slope * v (the SKT term d12 * u * v).
    static CrossFunction linear(double slope);
    /// phi(v) = coeff * v^exponent; exponent must be 0 or >= 1 so phi is C^1 on [0, inf).
    static CrossFunction power(double coeff, double exponent);
    /// Monotone (Fritsch-Carlson) cubic Hermite through the samples, extended
    /// linearly with the end slope past the last node. Nodes must start at v = 0.
    static CrossFunction tabulated(std::vector<std::pair<double, double>> samples);

    Kind kind() const noexcept { return kind_; }
    double operator()(double v) const;
    double derivative(double v) const;

    double slope() const noexcept { return a_; }
    double coeff() const noexcept { return a_; }
    double exponent() const noexcept { return b_; }
    const std::vector<std::pair<double, double>>& table() const noexcept { return table_; }

    /// Throws ModelError if phi < 0 anywhere on a dense sample of [0, v_max].
    void validate_nonnegative(double v_max, int samples = 10000) const;

    bool operator==(const CrossFunction&) const = default;

private:
    Kind kind_ = Kind::linear;
    double a_ = 0.0;
    double b_ = 1.0;
    std::vector<std::pair<double, double>> table_;
    std::vector<double> slopes_;
};

std::string to_string(CrossFunction::Kind k);

enum class Regime { theorem1, theorem2, unsupported };
std::string to_string(Regime r);

/// Coefficients of the limit system
///   u_t - Delta((d_u + phi(v)) u) = u (r_u - r_a u^a - r_b v^b)
///   v_t - d_v Delta v            = v (r_v - r_c v^c - r_d u^d)
struct ModelParams {
    double d_u = 1.0, d_v = 1.0;
    double r_u = 1.0, r_v = 1.0, r_a = 1.0, r_b = 1.0, r_c = 1.0, r_d = 1.0;
    double a = 1.0, b = 1.0, c = 1.0, d = 1.0;
    CrossFunction phi = CrossFunction::linear(1.0);

    /// All twelve scalars strictly positive and finite, otherwise ModelError.
    void validate() const;

    /// theorem1 iff d < a; theorem2 iff a <= d, a <= 1, d <= 2.
    Regime regime() const noexcept;

    bool operator==(const ModelParams&) const = default;
};

double reaction_u(double u, double v, const ModelParams& p);
double reaction_v(double u, double v, const ModelParams& p);

/// Equilibrium value (r_v / r_c)^(1/c) of the logistic part of the v-reaction.
double v_reaction_zero(const ModelParams& p);

struct VBounds {
    double paper_bound;      // max(sup v_in, [r_v / (r_c (c+1))]^(1/c))
    double comparison_bound; // max(sup v_in, (r_v / r_c)^(1/c))
};
VBounds v_bound_constants(const ModelParams& p, double v_in_sup);

struct MassGrowth {
    double k_paper; // argmax of (r_u - r_a w^a) w over w >= 0
    double k_true;  // the supremum value itself
};
MassGrowth mass_growth_constant(const ModelParams& p);

/// C^2 quintic smoothstep cutoff: 1 on [0, v1], 0 on [2 v1, inf).
double cutoff(double v, double v1);

/// Data of the three-species relaxation system. h and k are the exchange
/// rates A <- B and B <- A; built configs also carry the truncated phi_B.
struct FastReactionConfig {
    double d_A = 0.0;
    double d_B = 0.0;
    double h0 = 0.0;
    double phi1 = 0.0;
    double v1 = 0.0;
    double epsilon = 0.0;
    std::function<double(double)> h;
    std::function<double(double)> k;
    std::function<double(double)> phi_B;
};

/// d_A = d_u/2, d_B = d_u + phi1, h = d_u/2 + phi_B, k = d_u/2 + phi1 - phi_B with
/// phi_B = cutoff(v, v1) * phi(v) and v1 = max(v_in_sup, [r_v/(r_c(c+1))]^(1/c)).
FastReactionConfig build_fast_reaction(const ModelParams& p, double v_in_sup, double epsilon);

/// |d_A + d_B h/(h+k) - (d_u + phi_B)| maximised over `samples` points of [0, 2 v1].
double compatibility_residual(const FastReactionConfig& frc, double d_u, int samples = 10000);

} // namespace xdl
