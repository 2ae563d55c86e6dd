#pragma once

#include "xdifflab/grid.hpp"

#include <span>
#include <vector>

namespace xdl::detail {

struct KrylovSettings {
    double tol = 1e-10;
    int max_iters = 1000;
};

/// Solves diag[i] * w[i] - dt * D * (L w)[i] = rhs[i] with constant D by
/// Jacobi-preconditioned conjugate gradients. `guess` seeds the iteration.
std::vector<double> solve_symmetric(const Grid& g, std::span<const double> diag, double dt, double D,
                                    std::span<const double> rhs, std::span<const double> guess,
                                    const KrylovSettings& s, const char* what);

/// Solves diag[i] * w[i] - dt * (L (m .* w))[i] = rhs[i] (mobility inside the
/// Laplacian) by Jacobi-preconditioned BiCGSTAB.
std::vector<double> solve_product_diffusion(const Grid& g, std::span<const double> diag,
                                            std::span<const double> mobility, double dt,
                                            std::span<const double> rhs, std::span<const double> guess,
                                            const KrylovSettings& s, const char* what);

} // namespace xdl::detail
