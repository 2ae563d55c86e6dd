#include "linear_solve.hpp"

#include "xdifflab/error.hpp"

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseCore>

#include <cmath>
#include <sstream>

namespace xdl::detail {

namespace {

using SpMat = Eigen::SparseMatrix<double, Eigen::RowMajor>;
using Vec = Eigen::VectorXd;

// Assembles diag - dt * L * diag(m). The Neumann mirror removes the boundary
// neighbour, so each row of L has one off-diagonal per interior face.
SpMat assemble(const Grid& g, std::span<const double> diag, std::span<const double> m, double dt) {
    const int nx = g.nx(), ny = g.ny();
    const double ax = dt / (g.hx() * g.hx());
    const double ay = dt / (g.hy() * g.hy());
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(g.size() * (g.dim() == 1 ? 3 : 5));
    for (int i = 0; i < nx; ++i)
        for (int j = 0; j < ny; ++j) {
            const auto r = static_cast<int>(g.index(i, j));
            double center = diag[r];
            auto link = [&](int ii, int jj, double a) {
                const auto c = static_cast<int>(g.index(ii, jj));
                trip.emplace_back(r, c, -a * m[c]);
                center += a * m[r];
            };
            if (i > 0) link(i - 1, j, ax);
            if (i < nx - 1) link(i + 1, j, ax);
            if (g.dim() == 2) {
                if (j > 0) link(i, j - 1, ay);
                if (j < ny - 1) link(i, j + 1, ay);
            }
            trip.emplace_back(r, r, center);
        }
    SpMat A(static_cast<Eigen::Index>(g.size()), static_cast<Eigen::Index>(g.size()));
    A.setFromTriplets(trip.begin(), trip.end());
    return A;
}

template <class Solver>
std::vector<double> run(Solver& solver, const SpMat& A, std::span<const double> rhs,
                        std::span<const double> guess, const KrylovSettings& s, const char* what) {
    solver.setTolerance(s.tol);
    solver.setMaxIterations(s.max_iters);
    solver.compute(A);
    const Eigen::Map<const Vec> b(rhs.data(), static_cast<Eigen::Index>(rhs.size()));
    const Eigen::Map<const Vec> x0(guess.data(), static_cast<Eigen::Index>(guess.size()));
    Vec x = solver.solveWithGuess(b, x0);
    const double bnorm = b.norm();
    const double rel = bnorm > 0.0 ? (b - A * x).norm() / bnorm : (A * x).norm();
    if (solver.info() != Eigen::Success || !std::isfinite(rel) || rel > 10.0 * s.tol) {
        std::ostringstream msg;
        msg << what << ": linear solve did not reach tolerance " << s.tol << " (relative residual "
            << rel << " after " << solver.iterations() << " iterations)";
        throw SolverError(msg.str());
    }
    return {x.data(), x.data() + x.size()};
}

} // namespace

std::vector<double> solve_symmetric(const Grid& g, std::span<const double> diag, double dt, double D,
                                    std::span<const double> rhs, std::span<const double> guess,
                                    const KrylovSettings& s, const char* what) {
    const std::vector<double> m(g.size(), D);
    const SpMat A = assemble(g, diag, m, dt);
    Eigen::ConjugateGradient<SpMat, Eigen::Lower | Eigen::Upper, Eigen::DiagonalPreconditioner<double>> cg;
    return run(cg, A, rhs, guess, s, what);
}

std::vector<double> solve_product_diffusion(const Grid& g, std::span<const double> diag,
                                            std::span<const double> mobility, double dt,
                                            std::span<const double> rhs, std::span<const double> guess,
                                            const KrylovSettings& s, const char* what) {
    const SpMat A = assemble(g, diag, mobility, dt);
    Eigen::BiCGSTAB<SpMat, Eigen::DiagonalPreconditioner<double>> bicg;
    return run(bicg, A, rhs, guess, s, what);
}

} // namespace xdl::detail
