#pragma once

#include <array>
#include <cstddef>
#include <functional>
#include <iosfwd>
#include <limits>
#include <span>
#include <string>
#include <vector>

namespace xdl {

/// Uniform cell-centered mesh on the box [0, lx] (x [0, ly] in 2D).
///
/// Cells are stored row-major with y fastest: index(i, j) = i * ny + j.
/// A 1D grid reports ny() == 1 and ly() == 1 so that cell volumes and
/// integrals need no special casing.
class Grid {
public:
    static Grid line(int nx, double lx);
    static Grid rect(int nx, int ny, double lx, double ly);

    int dim() const noexcept { return dim_; }
    int nx() const noexcept { return n_[0]; }
    int ny() const noexcept { return n_[1]; }
    double lx() const noexcept { return length_[0]; }
    double ly() const noexcept { return length_[1]; }
    double hx() const noexcept { return length_[0] / n_[0]; }
    double hy() const noexcept { return length_[1] / n_[1]; }

    std::size_t size() const noexcept { return static_cast<std::size_t>(n_[0]) * n_[1]; }
    double cell_volume() const noexcept { return hx() * hy(); }
    double domain_volume() const noexcept { return length_[0] * length_[1]; }
    double min_spacing() const noexcept;

    double x(int i) const noexcept { return (i + 0.5) * hx(); }
    double y(int j) const noexcept { return dim_ == 1 ? 0.0 : (j + 0.5) * hy(); }
    std::size_t index(int i, int j = 0) const noexcept {
        return static_cast<std::size_t>(i) * n_[1] + j;
    }

    /// Distance from the center of cell (i, j) to the box boundary.
    double boundary_distance(int i, int j = 0) const noexcept;

    /// Same box with every used axis subdivided by `factor`.
    Grid refined(int factor) const;

    bool operator==(const Grid&) const = default;

private:
    Grid(int dim, std::array<int, 2> n, std::array<double, 2> length);

    int dim_ = 1;
    std::array<int, 2> n_{3, 1};
    std::array<double, 2> length_{1.0, 1.0};
};

/// One real value per cell of a grid.
struct Field {
    Grid grid;
    std::vector<double> values;

    Field(Grid g, std::vector<double> v);
    Field(Grid g, double fill = 0.0);

    static Field sample(const Grid& g, const std::function<double(double, double)>& f);

    std::size_t size() const noexcept { return values.size(); }
    double& operator[](std::size_t k) { return values[k]; }
    double operator[](std::size_t k) const { return values[k]; }

    double max() const;
    double min() const;
    bool all_finite() const noexcept;
};

inline constexpr double kInfinityNorm = std::numeric_limits<double>::infinity();

/// Throws ValidationError when any value is NaN/Inf. `what` names the field.
void require_finite(const Field& f, const char* what = "field");

/// Five-point (three-point in 1D) Laplacian with ghost-cell mirroring, so the
/// discrete normal derivative vanishes on every boundary face.
Field laplacian_neumann(const Field& f);

/// Sum of values times cell volume, accumulated in index order.
double integrate(const Field& f);

/// (integral |f|^p)^(1/p); pass kInfinityNorm for the max norm.
double lp_norm(const Field& f, double p);

/// Pointwise helpers used throughout the solvers and diagnostics.
Field operator+(const Field& a, const Field& b);
Field operator-(const Field& a, const Field& b);
Field operator*(double s, const Field& a);

/// Average children onto a grid coarser by an integer factor per axis.
Field restrict_to(const Field& fine, const Grid& coarse);

/// Piecewise-constant injection onto a grid finer by an integer factor.
Field prolong_to(const Field& coarse, const Grid& fine);

/// Snapshot CSV: header `x[,y],value`, cell centers, y-fastest rows,
/// 17 significant digits.
void write_field_csv(std::ostream& out, const Field& f);
void write_field_csv(const std::string& path, const Field& f);
Field read_field_csv(std::istream& in, const Grid& g);
Field read_field_csv(const std::string& path, const Grid& g);

/// %.17g formatting shared by every text writer.
std::string format_real(double v);

} // namespace xdl
