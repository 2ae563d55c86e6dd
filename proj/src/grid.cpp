#include "xdifflab/grid.hpp"

#include "xdifflab/error.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace xdl {

Grid::Grid(int dim, std::array<int, 2> n, std::array<double, 2> length)
    : dim_(dim), n_(n), length_(length) {
    for (int a = 0; a < dim_; ++a) {
        if (n_[a] < 3) throw ValidationError("grid: every axis needs at least 3 cells");
        if (!(length_[a] > 0.0) || !std::isfinite(length_[a]))
            throw ValidationError("grid: axis length must be positive and finite");
    }
}

Grid Grid::line(int nx, double lx) { return Grid(1, {nx, 1}, {lx, 1.0}); }

Grid Grid::rect(int nx, int ny, double lx, double ly) { return Grid(2, {nx, ny}, {lx, ly}); }

double Grid::min_spacing() const noexcept { return dim_ == 1 ? hx() : std::min(hx(), hy()); }

double Grid::boundary_distance(int i, int j) const noexcept {
    const double xi = x(i);
    double d = std::min(xi, lx() - xi);
    if (dim_ == 2) {
        const double yj = y(j);
        d = std::min(d, std::min(yj, ly() - yj));
    }
    return d;
}

Grid Grid::refined(int factor) const {
    if (factor < 1) throw ValidationError("grid: refinement factor must be >= 1");
    if (dim_ == 1) return line(nx() * factor, lx());
    return rect(nx() * factor, ny() * factor, lx(), ly());
}

Field::Field(Grid g, std::vector<double> v) : grid(std::move(g)), values(std::move(v)) {
    if (values.size() != grid.size())
        throw ValidationError("field: value count does not match grid cell count");
}

Field::Field(Grid g, double fill) : grid(std::move(g)), values(grid.size(), fill) {}

Field Field::sample(const Grid& g, const std::function<double(double, double)>& f) {
    Field out(g);
    for (int i = 0; i < g.nx(); ++i)
        for (int j = 0; j < g.ny(); ++j) out[g.index(i, j)] = f(g.x(i), g.y(j));
    return out;
}

double Field::max() const { return *std::max_element(values.begin(), values.end()); }
double Field::min() const { return *std::min_element(values.begin(), values.end()); }

bool Field::all_finite() const noexcept {
    return std::all_of(values.begin(), values.end(), [](double v) { return std::isfinite(v); });
}

void require_finite(const Field& f, const char* what) {
    if (!f.all_finite()) throw ValidationError(std::string(what) + ": non-finite value");
}

Field laplacian_neumann(const Field& f) {
    require_finite(f, "laplacian_neumann input");
    const Grid& g = f.grid;
    const int nx = g.nx();
    const int ny = g.ny();
    const double ix2 = 1.0 / (g.hx() * g.hx());
    const double iy2 = 1.0 / (g.hy() * g.hy());
    Field out(g);
    for (int i = 0; i < nx; ++i) {
        for (int j = 0; j < ny; ++j) {
            const std::size_t k = g.index(i, j);
            const double c = f[k];
            // mirrored ghost cells: the outer neighbour equals the cell itself
            const double w = i > 0 ? f[g.index(i - 1, j)] : c;
            const double e = i < nx - 1 ? f[g.index(i + 1, j)] : c;
            double lap = ((e - c) - (c - w)) * ix2;
            if (g.dim() == 2) {
                const double s = j > 0 ? f[g.index(i, j - 1)] : c;
                const double n = j < ny - 1 ? f[g.index(i, j + 1)] : c;
                lap += ((n - c) - (c - s)) * iy2;
            }
            out[k] = lap;
        }
    }
    return out;
}

double integrate(const Field& f) {
    require_finite(f, "integrate input");
    double sum = 0.0;
    for (double v : f.values) sum += v;
    return sum * f.grid.cell_volume();
}

double lp_norm(const Field& f, double p) {
    if (!(p > 0.0)) throw ValidationError("lp_norm: exponent must be positive");
    require_finite(f, "lp_norm input");
    if (std::isinf(p)) {
        double m = 0.0;
        for (double v : f.values) m = std::max(m, std::abs(v));
        return m;
    }
    double sum = 0.0;
    if (p == 2.0) {
        for (double v : f.values) sum += v * v;
        return std::sqrt(sum * f.grid.cell_volume());
    }
    for (double v : f.values) sum += std::pow(std::abs(v), p);
    return std::pow(sum * f.grid.cell_volume(), 1.0 / p);
}

namespace {
void require_same_grid(const Field& a, const Field& b) {
    if (!(a.grid == b.grid)) throw ValidationError("field arithmetic on mismatched grids");
}
} // namespace

Field operator+(const Field& a, const Field& b) {
    require_same_grid(a, b);
    Field out(a.grid);
    for (std::size_t k = 0; k < a.size(); ++k) out[k] = a[k] + b[k];
    return out;
}

Field operator-(const Field& a, const Field& b) {
    require_same_grid(a, b);
    Field out(a.grid);
    for (std::size_t k = 0; k < a.size(); ++k) out[k] = a[k] - b[k];
    return out;
}

Field operator*(double s, const Field& a) {
    Field out(a.grid);
    for (std::size_t k = 0; k < a.size(); ++k) out[k] = s * a[k];
    return out;
}

namespace {
std::array<int, 2> refinement_ratio(const Grid& coarse, const Grid& fine) {
    if (coarse.dim() != fine.dim() || coarse.lx() != fine.lx() || coarse.ly() != fine.ly())
        throw ValidationError("grid transfer: grids cover different boxes");
    std::array<int, 2> r{fine.nx() / coarse.nx(), fine.ny() / coarse.ny()};
    if (r[0] < 1 || r[1] < 1 || r[0] * coarse.nx() != fine.nx() || r[1] * coarse.ny() != fine.ny())
        throw ValidationError("grid transfer: cell counts are not integer multiples");
    return r;
}
} // namespace

Field restrict_to(const Field& fine, const Grid& coarse) {
    const auto r = refinement_ratio(coarse, fine.grid);
    Field out(coarse);
    const double w = 1.0 / (r[0] * r[1]);
    for (int i = 0; i < coarse.nx(); ++i)
        for (int j = 0; j < coarse.ny(); ++j) {
            double s = 0.0;
            for (int a = 0; a < r[0]; ++a)
                for (int b = 0; b < r[1]; ++b) s += fine[fine.grid.index(i * r[0] + a, j * r[1] + b)];
            out[coarse.index(i, j)] = s * w;
        }
    return out;
}

Field prolong_to(const Field& coarse, const Grid& fine) {
    const auto r = refinement_ratio(coarse.grid, fine);
    Field out(fine);
    for (int i = 0; i < fine.nx(); ++i)
        for (int j = 0; j < fine.ny(); ++j)
            out[fine.index(i, j)] = coarse[coarse.grid.index(i / r[0], j / r[1])];
    return out;
}

std::string format_real(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void write_field_csv(std::ostream& out, const Field& f) {
    const Grid& g = f.grid;
    out << (g.dim() == 1 ? "x,value\n" : "x,y,value\n");
    for (int i = 0; i < g.nx(); ++i)
        for (int j = 0; j < g.ny(); ++j) {
            out << format_real(g.x(i)) << ',';
            if (g.dim() == 2) out << format_real(g.y(j)) << ',';
            out << format_real(f[g.index(i, j)]) << '\n';
        }
}

void write_field_csv(const std::string& path, const Field& f) {
    std::ofstream out(path);
    if (!out) throw Error("cannot open " + path + " for writing");
    write_field_csv(out, f);
}

Field read_field_csv(std::istream& in, const Grid& g) {
    std::string line;
    if (!std::getline(in, line)) throw ValidationError("field csv: empty input");
    const std::string expected = g.dim() == 1 ? "x,value" : "x,y,value";
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != expected) throw ValidationError("field csv: expected header '" + expected + "'");
    std::vector<double> values;
    values.reserve(g.size());
    while (std::getline(in, line)) {
        if (line.empty() || line == "\r") continue;
        const auto comma = line.rfind(',');
        if (comma == std::string::npos) throw ValidationError("field csv: malformed row '" + line + "'");
        std::istringstream cell(line.substr(comma + 1));
        double v = 0.0;
        if (!(cell >> v)) throw ValidationError("field csv: malformed value in '" + line + "'");
        values.push_back(v);
    }
    if (values.size() != g.size())
        throw ValidationError("field csv: row count does not match the grid");
    Field f(g, std::move(values));
    require_finite(f, "field csv");
    return f;
}

Field read_field_csv(const std::string& path, const Grid& g) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open field file " + path);
    return read_field_csv(in, g);
}

} // namespace xdl
