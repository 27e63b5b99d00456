#include <algorithm>
#include <cmath>
#include <string>

#include "fbmlab/errors.hpp"
#include "fbmlab/field.hpp"

namespace fbm {

double norm(const Point& p, int dim) {
    double s = 0.0;
    for (int a = 0; a < dim; ++a) s += p[a] * p[a];
    return std::sqrt(s);
}

double dot(const Point& a, const Point& b, int dim) {
    double s = 0.0;
    for (int k = 0; k < dim; ++k) s += a[k] * b[k];
    return s;
}

Point sub(const Point& a, const Point& b) {
    return {a[0] - b[0], a[1] - b[1], a[2] - b[2]};
}

Grid Grid::make(int dim, const Point& lo, const Point& hi, const std::array<int, 3>& n_cells) {
    if (dim != 2 && dim != 3) {
        throw ConfigError("grid.dim must be 2 or 3");
    }
    Grid g;
    g.dim = dim;
    double h0 = 0.0;
    for (int a = 0; a < 3; ++a) {
        if (a >= dim) {
            g.lo[a] = g.hi[a] = 0.0;
            g.n_cells[a] = 0;
            continue;
        }
        if (!(hi[a] > lo[a]) || !std::isfinite(lo[a]) || !std::isfinite(hi[a])) {
            throw ConfigError("grid: hi must exceed lo on axis " + std::to_string(a));
        }
        if (n_cells[a] <= 0) {
            throw ConfigError("grid.n_cells must be positive on axis " + std::to_string(a));
        }
        g.lo[a] = lo[a];
        g.hi[a] = hi[a];
        g.n_cells[a] = n_cells[a];
        const double ha = (hi[a] - lo[a]) / n_cells[a];
        if (a == 0) {
            h0 = ha;
        } else if (std::abs(ha - h0) > 1e-12 * h0) {
            throw ConfigError("grid spacing must be identical on every axis");
        }
    }
    g.h = h0;
    return g;
}

Grid Grid::cube(int dim, double lo, double hi, int n) {
    return make(dim, {lo, lo, lo}, {hi, hi, hi}, {n, n, n});
}

std::size_t Grid::node_count() const {
    return static_cast<std::size_t>(nodes(0)) * nodes(1) * nodes(2);
}

std::size_t Grid::cell_count() const {
    std::size_t c = 1;
    for (int a = 0; a < dim; ++a) c *= static_cast<std::size_t>(n_cells[a]);
    return c;
}

std::size_t Grid::stride(int axis) const {
    std::size_t s = 1;
    for (int a = 2; a > axis; --a) s *= static_cast<std::size_t>(nodes(a));
    return s;
}

std::array<int, 3> Grid::multi_index(std::size_t idx) const {
    const std::size_t n2 = nodes(2);
    const std::size_t n1 = nodes(1);
    const int k = static_cast<int>(idx % n2);
    idx /= n2;
    const int j = static_cast<int>(idx % n1);
    const int i = static_cast<int>(idx / n1);
    return {i, j, k};
}

Point Grid::node(int i, int j, int k) const {
    Point p{lo[0] + i * h, lo[1] + j * h, 0.0};
    if (dim == 3) p[2] = lo[2] + k * h;
    return p;
}

Point Grid::node(std::size_t idx) const {
    const auto m = multi_index(idx);
    return node(m[0], m[1], m[2]);
}

bool Grid::on_boundary(std::size_t idx) const {
    const auto m = multi_index(idx);
    for (int a = 0; a < dim; ++a) {
        if (m[a] == 0 || m[a] == n_cells[a]) return true;
    }
    return false;
}

bool Grid::contains(const Point& p) const {
    for (int a = 0; a < dim; ++a) {
        const double slack = 1e-12 * (hi[a] - lo[a]);
        if (!(p[a] >= lo[a] - slack && p[a] <= hi[a] + slack)) return false;
    }
    return true;
}

bool Grid::contains_ball(const Point& c, double r) const {
    for (int a = 0; a < dim; ++a) {
        const double slack = 1e-12 * (hi[a] - lo[a]);
        if (!(c[a] - r >= lo[a] - slack && c[a] + r <= hi[a] + slack)) return false;
    }
    return true;
}

double Grid::cell_volume() const {
    return std::pow(h, dim);
}

double Grid::box_volume() const {
    double v = 1.0;
    for (int a = 0; a < dim; ++a) v *= hi[a] - lo[a];
    return v;
}

bool Grid::same_as(const Grid& o) const {
    return dim == o.dim && lo == o.lo && hi == o.hi && n_cells == o.n_cells;
}

ScalarField::ScalarField(const Grid& g, double fill) : grid(g), values(g.node_count(), fill) {}

VectorField::VectorField(const Grid& g, double fill)
    : grid(g), values(g.node_count() * static_cast<std::size_t>(g.dim), fill) {}

Point VectorField::at(std::size_t i) const {
    Point p{};
    const int d = grid.dim;
    for (int c = 0; c < d; ++c) p[c] = values[i * d + c];
    return p;
}

void VectorField::set(std::size_t i, const Point& v) {
    const int d = grid.dim;
    for (int c = 0; c < d; ++c) values[i * d + c] = v[c];
}

VectorField gradient(const ScalarField& f) {
    const Grid& g = f.grid;
    for (int a = 0; a < g.dim; ++a) {
        if (g.nodes(a) < 3) {
            throw GeometryError("gradient needs at least 3 nodes per axis");
        }
    }
    VectorField out(g);
    const int d = g.dim;
    const double inv2h = 1.0 / (2.0 * g.h);
    for (std::size_t idx = 0; idx < g.node_count(); ++idx) {
        const auto m = g.multi_index(idx);
        for (int a = 0; a < d; ++a) {
            const std::size_t s = g.stride(a);
            const int n = g.n_cells[a];
            double v;
            if (m[a] == 0) {
                v = (-3.0 * f[idx] + 4.0 * f[idx + s] - f[idx + 2 * s]) * inv2h;
            } else if (m[a] == n) {
                v = (3.0 * f[idx] - 4.0 * f[idx - s] + f[idx - 2 * s]) * inv2h;
            } else {
                v = (f[idx + s] - f[idx - s]) * inv2h;
            }
            out.values[idx * d + a] = v;
        }
    }
    return out;
}

double max_norm(const VectorField& v) {
    double m = 0.0;
    for (std::size_t i = 0; i < v.node_count(); ++i) {
        m = std::max(m, norm(v.at(i), v.grid.dim));
    }
    return m;
}

double max_abs(const ScalarField& f) {
    double m = 0.0;
    for (double x : f.values) m = std::max(m, std::abs(x));
    return m;
}

namespace {

struct CellLocation {
    std::size_t base;      // index of the lowest corner
    std::array<double, 3> t;  // local coordinates in [0, 1]
};

CellLocation locate(const Grid& g, const Point& p) {
    if (!g.contains(p)) {
        throw GeometryError("point lies outside the grid box");
    }
    CellLocation loc{0, {0.0, 0.0, 0.0}};
    int c[3] = {0, 0, 0};
    for (int a = 0; a < g.dim; ++a) {
        double s = (p[a] - g.lo[a]) / g.h;
        // Points within round-off of a node plane land on it exactly.
        const double sr = std::round(s);
        if (std::abs(s - sr) <= 1e-10) s = sr;
        int ci = static_cast<int>(std::floor(s));
        ci = std::clamp(ci, 0, g.n_cells[a] - 1);
        c[a] = ci;
        loc.t[a] = std::clamp(s - ci, 0.0, 1.0);
    }
    loc.base = g.index(c[0], c[1], c[2]);
    return loc;
}

}  // namespace

double interpolate(const ScalarField& f, const Point& p) {
    const Grid& g = f.grid;
    const auto loc = locate(g, p);
    const double* v = f.values.data();
    if (g.dim == 2) {
        const std::size_t s0 = g.stride(0);
        const double tx = loc.t[0], ty = loc.t[1];
        const std::size_t b = loc.base;
        return (1 - tx) * ((1 - ty) * v[b] + ty * v[b + 1]) +
               tx * ((1 - ty) * v[b + s0] + ty * v[b + s0 + 1]);
    }
    const std::size_t s0 = g.stride(0), s1 = g.stride(1);
    const double tx = loc.t[0], ty = loc.t[1], tz = loc.t[2];
    const std::size_t b = loc.base;
    const double c00 = (1 - tz) * v[b] + tz * v[b + 1];
    const double c01 = (1 - tz) * v[b + s1] + tz * v[b + s1 + 1];
    const double c10 = (1 - tz) * v[b + s0] + tz * v[b + s0 + 1];
    const double c11 = (1 - tz) * v[b + s0 + s1] + tz * v[b + s0 + s1 + 1];
    return (1 - tx) * ((1 - ty) * c00 + ty * c01) + tx * ((1 - ty) * c10 + ty * c11);
}

Point interpolate(const VectorField& f, const Point& p) {
    const Grid& g = f.grid;
    const auto loc = locate(g, p);
    const int d = g.dim;
    Point out{};
    const int corners = 1 << d;
    for (int q = 0; q < corners; ++q) {
        double w = 1.0;
        std::size_t idx = loc.base;
        for (int a = 0; a < d; ++a) {
            const int bit = (q >> (d - 1 - a)) & 1;
            w *= bit ? loc.t[a] : 1.0 - loc.t[a];
            idx += bit * g.stride(a);
        }
        for (int c = 0; c < d; ++c) out[c] += w * f.values[idx * d + c];
    }
    return out;
}

ValueGrad interpolate_with_gradient(const ScalarField& f, const Point& p) {
    const Grid& g = f.grid;
    const auto loc = locate(g, p);
    const double* v = f.values.data();
    const double ih = 1.0 / g.h;
    ValueGrad out{0.0, {0.0, 0.0, 0.0}};
    const std::size_t b = loc.base;
    if (g.dim == 2) {
        const std::size_t s0 = g.stride(0);
        const double tx = loc.t[0], ty = loc.t[1];
        const double v00 = v[b], v01 = v[b + 1], v10 = v[b + s0], v11 = v[b + s0 + 1];
        out.value = (1 - tx) * ((1 - ty) * v00 + ty * v01) + tx * ((1 - ty) * v10 + ty * v11);
        out.grad[0] = ((1 - ty) * (v10 - v00) + ty * (v11 - v01)) * ih;
        out.grad[1] = ((1 - tx) * (v01 - v00) + tx * (v11 - v10)) * ih;
        return out;
    }
    const std::size_t s0 = g.stride(0), s1 = g.stride(1);
    const double tx = loc.t[0], ty = loc.t[1], tz = loc.t[2];
    const double v000 = v[b], v001 = v[b + 1];
    const double v010 = v[b + s1], v011 = v[b + s1 + 1];
    const double v100 = v[b + s0], v101 = v[b + s0 + 1];
    const double v110 = v[b + s0 + s1], v111 = v[b + s0 + s1 + 1];
    const double c00 = (1 - tz) * v000 + tz * v001;
    const double c01 = (1 - tz) * v010 + tz * v011;
    const double c10 = (1 - tz) * v100 + tz * v101;
    const double c11 = (1 - tz) * v110 + tz * v111;
    out.value = (1 - tx) * ((1 - ty) * c00 + ty * c01) + tx * ((1 - ty) * c10 + ty * c11);
    out.grad[0] = ((1 - ty) * (c10 - c00) + ty * (c11 - c01)) * ih;
    out.grad[1] = ((1 - tx) * (c01 - c00) + tx * (c11 - c10)) * ih;
    const double d00 = v001 - v000, d01 = v011 - v010, d10 = v101 - v100, d11 = v111 - v110;
    out.grad[2] = ((1 - tx) * ((1 - ty) * d00 + ty * d01) + tx * ((1 - ty) * d10 + ty * d11)) * ih;
    return out;
}

double smoothed_step(double s, double eps) {
    if (s <= 0.0) return 0.0;
    if (s >= eps) return 1.0;
    return s / eps;
}

double smoothed_step_derivative(double s, double eps) {
    return (s > 0.0 && s < eps) ? 1.0 / eps : 0.0;
}

ScalarField smoothed_indicator(const ScalarField& f, double eps) {
    if (!(eps > 0.0)) {
        throw DomainError("smoothing width eps must be positive");
    }
    ScalarField out(f.grid);
    for (std::size_t i = 0; i < f.size(); ++i) out[i] = smoothed_step(f[i], eps);
    return out;
}

std::vector<Point> free_boundary_points(const ScalarField& f) {
    const Grid& g = f.grid;
    std::vector<Point> pts;
    for (std::size_t idx = 0; idx < g.node_count(); ++idx) {
        const auto m = g.multi_index(idx);
        for (int a = 0; a < g.dim; ++a) {
            if (m[a] == g.n_cells[a]) continue;
            const std::size_t nb = idx + g.stride(a);
            double fa = f[idx], fb = f[nb];
            std::size_t ia = idx, ib = nb;
            if (!(fa > 0.0 && fb <= 0.0)) {
                if (fb > 0.0 && fa <= 0.0) {
                    std::swap(fa, fb);
                    std::swap(ia, ib);
                } else {
                    continue;
                }
            }
            const double t = fa / (fa - fb);
            const Point pa = g.node(ia), pb = g.node(ib);
            Point p{};
            for (int c = 0; c < g.dim; ++c) p[c] = pa[c] + t * (pb[c] - pa[c]);
            pts.push_back(p);
        }
    }
    std::sort(pts.begin(), pts.end());
    pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
    return pts;
}

double box_integral(const ScalarField& f) {
    const Grid& g = f.grid;
    double s = 0.0;
    for (std::size_t idx = 0; idx < g.node_count(); ++idx) {
        const auto m = g.multi_index(idx);
        double w = 1.0;
        for (int a = 0; a < g.dim; ++a) {
            if (m[a] == 0 || m[a] == g.n_cells[a]) w *= 0.5;
        }
        s += w * f[idx];
    }
    return s * g.cell_volume();
}

double box_mean(const ScalarField& f) {
    return box_integral(f) / f.grid.box_volume();
}

}  // namespace fbm
