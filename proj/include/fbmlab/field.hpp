#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <vector>

namespace fbm {

/// Point in up to three dimensions; unused trailing components are zero.
using Point = std::array<double, 3>;

double norm(const Point& p, int dim);
double dot(const Point& a, const Point& b, int dim);
Point sub(const Point& a, const Point& b);

/// Uniform Cartesian node grid on a box. Nodes are stored row-major:
/// axis 0 varies slowest, the last active axis fastest.
struct Grid {
    int dim = 2;
    Point lo{};
    Point hi{};
    std::array<int, 3> n_cells{};  // zero for unused axes
    double h = 0.0;

    /// Throws ConfigError unless hi > lo, n_cells > 0 and the spacing agrees
    /// across axes to 1e-12 (relative).
    static Grid make(int dim, const Point& lo, const Point& hi, const std::array<int, 3>& n_cells);

    /// Cube [lo, hi]^dim with n cells per axis.
    static Grid cube(int dim, double lo, double hi, int n);

    int nodes(int axis) const { return axis < dim ? n_cells[axis] + 1 : 1; }
    std::size_t node_count() const;
    std::size_t cell_count() const;
    std::size_t stride(int axis) const;
    std::size_t index(int i, int j, int k = 0) const {
        return (static_cast<std::size_t>(i) * nodes(1) + j) * nodes(2) + k;
    }
    std::array<int, 3> multi_index(std::size_t idx) const;
    Point node(int i, int j, int k = 0) const;
    Point node(std::size_t idx) const;
    bool on_boundary(std::size_t idx) const;

    /// True if p lies in the box (with relative slack 1e-12 of the box size).
    bool contains(const Point& p) const;
    /// True if the closed ball B_r(c) lies in the box.
    bool contains_ball(const Point& c, double r) const;
    double cell_volume() const;
    double box_volume() const;

    bool same_as(const Grid& other) const;
};

struct ScalarField {
    Grid grid;
    std::vector<double> values;

    ScalarField() = default;
    explicit ScalarField(const Grid& g, double fill = 0.0);

    double& operator[](std::size_t i) { return values[i]; }
    double operator[](std::size_t i) const { return values[i]; }
    std::size_t size() const { return values.size(); }
};

/// Node-major storage: component c of node i lives at values[i * dim + c].
struct VectorField {
    Grid grid;
    std::vector<double> values;

    VectorField() = default;
    explicit VectorField(const Grid& g, double fill = 0.0);

    Point at(std::size_t i) const;
    void set(std::size_t i, const Point& v);
    std::size_t node_count() const { return grid.node_count(); }
};

template <class Fn>
ScalarField sample_scalar(const Grid& g, Fn&& fn) {
    ScalarField f(g);
    for (std::size_t i = 0; i < f.size(); ++i) {
        f[i] = fn(g.node(i));
    }
    return f;
}

template <class Fn>
VectorField sample_vector(const Grid& g, Fn&& fn) {
    VectorField f(g);
    for (std::size_t i = 0; i < g.node_count(); ++i) {
        f.set(i, fn(g.node(i)));
    }
    return f;
}

/// Second-order differences: centered inside, one-sided at faces.
/// Throws GeometryError if any active axis has fewer than 3 nodes.
VectorField gradient(const ScalarField& f);

double max_norm(const VectorField& v);
double max_abs(const ScalarField& f);

/// Multilinear interpolation. Throws GeometryError outside the box.
double interpolate(const ScalarField& f, const Point& p);
Point interpolate(const VectorField& f, const Point& p);

struct ValueGrad {
    double value;
    Point grad;
};

/// Value and exact gradient of the multilinear interpolant at p. On a cell
/// face the gradient of the cell with the larger index is used.
ValueGrad interpolate_with_gradient(const ScalarField& f, const Point& p);

/// H_eps(s) = 0 (s <= 0), s/eps (0 < s < eps), 1 (s >= eps).
double smoothed_step(double s, double eps);
double smoothed_step_derivative(double s, double eps);
ScalarField smoothed_indicator(const ScalarField& f, double eps);

/// Zero crossings of f along grid edges whose endpoints go from > 0 to <= 0,
/// located by linear interpolation; sorted lexicographically, duplicates removed.
std::vector<Point> free_boundary_points(const ScalarField& f);

/// Integral of the multilinear interpolant over the box (trapezoid weights).
double box_integral(const ScalarField& f);
double box_mean(const ScalarField& f);

}  // namespace fbm
