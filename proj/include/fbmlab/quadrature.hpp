#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "fbmlab/errors.hpp"
#include "fbmlab/field.hpp"

namespace fbm {

struct SpherePoint {
    Point x;       // point on the sphere
    Point normal;  // outward unit normal (x - center) / r
    double w;      // quadrature weight
};

/// dim 2: n equispaced angles (offset by half a step), weights 2 pi r / n.
/// dim 3: Fibonacci spiral, weights 4 pi r^2 / n.
std::vector<SpherePoint> sphere_quadrature(int dim, const Point& center, double r, int n_points);

/// Same, but throws GeometryError unless the sphere lies inside the grid box.
std::vector<SpherePoint> sphere_quadrature(const Grid& g, const Point& center, double r,
                                           int n_points);

/// Point count scaled to the grid: about four points per h (2D) or per h^2 (3D),
/// never fewer than 256 (2D) / 2000 (3D).
int default_sphere_points(int dim, double r, double h);

/// |S^{n-1}|: 2 pi or 4 pi.
double unit_sphere_area(int dim);
/// |B_1|: pi or 4 pi / 3.
double unit_ball_volume(int dim);

/// r^{1-n} times the surface integral of f over the sphere of radius r around z.
/// n_points <= 0 picks default_sphere_points.
double shell_average(const ScalarField& f, const Point& z, double r, int n_points = 0);

/// Fraction of a subsample of width hs at distance dist from the center that
/// lies inside radius r, linearized across the sample: the ball indicator is
/// replaced by a ramp of width hs so that quadratures vary continuously in r.
inline double ball_sample_weight(double dist, double r, double hs) {
    return std::clamp((r - dist) / hs + 0.5, 0.0, 1.0);
}

struct BallOptions {
    int subsamples = 4;           // per axis, in every cell the ball touches
    double exclude_radius = 0.0;  // drop samples closer than this to the center
};

/// Integral over B_r(z) of the multilinear interpolant of f. Cells fully
/// inside the ball use the exact cell mean; cells cut by the sphere are
/// subsampled (BallOptions::subsamples per axis).
double ball_integral(const ScalarField& f, const Point& z, double r, const BallOptions& opt = {});

/// Midpoint-subsampled integral over B_r(z) of an arbitrary point function.
/// fn is called once per subsample point within half a subsample width of
/// the ball; samples straddling the sphere carry ball_sample_weight.
template <class Fn>
double ball_integrate(const Grid& g, const Point& z, double r, const BallOptions& opt, Fn&& fn) {
    if (!(r > 0.0)) throw GeometryError("ball radius must be positive");
    if (!g.contains_ball(z, r)) throw GeometryError("ball exits the grid box");
    const int d = g.dim;
    const int s = opt.subsamples;
    const double hs = g.h / s;
    const double wsub = std::pow(hs, d);
    const double reach = r + 0.5 * hs;
    int clo[3] = {0, 0, 0}, chi[3] = {0, 0, 0};
    for (int a = 0; a < d; ++a) {
        clo[a] = std::max(0, static_cast<int>(std::floor((z[a] - reach - g.lo[a]) / g.h)));
        chi[a] = std::min(g.n_cells[a] - 1, static_cast<int>(std::floor((z[a] + reach - g.lo[a]) / g.h)));
    }
    const double reach2 = reach * reach;
    const double inner = std::max(0.0, r - 0.5 * hs);
    const double inner2 = inner * inner;
    const double ex2 = opt.exclude_radius * opt.exclude_radius;
    double total = 0.0;
    Point x{};
    const int kmax = d == 3 ? chi[2] : 0;
    const int kmin = d == 3 ? clo[2] : 0;
    for (int i = clo[0]; i <= chi[0]; ++i) {
        for (int j = clo[1]; j <= chi[1]; ++j) {
            for (int k = kmin; k <= kmax; ++k) {
                const int c[3] = {i, j, k};
                double dmin2 = 0.0;
                for (int a = 0; a < d; ++a) {
                    const double a0 = g.lo[a] + c[a] * g.h;
                    const double q = std::clamp(z[a], a0, a0 + g.h);
                    dmin2 += (q - z[a]) * (q - z[a]);
                }
                if (dmin2 >= reach2) continue;
                double cell = 0.0;
                const int nk = d == 3 ? s : 1;
                for (int p = 0; p < s; ++p) {
                    x[0] = g.lo[0] + i * g.h + (p + 0.5) * hs;
                    const double dx = x[0] - z[0];
                    for (int q = 0; q < s; ++q) {
                        x[1] = g.lo[1] + j * g.h + (q + 0.5) * hs;
                        const double dy = x[1] - z[1];
                        for (int m = 0; m < nk; ++m) {
                            double dz = 0.0;
                            if (d == 3) {
                                x[2] = g.lo[2] + k * g.h + (m + 0.5) * hs;
                                dz = x[2] - z[2];
                            }
                            const double dist2 = dx * dx + dy * dy + dz * dz;
                            if (dist2 >= reach2 || dist2 < ex2) continue;
                            if (dist2 <= inner2) {
                                cell += fn(x);
                            } else {
                                cell += ball_sample_weight(std::sqrt(dist2), r, hs) * fn(x);
                            }
                        }
                    }
                }
                total += cell;
            }
        }
    }
    return total * wsub;
}

/// Volume of B_r(z) as resolved by the subsampling above.
double ball_volume_discrete(const Grid& g, const Point& z, double r, const BallOptions& opt = {});

}  // namespace fbm
