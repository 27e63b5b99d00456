#include "fbmlab/quadrature.hpp"

#include <algorithm>
#include <numbers>

namespace fbm {

double unit_sphere_area(int dim) {
    return dim == 2 ? 2.0 * std::numbers::pi : 4.0 * std::numbers::pi;
}

double unit_ball_volume(int dim) {
    return dim == 2 ? std::numbers::pi : 4.0 * std::numbers::pi / 3.0;
}

std::vector<SpherePoint> sphere_quadrature(int dim, const Point& center, double r, int n_points) {
    if (!(r > 0.0)) throw GeometryError("sphere radius must be positive");
    if (n_points <= 0) throw DomainError("sphere quadrature needs a positive point count");
    std::vector<SpherePoint> pts(static_cast<std::size_t>(n_points));
    const double n = n_points;
    if (dim == 2) {
        const double w = 2.0 * std::numbers::pi * r / n;
        for (int k = 0; k < n_points; ++k) {
            const double th = 2.0 * std::numbers::pi * (k + 0.5) / n;
            const Point nu{std::cos(th), std::sin(th), 0.0};
            pts[k] = {{center[0] + r * nu[0], center[1] + r * nu[1], 0.0}, nu, w};
        }
        return pts;
    }
    const double w = 4.0 * std::numbers::pi * r * r / n;
    const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
    for (int k = 0; k < n_points; ++k) {
        const double zc = 1.0 - (2.0 * k + 1.0) / n;
        const double rho = std::sqrt(std::max(0.0, 1.0 - zc * zc));
        const double ph = golden * k;
        const Point nu{rho * std::cos(ph), rho * std::sin(ph), zc};
        pts[k] = {{center[0] + r * nu[0], center[1] + r * nu[1], center[2] + r * nu[2]}, nu, w};
    }
    return pts;
}

std::vector<SpherePoint> sphere_quadrature(const Grid& g, const Point& center, double r,
                                           int n_points) {
    if (!g.contains_ball(center, r)) {
        throw GeometryError("sphere exits the grid box");
    }
    return sphere_quadrature(g.dim, center, r, n_points);
}

int default_sphere_points(int dim, double r, double h) {
    if (dim == 2) {
        const double n = 4.0 * 2.0 * std::numbers::pi * r / h;
        return std::max(256, static_cast<int>(std::ceil(n)));
    }
    const double n = 4.0 * 4.0 * std::numbers::pi * r * r / (h * h);
    return std::max(2000, static_cast<int>(std::ceil(n)));
}

double shell_average(const ScalarField& f, const Point& z, double r, int n_points) {
    const Grid& g = f.grid;
    if (n_points <= 0) n_points = default_sphere_points(g.dim, r, g.h);
    const auto pts = sphere_quadrature(g, z, r, n_points);
    double s = 0.0;
    for (const auto& p : pts) s += p.w * interpolate(f, p.x);
    return s / std::pow(r, g.dim - 1);
}

double ball_integral(const ScalarField& f, const Point& z, double r, const BallOptions& opt) {
    const Grid& g = f.grid;
    if (!(r > 0.0)) throw GeometryError("ball radius must be positive");
    if (!g.contains_ball(z, r)) throw GeometryError("ball exits the grid box");
    const int d = g.dim;
    const int corners = 1 << d;
    std::size_t offs[8];
    for (int q = 0; q < corners; ++q) {
        std::size_t o = 0;
        for (int a = 0; a < d; ++a) {
            if ((q >> (d - 1 - a)) & 1) o += g.stride(a);
        }
        offs[q] = o;
    }
    int clo[3] = {0, 0, 0}, chi[3] = {0, 0, 0};
    for (int a = 0; a < d; ++a) {
        clo[a] = std::max(0, static_cast<int>(std::floor((z[a] - r - 0.5 * g.h - g.lo[a]) / g.h)));
        chi[a] = std::min(g.n_cells[a] - 1, static_cast<int>(std::floor((z[a] + r + 0.5 * g.h - g.lo[a]) / g.h)));
    }
    const int s = opt.subsamples;
    const double hs = g.h / s;
    const double reach = r + 0.5 * hs;
    const double reach2 = reach * reach;
    const double inner = std::max(0.0, r - 0.5 * hs);
    const double inner2 = inner * inner;
    const double ex2 = opt.exclude_radius * opt.exclude_radius;
    const double cellvol = g.cell_volume();
    const double wsub = std::pow(1.0 / s, d);
    double total = 0.0;
    for (int i = clo[0]; i <= chi[0]; ++i) {
        for (int j = clo[1]; j <= chi[1]; ++j) {
            for (int k = (d == 3 ? clo[2] : 0); k <= (d == 3 ? chi[2] : 0); ++k) {
                const int c[3] = {i, j, k};
                double dmin2 = 0.0, dmax2 = 0.0;
                for (int a = 0; a < d; ++a) {
                    const double a0 = g.lo[a] + c[a] * g.h;
                    const double q = std::clamp(z[a], a0, a0 + g.h);
                    dmin2 += (q - z[a]) * (q - z[a]);
                    const double far = std::max(std::abs(a0 - z[a]), std::abs(a0 + g.h - z[a]));
                    dmax2 += far * far;
                }
                if (dmin2 >= reach2) continue;
                const std::size_t base = g.index(i, j, k);
                double v[8];
                for (int q = 0; q < corners; ++q) v[q] = f.values[base + offs[q]];
                if (dmax2 <= inner2 && dmin2 >= ex2) {
                    double m = 0.0;
                    for (int q = 0; q < corners; ++q) m += v[q];
                    total += m / corners * cellvol;
                    continue;
                }
                double cell = 0.0;
                const int nk = d == 3 ? s : 1;
                for (int p = 0; p < s; ++p) {
                    const double tx = (p + 0.5) / s;
                    const double dx = g.lo[0] + (i + tx) * g.h - z[0];
                    for (int q = 0; q < s; ++q) {
                        const double ty = (q + 0.5) / s;
                        const double dy = g.lo[1] + (j + ty) * g.h - z[1];
                        for (int m = 0; m < nk; ++m) {
                            const double tz = d == 3 ? (m + 0.5) / s : 0.0;
                            const double dz = d == 3 ? g.lo[2] + (k + tz) * g.h - z[2] : 0.0;
                            const double dist2 = dx * dx + dy * dy + dz * dz;
                            if (dist2 >= reach2 || dist2 < ex2) continue;
                            double val;
                            if (d == 2) {
                                val = (1 - tx) * ((1 - ty) * v[0] + ty * v[1]) +
                                      tx * ((1 - ty) * v[2] + ty * v[3]);
                            } else {
                                const double c00 = (1 - tz) * v[0] + tz * v[1];
                                const double c01 = (1 - tz) * v[2] + tz * v[3];
                                const double c10 = (1 - tz) * v[4] + tz * v[5];
                                const double c11 = (1 - tz) * v[6] + tz * v[7];
                                val = (1 - tx) * ((1 - ty) * c00 + ty * c01) +
                                      tx * ((1 - ty) * c10 + ty * c11);
                            }
                            cell += dist2 <= inner2 ? val : ball_sample_weight(std::sqrt(dist2), r, hs) * val;
                        }
                    }
                }
                total += cell * wsub * cellvol;
            }
        }
    }
    return total;
}

double ball_volume_discrete(const Grid& g, const Point& z, double r, const BallOptions& opt) {
    return ball_integrate(g, z, r, opt, [](const Point&) { return 1.0; });
}

}  // namespace fbm
