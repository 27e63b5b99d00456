#include "fbmlab/blowup.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "fbmlab/errors.hpp"
#include "fbmlab/quadrature.hpp"

namespace fbm {

namespace {

Point normalized(const Point& p) {
    const double n = std::sqrt(p[0] * p[0] + p[1] * p[1] + p[2] * p[2]);
    return {p[0] / n, p[1] / n, p[2] / n};
}

// Unit vectors from an m x m cell-centered grid on each face of the cube,
// projected to the sphere. Invariant under the cube's symmetry group.
std::vector<Point> cube_sphere(int m) {
    std::vector<Point> out;
    out.reserve(6 * m * m);
    for (int axis = 0; axis < 3; ++axis) {
        for (int sign = -1; sign <= 1; sign += 2) {
            for (int i = 0; i < m; ++i) {
                for (int j = 0; j < m; ++j) {
                    Point p{};
                    p[axis] = sign;
                    p[(axis + 1) % 3] = -1.0 + (2.0 * i + 1.0) / m;
                    p[(axis + 2) % 3] = -1.0 + (2.0 * j + 1.0) / m;
                    out.push_back(normalized(p));
                }
            }
        }
    }
    return out;
}

std::vector<Point> circle(int n) {
    std::vector<Point> out;
    for (int k = 0; k < n; ++k) {
        const double t = 2.0 * std::numbers::pi * (k + 0.5) / n;
        out.push_back({std::cos(t), std::sin(t), 0.0});
    }
    return out;
}

// Unit moves {-1,0,1}^dim \ {0}; invariant under signed axis permutations, so a
// pattern search built on them commutes with the grid's quarter turns.
std::vector<Point> pattern_moves(int dim) {
    std::vector<Point> out;
    const int kmax = dim == 3 ? 1 : 0;
    for (int i = -1; i <= 1; ++i) {
        for (int j = -1; j <= 1; ++j) {
            for (int k = -kmax; k <= kmax; ++k) {
                if (i == 0 && j == 0 && k == 0) continue;
                out.push_back(normalized({double(i), double(j), double(k)}));
            }
        }
    }
    return out;
}

}  // namespace

ScalarField rescale(const ScalarField& u, const Point& z, double r, const Grid& ref) {
    if (!(r > 0.0)) throw ContractError("scale must be positive");
    if (ref.dim != u.grid.dim) throw ContractError("reference grid dimension differs");
    const Grid& src = u.grid;
    for (int a = 0; a < src.dim; ++a) {
        const double slack = 1e-12 * (src.hi[a] - src.lo[a]);
        if (z[a] + r * ref.lo[a] < src.lo[a] - slack || z[a] + r * ref.hi[a] > src.hi[a] + slack) {
            throw GeometryError("scaled reference box exits the source grid");
        }
    }
    return sample_scalar(ref, [&](const Point& y) {
        Point x{};
        for (int a = 0; a < src.dim; ++a) {
            x[a] = std::clamp(z[a] + r * y[a], src.lo[a], src.hi[a]);
        }
        return interpolate(u, x) / r;
    });
}

double homogeneity_deviation(const ScalarField& u, const Point& z, double r, int subsamples) {
    const Grid& g = u.grid;
    BallOptions opt;
    opt.subsamples = subsamples;
    const double s = ball_integrate(g, z, r, opt, [&](const Point& x) {
        const ValueGrad vg = interpolate_with_gradient(u, x);
        return std::abs(vg.value - dot(vg.grad, sub(x, z), g.dim));
    });
    return s / std::pow(r, g.dim + 1);
}

double flux_energy_ratio(const FluxField& U, double r, int subsamples) {
    const Grid& g = U.field.grid;
    BallOptions opt;
    opt.subsamples = subsamples;
    const double s = ball_integrate(g, U.z, r, opt, [&](const Point& x) {
        const Point v = interpolate(U.field, x);
        return dot(v, v, g.dim);
    });
    return s * std::pow(r, 2 - g.dim);
}

FlatnessResult flatness_deficit(const ScalarField& u, double R) {
    const Grid& g = u.grid;
    const int d = g.dim;
    if (!g.contains_ball(Point{}, R)) throw GeometryError("reference ball exits the grid box");
    std::vector<Point> pts;
    std::vector<double> vals;
    for (std::size_t i = 0; i < g.node_count(); ++i) {
        const Point x = g.node(i);
        if (norm(x, d) <= R) {
            pts.push_back(x);
            vals.push_back(u[i]);
        }
    }
    for (const Point& w : d == 3 ? cube_sphere(20) : circle(512)) {
        const Point x{R * w[0], R * w[1], R * w[2]};
        pts.push_back(x);
        vals.push_back(interpolate(u, x));
    }
    auto sup_dev = [&](const Point& e) {
        // (x . e)^+ peaks on the ball at R e
        const Point top{R * e[0], R * e[1], R * e[2]};
        double m = std::abs(interpolate(u, top) - R);
        for (std::size_t i = 0; i < pts.size(); ++i) {
            m = std::max(m, std::abs(vals[i] - std::max(0.0, dot(pts[i], e, d))));
        }
        return m;
    };

    const std::vector<Point> dirs = d == 3 ? cube_sphere(6) : circle(256);
    FlatnessResult best;
    best.deficit = std::numeric_limits<double>::infinity();
    for (const Point& e : dirs) {
        const double v = sup_dev(e);
        if (v < best.deficit) {
            best.deficit = v;
            best.e_best = e;
        }
    }

    // Pattern search: move to the best improving neighbour, else halve the step.
    const std::vector<Point> moves = pattern_moves(d);
    double step = d == 3 ? 0.25 : 2.0 * std::numbers::pi / 256;
    for (int it = 0; it < 4000 && step > 1e-10; ++it) {
        FlatnessResult cand = best;
        for (const Point& v : moves) {
            const Point e = normalized({best.e_best[0] + step * v[0], best.e_best[1] + step * v[1],
                                        best.e_best[2] + step * v[2]});
            const double f = sup_dev(e);
            if (f < cand.deficit) cand = {e, f};
        }
        if (cand.deficit < best.deficit) {
            best = cand;
        } else {
            step *= 0.5;
        }
    }
    return best;
}

BlowupSequence blowup_sequence(const ScalarField& u, const Point& z, const std::vector<double>& scales,
                               const BlowupOptions& opt) {
    for (std::size_t i = 1; i < scales.size(); ++i) {
        if (!(scales[i] < scales[i - 1])) throw ContractError("scales must be strictly decreasing");
    }
    const Grid ref = Grid::cube(u.grid.dim, -1.0, 1.0, opt.ref_cells);
    BlowupSequence seq;
    seq.z = z;
    for (double r : scales) {
        BlowupScale s{};
        s.scale = r;
        s.deviation = homogeneity_deviation(u, z, r);
        const ScalarField ur = rescale(u, z, r, ref);
        const FlatnessResult fr = flatness_deficit(ur, 0.5);
        s.deficit = fr.deficit;
        s.e_best = fr.e_best;
        s.u_at_origin = interpolate(ur, Point{});
        seq.scales.push_back(s);
    }
    return seq;
}

std::vector<double> dyadic_scales(const Grid& g, const Point& z) {
    double room = std::numeric_limits<double>::infinity();
    for (int a = 0; a < g.dim; ++a) room = std::min({room, z[a] - g.lo[a], g.hi[a] - z[a]});
    std::vector<double> out;
    for (int k = 0; k < 60; ++k) {
        const double r = std::ldexp(1.0, -k);
        if (r < 8.0 * g.h * (1.0 - 1e-12)) break;
        if (r <= room * (1.0 + 1e-12)) out.push_back(r);
    }
    return out;
}

RegularityReport regularity_verdict(const ScalarField& u, const DensityModel& m, const Point& z,
                                    const std::vector<double>& scales, const BlowupOptions& opt) {
    if (u.grid.dim != 3) throw UnavailableError("regularity verdict is only defined in three dimensions");
    if (!check_flatness_condition(m).pass) {
        throw UnavailableError("regularity verdict unavailable: model fails the flatness condition");
    }
    if (scales.size() < 2) throw ContractError("regularity verdict needs at least two scales");
    RegularityReport rep;
    rep.sequence = blowup_sequence(u, z, scales, opt);
    const auto& s = rep.sequence.scales;
    bool ok = true;
    for (std::size_t i = s.size() - 2; i < s.size(); ++i) {
        ok = ok && s[i].deviation <= opt.delta && s[i].deficit <= opt.gamma;
    }
    rep.verdict = ok ? Verdict::Regular : Verdict::Inconclusive;
    return rep;
}

const char* verdict_name(Verdict v) { return v == Verdict::Regular ? "regular" : "inconclusive"; }

}  // namespace fbm
