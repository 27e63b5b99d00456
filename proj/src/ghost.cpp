#include "fbmlab/ghost.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "fbmlab/errors.hpp"
#include "fbmlab/q1.hpp"
#include "fbmlab/quadrature.hpp"

namespace fbm {

namespace {

// U^z at one point given u, grad u and x - z.
Point flux_at(const DensityModel& m, double F0, double uval, const Point& gu, const Point& xz,
              double rho, int dim, bool squared) {
    double s = 0.0;
    for (int a = 0; a < dim; ++a) s += gu[a] * gu[a];
    const double arg = squared ? s : std::sqrt(s);
    const double coef = (eval_dF(m, arg) - F0) * 2.0 * uval / (rho * rho);
    Point out{};
    if (coef == 0.0) return out;
    for (int a = 0; a < dim; ++a) out[a] = coef * (gu[a] - uval * xz[a] / (rho * rho));
    return out;
}

double vnorm(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

}  // namespace

FluxField flux_field(const ScalarField& u, const DensityModel& m, const Point& z,
                     std::optional<double> F0, double cap_radius) {
    const Grid& g = u.grid;
    if (!g.contains(z)) throw GeometryError("base point lies outside the grid box");
    FluxField U;
    U.z = z;
    U.F0 = F0 ? *F0 : eval_dF(m, 1.0);
    if (!std::isfinite(U.F0)) throw ContractError("F0 must be finite");
    U.cap_radius = cap_radius > 0.0 ? cap_radius : 0.5 * g.h;
    U.field = VectorField(g);
    const VectorField G = gradient(u);
    for (std::size_t i = 0; i < g.node_count(); ++i) {
        const Point xz = sub(g.node(i), z);
        const double rho = std::max(norm(xz, g.dim), U.cap_radius);
        U.field.set(i, flux_at(m, U.F0, u[i], G.at(i), xz, rho, g.dim, true));
    }
    return U;
}

SmallUReport smallU_bound_check(const FluxField& U, const DensityModel& m, const ScalarField& u) {
    const Grid& g = u.grid;
    if (!U.field.grid.same_as(g)) throw ContractError("flux and field grids differ");
    SmallUReport rep{};
    double lip = max_norm(gradient(u));
    for (std::size_t i = 0; i < g.node_count(); ++i) {
        const double d = norm(sub(g.node(i), U.z), g.dim);
        if (d > U.cap_radius) lip = std::max(lip, std::abs(u[i]) / d);
    }
    rep.lipschitz = lip;
    rep.eps_star = epsilon_star(m, std::max(1.0, lip * lip));
    rep.C_Lip = 2.0 * lip * (lip + std::max(lip, lip * lip));
    const double bound = rep.eps_star * rep.C_Lip;
    rep.max_violation = -bound;
    for (std::size_t i = 0; i < g.node_count(); ++i) {
        const double d = norm(sub(g.node(i), U.z), g.dim);
        if (d <= U.cap_radius) continue;
        const Point v = U.field.at(i);
        rep.max_violation = std::max(rep.max_violation, norm(v, g.dim) * d - bound);
    }
    rep.pass = rep.max_violation <= 1e-8;
    return rep;
}

std::vector<double> neumann_load(const VectorField& U) {
    const Grid& g = U.grid;
    const auto t = q1::make_tables(g);
    const int d = g.dim;
    const int nc = t.corners;
    const double vol = g.cell_volume();
    // C[(k * nc + q) * nc + p] = int_cell psi_q d_k psi_p
    std::vector<double> C(static_cast<std::size_t>(d) * nc * nc, 0.0);
    for (int gi = 0; gi < t.ngauss; ++gi) {
        const double w = t.weight[gi] * vol;
        for (int k = 0; k < d; ++k) {
            for (int q = 0; q < nc; ++q) {
                for (int p = 0; p < nc; ++p) {
                    C[(k * nc + q) * nc + p] += w * t.N[gi * nc + q] * t.dN[(gi * nc + p) * 3 + k];
                }
            }
        }
    }
    std::vector<double> b(g.node_count(), 0.0);
    q1::for_each_cell(g, [&](std::size_t base) {
        for (int q = 0; q < nc; ++q) {
            const std::size_t nq = base + t.offs[q];
            for (int k = 0; k < d; ++k) {
                const double uq = U.values[nq * d + k];
                if (uq == 0.0) continue;
                const double* row = &C[(k * nc + q) * nc];
                for (int p = 0; p < nc; ++p) b[base + t.offs[p]] += row[p] * uq;
            }
        }
    });
    return b;
}

GhostFunction neumann_solve(const VectorField& U, double tol, int max_iter) {
    const Grid& g = U.grid;
    const auto t = q1::make_tables(g);
    const std::size_t n = g.node_count();
    const std::vector<double> b = neumann_load(U);
    int cap = max_iter;
    if (cap <= 0) {
        int m = 0;
        for (int a = 0; a < g.dim; ++a) m = std::max(m, g.n_cells[a]);
        cap = 2000 + 40 * m;
    }
    auto apply = [&](std::span<const double> x, std::span<double> y) { q1::apply_stiffness(g, t, x, y); };
    auto project = [n](std::vector<double>& v) {
        double s = 0.0;
        for (double x : v) s += x;
        s /= static_cast<double>(n);
        for (double& x : v) x -= s;
    };
    std::vector<double> x(n, 0.0);
    const auto res = q1::conjugate_gradient(apply, b, x, tol, cap, project);
    if (!res.converged) {
        throw SolverError("Neumann solve did not reach tolerance", res.relative_residual, res.iterations);
    }
    GhostFunction out;
    out.potential = ScalarField(g);
    out.potential.values = std::move(x);
    const double mean = box_mean(out.potential);
    for (double& v : out.potential.values) v -= mean;
    // The loop above can leave a round-off sized mean; one more pass settles it.
    const double mean2 = box_mean(out.potential);
    for (double& v : out.potential.values) v -= mean2;
    const VectorField G = gradient(out.potential);
    out.remainder = VectorField(g);
    for (std::size_t i = 0; i < out.remainder.values.size(); ++i) {
        out.remainder.values[i] = U.values[i] - G.values[i];
    }
    out.iterations = res.iterations;
    out.relative_residual = weak_divergence_residual(U, out);
    return out;
}

GhostFunction neumann_solve(const FluxField& U, double tol, int max_iter) {
    GhostFunction gf = neumann_solve(U.field, tol, max_iter);
    gf.z = U.z;
    gf.F0 = U.F0;
    return gf;
}

std::vector<double> remainder_weak_divergence(const VectorField& U, const GhostFunction& gf) {
    const Grid& g = U.grid;
    if (!gf.potential.grid.same_as(g)) throw ContractError("ghost and flux grids differ");
    const auto t = q1::make_tables(g);
    std::vector<double> r = neumann_load(U);
    std::vector<double> k(g.node_count());
    q1::apply_stiffness(g, t, gf.potential.values, k);
    for (std::size_t i = 0; i < r.size(); ++i) r[i] -= k[i];
    return r;
}

double weak_divergence_residual(const VectorField& U, const GhostFunction& gf) {
    const std::vector<double> b = neumann_load(U);
    const double bn = vnorm(b);
    if (bn == 0.0) return 0.0;
    return vnorm(remainder_weak_divergence(U, gf)) / bn;
}

StabilityReport decomposition_stability_check(const VectorField& U, const GhostFunction& gf,
                                              double s) {
    if (!(s > 1.0)) throw ContractError("norm exponent s must exceed 1");
    const Grid& g = U.grid;
    const std::vector<double> w = q1::lumped_mass(g);
    const VectorField G = gradient(gf.potential);
    double phi_s = 0.0, u_s = 0.0;
    for (std::size_t i = 0; i < g.node_count(); ++i) {
        phi_s += w[i] * (std::pow(std::abs(gf.potential[i]), s) + std::pow(norm(G.at(i), g.dim), s));
        u_s += w[i] * std::pow(norm(U.at(i), g.dim), s);
    }
    StabilityReport rep{};
    rep.phi_norm = std::pow(phi_s, 1.0 / s);
    rep.U_norm = std::pow(u_s, 1.0 / s);
    rep.ratio = rep.U_norm > 0.0 ? rep.phi_norm / rep.U_norm : 0.0;
    return rep;
}

std::vector<ShellIdentityRow> shell_identity_check(const VectorField& U, const GhostFunction& gf,
                                                   const Point& z, const std::vector<double>& radii,
                                                   double dr, int n_points) {
    const Grid& g = U.grid;
    const double del = dr > 0.0 ? dr : g.h;
    std::vector<ShellIdentityRow> rows;
    for (double r : radii) {
        if (!g.contains_ball(z, r + del)) throw GeometryError("ball exits the decomposition domain");
        if (!(r - del > 0.0)) throw GeometryError("radius too small for the centered difference");
        const int np = n_points > 0 ? n_points : default_sphere_points(g.dim, r + del, g.h);
        double flux = 0.0;
        for (const auto& sp : sphere_quadrature(g, z, r, np)) {
            flux += sp.w * dot(interpolate(U, sp.x), sp.normal, g.dim);
        }
        flux *= std::pow(r, 1 - g.dim);
        const double ds = (shell_average(gf.potential, z, r + del, np) -
                           shell_average(gf.potential, z, r - del, np)) / (2.0 * del);
        rows.push_back({r, flux, ds, std::abs(flux - ds)});
    }
    return rows;
}

std::vector<RajRow> raj_identity_check(const VectorField& U, const GhostFunction& gf,
                                       const Point& z, const std::vector<double>& radii, double dr,
                                       int subsamples) {
    const Grid& g = U.grid;
    const int d = g.dim;
    const double del = dr > 0.0 ? dr : g.h;
    BallOptions opt;
    opt.subsamples = subsamples;
    auto ball_mean_phi = [&](double r) {
        const double s = ball_integrate(g, z, r, opt, [&](const Point& x) { return interpolate(gf.potential, x); });
        return s / ball_volume_discrete(g, z, r, opt);
    };
    std::vector<RajRow> rows;
    for (double r : radii) {
        if (!g.contains_ball(z, r + del)) throw GeometryError("ball exits the decomposition domain");
        if (!(r - del > 0.0)) throw GeometryError("radius too small for the centered difference");
        const double dm = (ball_mean_phi(r + del) - ball_mean_phi(r - del)) / (2.0 * del);
        const double vol = ball_volume_discrete(g, z, r, opt);
        const double radial = ball_integrate(g, z, r, opt, [&](const Point& x) {
            const Point xz = sub(x, z);
            const double dist = norm(xz, d);
            return dist > 0.0 ? dot(interpolate(U, x), xz, d) / dist : 0.0;
        });
        const double moment = ball_integrate(g, z, r, opt, [&](const Point& x) {
            return dot(interpolate(U, x), sub(x, z), d);
        });
        RajRow row{};
        row.r = r;
        row.d_mean_phi = dm;
        row.mean_radial_U = radial / vol;
        row.gap = dm - row.mean_radial_U;
        row.corrected_gap = dm - moment / vol / r;
        rows.push_back(row);
    }
    return rows;
}

RescaledFlux rescaled_flux(const ScalarField& u, const DensityModel& m, const Point& z, double theta,
                           std::optional<double> F0, int ref_cells, bool squared_argument) {
    const Grid& src = u.grid;
    if (!(theta > 0.0)) throw ContractError("theta must be positive");
    for (int a = 0; a < src.dim; ++a) {
        const double slack = 1e-12 * (src.hi[a] - src.lo[a]);
        if (z[a] - theta < src.lo[a] - slack || z[a] + theta > src.hi[a] + slack) {
            throw GeometryError("scaled box z + theta [-1,1]^dim exits the source grid");
        }
    }
    const Grid ref = Grid::cube(src.dim, -1.0, 1.0, ref_cells);
    const VectorField G = gradient(u);
    RescaledFlux out;
    out.flux.z = Point{};
    out.flux.F0 = F0 ? *F0 : eval_dF(m, 1.0);
    const double cap = 0.5 * src.h;
    out.flux.cap_radius = cap / theta;
    out.flux.field = VectorField(ref);
    out.max_scaled_bound = 0.0;
    for (std::size_t i = 0; i < ref.node_count(); ++i) {
        const Point x = ref.node(i);
        Point p{};
        for (int a = 0; a < src.dim; ++a) p[a] = z[a] + theta * x[a];
        const Point xz = sub(p, z);
        const double rho = std::max(norm(xz, src.dim), cap);
        Point v = flux_at(m, out.flux.F0, interpolate(u, p), interpolate(G, p), xz, rho, src.dim,
                          squared_argument);
        for (int a = 0; a < src.dim; ++a) v[a] *= theta;
        out.flux.field.set(i, v);
        out.max_scaled_bound = std::max(out.max_scaled_bound, norm(v, src.dim) * norm(x, src.dim));
    }
    return out;
}

}  // namespace fbm
