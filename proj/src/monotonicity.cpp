#include "fbmlab/monotonicity.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include "fbmlab/errors.hpp"
#include "fbmlab/field_io.hpp"
#include "fbmlab/q1.hpp"
#include "fbmlab/quadrature.hpp"

namespace fbm {

namespace {

// Value and gradient of u at x under the chosen gradient mode.
struct Sampler {
    const ScalarField& u;
    GradientMode mode;
    VectorField nodal;

    Sampler(const ScalarField& f, GradientMode m) : u(f), mode(m) {
        if (mode == GradientMode::Nodal) nodal = gradient(f);
    }

    ValueGrad operator()(const Point& x) const {
        if (mode == GradientMode::Reconstructed) return interpolate_with_gradient(u, x);
        return {interpolate(u, x), interpolate(nodal, x)};
    }
};

int sphere_count(const QuadratureOptions& q, const Grid& g, double r) {
    return q.sphere_points > 0 ? q.sphere_points : default_sphere_points(g.dim, r, g.h);
}

double resolve_F0(const DensityModel& m, std::optional<double> F0) {
    return F0 ? *F0 : eval_dF(m, 1.0);
}

// Sphere integrals needed by one scan row.
struct SphereSums {
    double u2 = 0.0;     // int u^2
    double aprime = 0.0; // int F' (u_nu - u/r)^2
    double cross = 0.0;  // int F' (u / r^2) (u_nu - u/r)
    double t = 0.0;      // int (F' - F0) (u / r^2) (u_nu - u/r)
};

SphereSums sphere_sums(const Sampler& s, const DensityModel& m, double F0, const Point& z, double r,
                       int n) {
    const Grid& g = s.u.grid;
    SphereSums out;
    for (const auto& sp : sphere_quadrature(g, z, r, n)) {
        const ValueGrad vg = s(sp.x);
        double gg = 0.0;
        for (int a = 0; a < g.dim; ++a) gg += vg.grad[a] * vg.grad[a];
        const double fp = eval_dF(m, gg);
        const double rad = dot(vg.grad, sp.normal, g.dim) - vg.value / r;
        out.u2 += sp.w * vg.value * vg.value;
        out.aprime += sp.w * fp * rad * rad;
        const double ur = vg.value / (r * r) * rad;
        out.cross += sp.w * fp * ur;
        out.t += sp.w * (fp - F0) * ur;
    }
    return out;
}

double ball_energy(const Sampler& s, const DensityModel& m, double lambda, const Point& z, double r,
                   int subsamples) {
    const Grid& g = s.u.grid;
    BallOptions opt;
    opt.subsamples = subsamples;
    const double integral = ball_integrate(g, z, r, opt, [&](const Point& x) {
        const ValueGrad vg = s(x);
        double gg = 0.0;
        for (int a = 0; a < g.dim; ++a) gg += vg.grad[a] * vg.grad[a];
        return eval_F(m, gg) + (vg.value > 0.0 ? lambda : 0.0);
    });
    return integral / std::pow(r, g.dim);
}

void check_ghost(const GhostFunction& g, const Point& z, double F0, int dim) {
    for (int a = 0; a < dim; ++a) {
        if (g.z[a] != z[a]) throw ContractError("ghost function was built for a different base point");
    }
    if (g.F0 != F0) throw ContractError("ghost function was built with a different F0");
}

}  // namespace

double rescaled_energy(const ScalarField& u, const DensityModel& m, double lambda, const Point& z,
                       double r, const QuadratureOptions& q) {
    const Sampler s(u, q.gradient);
    return ball_energy(s, m, lambda, z, r, q.ball_subsamples);
}

double weiss_core(const ScalarField& u, const DensityModel& m, double lambda, const Point& z, double r,
                  std::optional<double> F0, const QuadratureOptions& q) {
    const Sampler s(u, q.gradient);
    const double f0 = resolve_F0(m, F0);
    const double e = ball_energy(s, m, lambda, z, r, q.ball_subsamples);
    const SphereSums ss = sphere_sums(s, m, f0, z, r, sphere_count(q, u.grid, r));
    return e - f0 * ss.u2 / std::pow(r, u.grid.dim + 1);
}

double A_value(const ScalarField& u, const DensityModel& m, double lambda, const Point& z, double r,
               const GhostFunction& g, std::optional<double> F0, const QuadratureOptions& q) {
    const double f0 = resolve_F0(m, F0);
    check_ghost(g, z, f0, u.grid.dim);
    const double w = weiss_core(u, m, lambda, z, r, f0, q);
    const double gt = shell_average(g.potential, z, r, sphere_count(q, u.grid, r));
    return w - gt;
}

double A_prime_formula(const ScalarField& u, const DensityModel& m, const Point& z, double r,
                       const QuadratureOptions& q) {
    const Sampler s(u, q.gradient);
    const SphereSums ss = sphere_sums(s, m, 1.0, z, r, sphere_count(q, u.grid, r));
    return 2.0 * ss.aprime / std::pow(r, u.grid.dim);
}

double T_error_term(const ScalarField& u, const DensityModel& m, const Point& z, double r,
                    std::optional<double> F0, const QuadratureOptions& q) {
    const Sampler s(u, q.gradient);
    const SphereSums ss = sphere_sums(s, m, resolve_F0(m, F0), z, r, sphere_count(q, u.grid, r));
    return 2.0 * ss.t / std::pow(r, u.grid.dim - 1);
}

double T_flux_form(const FluxField& U, double r, int sphere_points) {
    const Grid& g = U.field.grid;
    const int n = sphere_points > 0 ? sphere_points : default_sphere_points(g.dim, r, g.h);
    double s = 0.0;
    for (const auto& sp : sphere_quadrature(g, U.z, r, n)) {
        s += sp.w * dot(interpolate(U.field, sp.x), sp.normal, g.dim);
    }
    return s / std::pow(r, g.dim - 1);
}

double T_quadrature_tolerance(const ScalarField& u, const DensityModel& m, const Point& z, double r,
                              std::optional<double> F0, const QuadratureOptions& q) {
    const int n = sphere_count(q, u.grid, r);
    QuadratureOptions half = q;
    half.sphere_points = std::max(1, n / 2);
    QuadratureOptions full = q;
    full.sphere_points = n;
    return std::abs(T_error_term(u, m, z, r, F0, full) - T_error_term(u, m, z, r, F0, half));
}

std::vector<double> log_radius_derivative(const std::vector<double>& r, const std::vector<double>& y) {
    const std::size_t n = r.size();
    if (y.size() != n) throw ContractError("radius and value lists differ in length");
    std::vector<double> d(n, std::numeric_limits<double>::quiet_NaN());
    if (n < 2) return d;
    std::vector<double> t(n);
    for (std::size_t i = 0; i < n; ++i) t[i] = std::log(r[i]);
    if (n == 2) {
        const double s = (y[1] - y[0]) / (t[1] - t[0]);
        d[0] = s / r[0];
        d[1] = s / r[1];
        return d;
    }
    // Derivative at t[k] of the parabola through (t[i], y[i]), i = a, a+1, a+2.
    auto three = [&](std::size_t a, std::size_t k) {
        const double t0 = t[a], t1 = t[a + 1], t2 = t[a + 2];
        const double x = t[k];
        const double l0 = ((x - t1) + (x - t2)) / ((t0 - t1) * (t0 - t2));
        const double l1 = ((x - t0) + (x - t2)) / ((t1 - t0) * (t1 - t2));
        const double l2 = ((x - t0) + (x - t1)) / ((t2 - t0) * (t2 - t1));
        return l0 * y[a] + l1 * y[a + 1] + l2 * y[a + 2];
    };
    d[0] = three(0, 0) / r[0];
    for (std::size_t i = 1; i + 1 < n; ++i) d[i] = three(i - 1, i) / r[i];
    d[n - 1] = three(n - 3, n - 1) / r[n - 1];
    return d;
}

std::vector<MainIdRow> mainid_check(const ScalarField& u, const DensityModel& m, double lambda,
                                    const Point& z, const std::vector<double>& radii,
                                    const QuadratureOptions& q) {
    if (radii.size() < 2) throw ContractError("mainid_check needs at least two radii");
    for (std::size_t i = 1; i < radii.size(); ++i) {
        if (!(radii[i] > radii[i - 1])) throw ContractError("radii must be strictly increasing");
    }
    const Sampler s(u, q.gradient);
    const int n = u.grid.dim;
    std::vector<double> e(radii.size());
    std::vector<MainIdRow> rows(radii.size());
    for (std::size_t i = 0; i < radii.size(); ++i) {
        const double r = radii[i];
        e[i] = ball_energy(s, m, lambda, z, r, q.ball_subsamples);
        const SphereSums ss = sphere_sums(s, m, 1.0, z, r, sphere_count(q, u.grid, r));
        rows[i].r = r;
        rows[i].a_prime = 2.0 * ss.aprime / std::pow(r, n);
        rows[i].cross = 2.0 * ss.cross / std::pow(r, n - 1);
    }
    const std::vector<double> de = log_radius_derivative(radii, e);
    for (std::size_t i = 0; i < radii.size(); ++i) {
        rows[i].lhs = de[i];
        rows[i].gap = rows[i].lhs - rows[i].a_prime - rows[i].cross;
    }
    return rows;
}

std::vector<double> geometric_radii(double r_min, double r_max, double ratio) {
    if (!(r_min > 0.0) || !(r_max >= r_min)) throw ConfigError("radii must satisfy 0 < r_min <= r_max");
    if (!(ratio > 1.0)) throw ConfigError("radii.ratio must exceed 1");
    std::vector<double> out;
    for (int k = 0;; ++k) {
        const double r = r_min * std::pow(ratio, k);
        if (r > r_max * (1.0 + 1e-12)) break;
        out.push_back(r);
    }
    return out;
}

std::vector<double> recombine_mainid_gap(const std::vector<MonotonicityRow>& rows) {
    std::vector<double> r, gt;
    for (const auto& row : rows) {
        r.push_back(row.r);
        gt.push_back(row.ghost_term);
    }
    const std::vector<double> dg = log_radius_derivative(r, gt);
    std::vector<double> gap(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        gap[i] = (rows[i].A_prime_fd - rows[i].A_prime_formula) + (dg[i] - rows[i].T);
    }
    return gap;
}

MonotonicityReport scan(const ScalarField& u, const DensityModel& m, double lambda, const Point& z,
                        const std::vector<double>& radii, const GhostFunction& g,
                        const QuadratureOptions& q) {
    if (radii.empty()) throw ContractError("scan needs at least one radius");
    for (std::size_t i = 1; i < radii.size(); ++i) {
        if (!(radii[i] > radii[i - 1])) throw ContractError("radii must be strictly increasing");
    }
    const Grid& grid = u.grid;
    const int n = grid.dim;
    const double f0 = g.F0;
    check_ghost(g, z, f0, n);
    if (!g.potential.grid.same_as(grid)) throw ContractError("ghost and field grids differ");
    for (double r : radii) {
        if (!grid.contains_ball(z, r)) throw GeometryError("ball B_r(z) exits the grid box");
    }
    MonotonicityReport rep;
    rep.z = z;
    rep.dim = n;
    rep.F0 = f0;
    rep.lambda = lambda;
    rep.h = grid.h;
    rep.n_sphere_points = sphere_count(q, grid, radii.back());

    const Sampler s(u, q.gradient);
    std::vector<double> A(radii.size());
    rep.rows.resize(radii.size());
    const std::vector<double> osc = bmo_oscillation(g.potential, z, radii, q.ball_subsamples);
    for (std::size_t i = 0; i < radii.size(); ++i) {
        const double r = radii[i];
        const int np = sphere_count(q, grid, r);
        const double e = ball_energy(s, m, lambda, z, r, q.ball_subsamples);
        const SphereSums ss = sphere_sums(s, m, f0, z, r, np);
        auto& row = rep.rows[i];
        row.r = r;
        row.weiss_core = e - f0 * ss.u2 / std::pow(r, n + 1);
        row.ghost_term = shell_average(g.potential, z, r, np);
        row.A = row.weiss_core - row.ghost_term;
        row.A_prime_formula = 2.0 * ss.aprime / std::pow(r, n);
        row.T = 2.0 * ss.t / std::pow(r, n - 1);
        row.osc_r = osc[i];
        A[i] = row.A;
    }
    const std::vector<double> dA = log_radius_derivative(radii, A);
    for (std::size_t i = 0; i < radii.size(); ++i) rep.rows[i].A_prime_fd = dA[i];
    const std::vector<double> gap = recombine_mainid_gap(rep.rows);
    for (std::size_t i = 0; i < radii.size(); ++i) rep.rows[i].mainid_gap = gap[i];

    rep.tol_mono = 5.0 * (grid.h / radii.front()) * std::abs(rep.rows.back().A);
    for (std::size_t i = 1; i < radii.size(); ++i) {
        if (rep.rows[i].A < rep.rows[i - 1].A - rep.tol_mono) {
            rep.rows[i].violation = true;
            ++rep.violations;
        }
    }
    return rep;
}

void write_report_csv(const std::string& path, const MonotonicityReport& rep) {
    std::ofstream os(path);
    if (!os) throw ConfigError("cannot open " + path + " for writing");
    os << "r,weiss_core,ghost_term,A,A_prime_fd,A_prime_formula,T,mainid_gap,osc_r\n";
    for (const auto& row : rep.rows) {
        const double v[] = {row.r, row.weiss_core, row.ghost_term, row.A, row.A_prime_fd,
                            row.A_prime_formula, row.T, row.mainid_gap, row.osc_r};
        for (std::size_t k = 0; k < std::size(v); ++k) os << (k ? "," : "") << format_double(v[k]);
        os << "\n";
    }
}

std::vector<double> bmo_oscillation(const ScalarField& phi, const Point& z,
                                    const std::vector<double>& radii, int subsamples) {
    const Grid& g = phi.grid;
    BallOptions opt;
    opt.subsamples = subsamples;
    std::vector<double> out;
    for (double r : radii) {
        const double vol = ball_volume_discrete(g, z, r, opt);
        if (!(vol > 0.0)) throw GeometryError("ball contains no quadrature samples");
        const double mean =
            ball_integrate(g, z, r, opt, [&](const Point& x) { return interpolate(phi, x); }) / vol;
        const double m2 = ball_integrate(g, z, r, opt, [&](const Point& x) {
            const double v = interpolate(phi, x) - mean;
            return v * v;
        });
        out.push_back(m2 / vol);
    }
    return out;
}

VmoReport vmo_check(const ScalarField& phi, const Point& z, const std::vector<double>& r_list,
                    int subsamples) {
    if (r_list.empty()) throw ContractError("vmo_check needs at least one radius");
    for (std::size_t i = 1; i < r_list.size(); ++i) {
        if (!(r_list[i] < r_list[i - 1])) throw ContractError("r_list must be strictly decreasing");
    }
    VmoReport rep;
    rep.profile = bmo_oscillation(phi, z, r_list, subsamples);
    rep.limit_estimate = rep.profile.back();
    const std::vector<double> w = q1::lumped_mass(phi.grid);
    double ms = 0.0, vol = 0.0;
    for (std::size_t i = 0; i < phi.size(); ++i) {
        ms += w[i] * phi[i] * phi[i];
        vol += w[i];
    }
    rep.floor = 10.0 * phi.grid.h * phi.grid.h * (ms / vol);
    rep.pass = rep.profile.back() <= 0.25 * rep.profile.front() || rep.profile.back() <= rep.floor;
    return rep;
}

RegularPointFit regular_point_fit(const std::vector<double>& radii, const std::vector<double>& y) {
    const std::size_t n = radii.size();
    if (y.size() != n) throw ContractError("radius and value lists differ in length");
    if (n < 4) throw ContractError("regular_point_fit needs at least 4 radii");
    std::vector<double> distinct(radii);
    std::sort(distinct.begin(), distinct.end());
    distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
    if (distinct.size() < 3) throw ContractError("regular_point_fit needs at least 3 distinct radii");
    // Center and scale r for conditioning, solve the 3x3 normal equations.
    double c = 0.0;
    for (double r : radii) c += r;
    c /= static_cast<double>(n);
    double s = 0.0;
    for (double r : radii) s = std::max(s, std::abs(r - c));
    double M[3][4] = {};
    for (std::size_t i = 0; i < n; ++i) {
        const double x = (radii[i] - c) / s;
        const double b[3] = {1.0, x, x * x};
        for (int p = 0; p < 3; ++p) {
            for (int q = 0; q < 3; ++q) M[p][q] += b[p] * b[q];
            M[p][3] += b[p] * y[i];
        }
    }
    for (int col = 0; col < 3; ++col) {
        int piv = col;
        for (int row = col + 1; row < 3; ++row) {
            if (std::abs(M[row][col]) > std::abs(M[piv][col])) piv = row;
        }
        for (int k = 0; k < 4; ++k) std::swap(M[col][k], M[piv][k]);
        for (int row = 0; row < 3; ++row) {
            if (row == col) continue;
            const double f = M[row][col] / M[col][col];
            for (int k = col; k < 4; ++k) M[row][k] -= f * M[col][k];
        }
    }
    const double b0 = M[0][3] / M[0][0];
    const double b1 = M[1][3] / M[1][1];
    const double b2 = M[2][3] / M[2][2];
    // y = b0 + b1 (r - c)/s + b2 ((r - c)/s)^2
    RegularPointFit fit{};
    fit.a2 = b2 / (s * s);
    fit.a1 = b1 / s - 2.0 * c * fit.a2;
    fit.a0 = b0 - b1 * c / s + fit.a2 * c * c;
    fit.residual = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        fit.residual = std::max(fit.residual, std::abs(y[i] - fit.a0 - fit.a1 * radii[i]));
    }
    return fit;
}

RegularPointFit regular_point_fit(const ScalarField& phi, const Point& z,
                                  const std::vector<double>& radii, int sphere_points) {
    std::vector<double> y;
    for (double r : radii) y.push_back(shell_average(phi, z, r, sphere_points));
    return regular_point_fit(radii, y);
}

}  // namespace fbm
