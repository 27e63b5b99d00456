#include "fbmlab/minimizer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "fbmlab/errors.hpp"
#include "fbmlab/q1.hpp"

namespace fbm {

BoundaryData BoundaryData::halfplane(const Point& e) {
    BoundaryData b;
    b.kind = BoundaryKind::HalfPlane;
    const double n = std::sqrt(e[0] * e[0] + e[1] * e[1] + e[2] * e[2]);
    if (!(n > 0.0)) throw ConfigError("halfplane direction must be nonzero");
    b.direction = {e[0] / n, e[1] / n, e[2] / n};
    return b;
}

BoundaryData BoundaryData::radial(double c, const Point& center) {
    BoundaryData b;
    b.kind = BoundaryKind::Radial;
    b.c = c;
    b.center = center;
    return b;
}

BoundaryData BoundaryData::wedge(double angle) {
    BoundaryData b;
    b.kind = BoundaryKind::Wedge;
    b.angle = angle;
    return b;
}

BoundaryData BoundaryData::from_field(std::shared_ptr<const ScalarField> f, std::string path) {
    BoundaryData b;
    b.kind = BoundaryKind::File;
    b.field = std::move(f);
    b.path = std::move(path);
    return b;
}

double BoundaryData::eval(const Point& x, int dim) const {
    switch (kind) {
        case BoundaryKind::HalfPlane:
            return std::max(0.0, dot(x, direction, dim));
        case BoundaryKind::Radial:
            return std::max(0.0, norm(sub(x, center), dim) - c);
        case BoundaryKind::Wedge: {
            const double a = 0.5 * angle;
            const double s1 = x[0] * std::cos(a) + x[1] * std::sin(a);
            const double s2 = x[0] * std::cos(a) - x[1] * std::sin(a);
            return std::max({0.0, s1, s2});
        }
        case BoundaryKind::File:
            return interpolate(*field, x);
    }
    return 0.0;
}

std::string BoundaryData::name() const {
    switch (kind) {
        case BoundaryKind::HalfPlane: return "halfplane";
        case BoundaryKind::Radial: return "radial";
        case BoundaryKind::Wedge: return "wedge";
        case BoundaryKind::File: return "file";
    }
    return "?";
}

Problem Problem::make(const Grid& g, const DensityModel& m, const BoundaryData& bd,
                      std::optional<double> lambda, double eps_factor) {
    m.validate();
    Problem p;
    p.grid = g;
    p.model = m;
    p.lambda = lambda ? *lambda : bernoulli_lambda(m);
    p.boundary = bd;
    p.eps = eps_factor * g.h;
    p.fixed_mask.assign(g.node_count(), 0);
    for (std::size_t i = 0; i < g.node_count(); ++i) {
        if (g.on_boundary(i)) p.fixed_mask[i] = 1;
    }
    p.validate();
    return p;
}

void Problem::validate() const {
    if (!(eps > 0.0)) throw ConfigError("smoothing width eps must be positive");
    if (!(lambda > 0.0) || !std::isfinite(lambda)) throw ConfigError("lambda must be positive");
    if (fixed_mask.size() != grid.node_count()) throw ContractError("fixed_mask size mismatch");
    for (std::size_t i = 0; i < grid.node_count(); ++i) {
        if (grid.on_boundary(i) && !fixed_mask[i]) {
            throw ContractError("every boundary node must be in fixed_mask");
        }
    }
}

ScalarField boundary_values(const Problem& p) {
    return sample_scalar(p.grid, [&](const Point& x) { return p.boundary.eval(x, p.grid.dim); });
}

namespace {

void check_grid(const Problem& p, const ScalarField& u) {
    if (!u.grid.same_as(p.grid)) throw ContractError("field grid does not match the problem grid");
}

// Energy and (optionally) dJ/du accumulated cell by cell.
// right_at_zero: use the one-sided derivative H'(0+) = 1/eps at u = 0, the
// relevant one when iterates are confined to u >= 0.
double energy_impl(const Problem& p, const q1::CellTables& t, const ScalarField& u,
                   std::vector<double>* grad, bool right_at_zero = false) {
    const int d = p.grid.dim;
    const int nc = t.corners;
    const double vol = p.grid.cell_volume();
    const double lam = p.lambda;
    const double eps = p.eps;
    double total = 0.0;
    if (grad) grad->assign(u.size(), 0.0);
    q1::for_each_cell(p.grid, [&](std::size_t base) {
        double ue[8];
        for (int q = 0; q < nc; ++q) ue[q] = u.values[base + t.offs[q]];
        double ge[8] = {0, 0, 0, 0, 0, 0, 0, 0};
        double cell = 0.0;
        for (int gi = 0; gi < t.ngauss; ++gi) {
            double ug = 0.0;
            double du[3] = {0.0, 0.0, 0.0};
            for (int q = 0; q < nc; ++q) {
                ug += t.N[gi * nc + q] * ue[q];
                for (int a = 0; a < d; ++a) du[a] += t.dN[(gi * nc + q) * 3 + a] * ue[q];
            }
            double s = 0.0;
            for (int a = 0; a < d; ++a) s += du[a] * du[a];
            const double w = t.weight[gi] * vol;
            cell += w * (eval_F(p.model, s) + lam * smoothed_step(ug, eps));
            if (grad) {
                const double f1 = 2.0 * eval_dF(p.model, s);
                const double hp = lam * ((right_at_zero && ug == 0.0) ? 1.0 / eps
                                                                      : smoothed_step_derivative(ug, eps));
                for (int q = 0; q < nc; ++q) {
                    double gdot = 0.0;
                    for (int a = 0; a < d; ++a) gdot += du[a] * t.dN[(gi * nc + q) * 3 + a];
                    ge[q] += w * (f1 * gdot + hp * t.N[gi * nc + q]);
                }
            }
        }
        total += cell;
        if (grad) {
            for (int q = 0; q < nc; ++q) (*grad)[base + t.offs[q]] += ge[q];
        }
    });
    return total;
}

}  // namespace

ScalarField harmonic_extension(const Problem& p, double tol) {
    const Grid& g = p.grid;
    const auto t = q1::make_tables(g);
    ScalarField gb = boundary_values(p);
    for (std::size_t i = 0; i < gb.size(); ++i) {
        if (!p.fixed_mask[i]) gb[i] = 0.0;
    }
    // b = -K g_b on free nodes.
    std::vector<double> kg(g.node_count());
    q1::apply_stiffness(g, t, gb.values, kg);
    std::vector<double> b(g.node_count());
    for (std::size_t i = 0; i < b.size(); ++i) b[i] = p.fixed_mask[i] ? 0.0 : -kg[i];
    std::vector<double> x(g.node_count(), 0.0);
    auto apply = [&](std::span<const double> in, std::span<double> out) {
        q1::apply_stiffness(g, t, in, out, &p.fixed_mask);
    };
    auto project = [&](std::vector<double>& v) {
        for (std::size_t i = 0; i < v.size(); ++i) {
            if (p.fixed_mask[i]) v[i] = 0.0;
        }
    };
    const auto res = q1::conjugate_gradient(apply, b, x, tol, 20 * static_cast<int>(std::sqrt(b.size())) + 1000, project);
    if (!res.converged) {
        throw SolverError("harmonic extension did not converge", res.relative_residual, res.iterations);
    }
    ScalarField u = gb;
    for (std::size_t i = 0; i < u.size(); ++i) {
        if (!p.fixed_mask[i]) u[i] = x[i];
    }
    return u;
}

double energy(const Problem& p, const ScalarField& u) {
    check_grid(p, u);
    const auto t = q1::make_tables(p.grid);
    return energy_impl(p, t, u, nullptr);
}

ScalarField energy_gradient(const Problem& p, const ScalarField& u) {
    check_grid(p, u);
    const auto t = q1::make_tables(p.grid);
    std::vector<double> dj;
    energy_impl(p, t, u, &dj);
    ScalarField g(p.grid);
    const double inv = 1.0 / p.grid.cell_volume();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] = p.fixed_mask[i] ? 0.0 : dj[i] * inv;
    return g;
}

std::pair<ScalarField, MinimizeReport> minimize(const Problem& p, const ScalarField& u0,
                                                const MinimizeOptions& opt) {
    check_grid(p, u0);
    const Grid& g = p.grid;
    const auto t = q1::make_tables(g);
    const double inv_vol = 1.0 / g.cell_volume();
    const std::size_t n = u0.size();
    MinimizeReport rep;
    for (std::size_t i = 0; i < n; ++i) {
        if (!std::isfinite(u0[i])) throw DivergedError("initial field has non-finite values");
    }
    if (opt.max_iter <= 0) {
        rep.initial_energy = rep.final_energy = energy(p, u0);
        rep.stop_reason = "max_iter";
        rep.lipschitz = max_norm(gradient(u0));
        return {u0, rep};
    }

    bool nonneg = opt.project_nonnegative;
    for (std::size_t i = 0; i < n && nonneg; ++i) nonneg = u0[i] >= 0.0;
    rep.projected = nonneg;

    ScalarField u = u0;
    std::vector<double> dj;
    double e = energy_impl(p, t, u, &dj, nonneg);
    if (!std::isfinite(e)) throw DivergedError("initial energy is not finite");
    rep.initial_energy = e;

    // Nodes held this iteration: fixed, plus (when projecting) nodes at the
    // bound whose gradient pushes outward.
    std::vector<std::uint8_t> held(n);
    auto update_held = [&] {
        for (std::size_t i = 0; i < n; ++i) {
            held[i] = p.fixed_mask[i] || (nonneg && u[i] <= 0.0 && dj[i] > 0.0);
        }
    };
    auto stationarity = [&] {
        double m = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            if (!held[i]) m = std::max(m, std::abs(dj[i]) * inv_vol);
        }
        return m;
    };
    update_held();
    rep.gradient_norm = stationarity();

    const double step0 = opt.initial_step > 0.0
                             ? opt.initial_step
                             : (opt.descent == Descent::Sobolev
                                    ? 1.0
                                    : g.h * g.h / (4.0 * g.dim * p.model.C0 * p.model.scale));
    auto finish = [&](std::string reason) {
        rep.final_energy = e;
        rep.stop_reason = std::move(reason);
        rep.lipschitz = max_norm(gradient(u));
        return std::make_pair(std::move(u), std::move(rep));
    };
    if (rep.gradient_norm <= opt.tol) {
        rep.converged = true;
        return finish("tolerance");
    }

    auto apply = [&](std::span<const double> in, std::span<double> out) {
        q1::apply_stiffness(g, t, in, out, &held);
        for (double& v : out) v *= 2.0;
    };
    auto project = [&](std::vector<double>& v) {
        for (std::size_t i = 0; i < v.size(); ++i) {
            if (held[i]) v[i] = 0.0;
        }
    };

    std::vector<double> dir(n);
    ScalarField trial(g);
    double step = step0;
    for (int it = 1; it <= opt.max_iter; ++it) {
        if (opt.descent == Descent::Sobolev) {
            std::vector<double> rhs(n);
            for (std::size_t i = 0; i < n; ++i) rhs[i] = held[i] ? 0.0 : -dj[i];
            std::fill(dir.begin(), dir.end(), 0.0);
            q1::conjugate_gradient(apply, rhs, dir, opt.precond_tol,
                                   10 * static_cast<int>(std::sqrt(static_cast<double>(n))) + 200, project);
        } else {
            for (std::size_t i = 0; i < n; ++i) dir[i] = held[i] ? 0.0 : -dj[i] * inv_vol;
        }

        double s = std::min(2.0 * step, step0);
        bool accepted = false;
        for (int bt = 0; bt <= opt.max_backtracks; ++bt) {
            double slope = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                double v = u[i] + s * dir[i];
                if (nonneg && !p.fixed_mask[i] && v < 0.0) v = 0.0;
                trial[i] = v;
                slope += dj[i] * (v - u[i]);
            }
            if (!(slope < 0.0)) {
                s *= 0.5;
                continue;
            }
            double e_trial = 0.0;
            try {
                e_trial = energy_impl(p, t, trial, nullptr);
            } catch (const DomainError&) {
                e_trial = std::numeric_limits<double>::quiet_NaN();
            }
            if (!std::isfinite(e_trial)) throw DivergedError("energy became non-finite during line search");
            // The strict test rejects steps whose decrease is lost to rounding.
            if (e_trial <= e + opt.armijo_c * slope && e_trial < e) {
                accepted = true;
                break;
            }
            s *= 0.5;
        }
        if (!accepted) return finish("line search failed");
        std::swap(u.values, trial.values);
        step = s;
        e = energy_impl(p, t, u, &dj, nonneg);
        update_held();
        rep.iterations = it;
        rep.step_history.push_back(s);
        rep.energy_history.push_back(e);
        rep.gradient_norm = stationarity();
        if (rep.gradient_norm <= opt.tol) {
            rep.converged = true;
            return finish("tolerance");
        }
        const auto& h = rep.energy_history;
        if (opt.stall_window > 0 && h.size() > static_cast<std::size_t>(opt.stall_window)) {
            const double before = h[h.size() - 1 - opt.stall_window];
            if (before - e <= opt.stall_rel_decrease * std::abs(e)) return finish("stalled");
        }
    }
    return finish("max_iter");
}

std::vector<double> domain_variation_residual(const Problem& p, const ScalarField& u,
                                              std::span<const VectorField> tests) {
    check_grid(p, u);
    const Grid& g = p.grid;
    const auto t = q1::make_tables(g);
    const int d = g.dim;
    const int nc = t.corners;
    const double vol = g.cell_volume();
    std::vector<double> out;
    out.reserve(tests.size());
    for (const auto& phi : tests) {
        if (!phi.grid.same_as(g)) throw ContractError("test field grid does not match");
        for (std::size_t i = 0; i < g.node_count(); ++i) {
            if (!g.on_boundary(i)) continue;
            for (int c = 0; c < d; ++c) {
                if (phi.values[i * d + c] != 0.0) {
                    throw ContractError("test field support touches the box boundary");
                }
            }
        }
        double total = 0.0;
        q1::for_each_cell(g, [&](std::size_t base) {
            double ue[8];
            double pe[8][3];
            bool any = false;
            for (int q = 0; q < nc; ++q) {
                const std::size_t n = base + t.offs[q];
                ue[q] = u.values[n];
                for (int c = 0; c < d; ++c) {
                    pe[q][c] = phi.values[n * d + c];
                    any = any || pe[q][c] != 0.0;
                }
            }
            if (!any) return;
            for (int gi = 0; gi < t.ngauss; ++gi) {
                double ug = 0.0;
                double du[3] = {0, 0, 0};
                double J[3][3] = {{0, 0, 0}, {0, 0, 0}, {0, 0, 0}};  // J[i][j] = d_j phi_i
                for (int q = 0; q < nc; ++q) {
                    ug += t.N[gi * nc + q] * ue[q];
                    for (int a = 0; a < d; ++a) {
                        const double dn = t.dN[(gi * nc + q) * 3 + a];
                        du[a] += dn * ue[q];
                        for (int c = 0; c < d; ++c) J[c][a] += pe[q][c] * dn;
                    }
                }
                double s = 0.0, quad = 0.0, div = 0.0;
                for (int a = 0; a < d; ++a) {
                    s += du[a] * du[a];
                    div += J[a][a];
                    for (int b = 0; b < d; ++b) quad += du[a] * J[a][b] * du[b];
                }
                total += t.weight[gi] * vol *
                         (2.0 * eval_dF(p.model, s) * quad -
                          (eval_F(p.model, s) + p.lambda * smoothed_step(ug, p.eps)) * div);
            }
        });
        out.push_back(total);
    }
    return out;
}

}  // namespace fbm
