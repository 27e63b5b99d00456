#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "fbmlab/field.hpp"

// Bilinear / trilinear (Q1) finite-element tables on the uniform grid. Corner
// q of a cell has axis-a bit (q >> (dim - 1 - a)) & 1, matching the row-major
// node order.
namespace fbm::q1 {

struct CellTables {
    int dim = 2;
    int corners = 4;
    int ngauss = 4;
    double h = 0.0;
    std::size_t offs[8] = {};
    std::vector<double> gauss_t;  // [g * 3 + a] local coordinates in [0,1]
    std::vector<double> weight;   // [g], sums to 1 (reference cell)
    std::vector<double> N;        // [g * corners + q]
    std::vector<double> dN;       // [(g * corners + q) * 3 + a], physical units (1/h)
    std::vector<double> K;        // [q * corners + p], physical local stiffness
};

CellTables make_tables(const Grid& g);

/// Calls fn(base_node_index) for every cell.
template <class Fn>
void for_each_cell(const Grid& g, Fn&& fn) {
    const int n2 = g.dim == 3 ? g.n_cells[2] : 1;
    for (int i = 0; i < g.n_cells[0]; ++i) {
        for (int j = 0; j < g.n_cells[1]; ++j) {
            for (int k = 0; k < n2; ++k) fn(g.index(i, j, k));
        }
    }
}

/// y = K x for the assembled Q1 Laplacian (stiffness) matrix. Nodes flagged
/// in `fixed` are treated as Dirichlet: their x entries are ignored and
/// y is zero there.
void apply_stiffness(const Grid& g, const CellTables& t, std::span<const double> x,
                     std::span<double> y, const std::vector<std::uint8_t>* fixed = nullptr);

/// Trapezoid (lumped mass) weights: integral of the interpolant = sum w_i f_i.
std::vector<double> lumped_mass(const Grid& g);

struct CgResult {
    int iterations = 0;
    double relative_residual = 0.0;
    bool converged = false;
};

/// Conjugate gradients for a symmetric positive (semi)definite operator.
/// `project` is applied to the right-hand side, the residual and the search
/// direction every iteration (constant-mode removal for singular systems).
template <class Apply, class Project>
CgResult conjugate_gradient(Apply&& apply, std::span<const double> b, std::span<double> x,
                            double tol, int max_iter, Project&& project) {
    const std::size_t n = b.size();
    std::vector<double> r(n), p(n), q(n);
    auto dotp = [&](const std::vector<double>& a, const std::vector<double>& c) {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) s += a[i] * c[i];
        return s;
    };
    std::vector<double> bb(b.begin(), b.end());
    project(bb);
    const double bnorm = std::sqrt(dotp(bb, bb));
    CgResult res;
    if (bnorm == 0.0) {
        std::fill(x.begin(), x.end(), 0.0);
        res.converged = true;
        return res;
    }
    apply(std::span<const double>(x.data(), n), std::span<double>(q));
    for (std::size_t i = 0; i < n; ++i) r[i] = bb[i] - q[i];
    project(r);
    p = r;
    double rr = dotp(r, r);
    res.relative_residual = std::sqrt(rr) / bnorm;
    if (res.relative_residual <= tol) {
        res.converged = true;
        return res;
    }
    for (int it = 1; it <= max_iter; ++it) {
        apply(std::span<const double>(p), std::span<double>(q));
        project(q);
        const double pq = dotp(p, q);
        if (!(pq > 0.0)) {
            res.iterations = it;
            return res;
        }
        const double alpha = rr / pq;
        for (std::size_t i = 0; i < n; ++i) {
            x[i] += alpha * p[i];
            r[i] -= alpha * q[i];
        }
        project(r);
        const double rr_new = dotp(r, r);
        res.iterations = it;
        res.relative_residual = std::sqrt(rr_new) / bnorm;
        if (res.relative_residual <= tol) {
            res.converged = true;
            return res;
        }
        const double beta = rr_new / rr;
        rr = rr_new;
        for (std::size_t i = 0; i < n; ++i) p[i] = r[i] + beta * p[i];
        project(p);
    }
    return res;
}

}  // namespace fbm::q1
