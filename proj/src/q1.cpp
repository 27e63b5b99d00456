#include "fbmlab/q1.hpp"

#include <cmath>

namespace fbm::q1 {

CellTables make_tables(const Grid& g) {
    CellTables t;
    const int d = g.dim;
    t.dim = d;
    t.corners = 1 << d;
    t.ngauss = 1 << d;
    t.h = g.h;
    for (int q = 0; q < t.corners; ++q) {
        std::size_t o = 0;
        for (int a = 0; a < d; ++a) {
            if ((q >> (d - 1 - a)) & 1) o += g.stride(a);
        }
        t.offs[q] = o;
    }
    const double gp[2] = {0.5 - 0.5 / std::sqrt(3.0), 0.5 + 0.5 / std::sqrt(3.0)};
    t.gauss_t.assign(static_cast<std::size_t>(t.ngauss) * 3, 0.0);
    t.weight.assign(t.ngauss, 1.0 / t.ngauss);
    t.N.assign(static_cast<std::size_t>(t.ngauss) * t.corners, 0.0);
    t.dN.assign(static_cast<std::size_t>(t.ngauss) * t.corners * 3, 0.0);
    for (int gi = 0; gi < t.ngauss; ++gi) {
        for (int a = 0; a < d; ++a) {
            t.gauss_t[gi * 3 + a] = gp[(gi >> (d - 1 - a)) & 1];
        }
        for (int q = 0; q < t.corners; ++q) {
            double val = 1.0;
            for (int a = 0; a < d; ++a) {
                const int bit = (q >> (d - 1 - a)) & 1;
                const double ta = t.gauss_t[gi * 3 + a];
                val *= bit ? ta : 1.0 - ta;
            }
            t.N[gi * t.corners + q] = val;
            for (int a = 0; a < d; ++a) {
                double der = 1.0;
                for (int b = 0; b < d; ++b) {
                    const int bit = (q >> (d - 1 - b)) & 1;
                    const double tb = t.gauss_t[gi * 3 + b];
                    if (b == a) {
                        der *= bit ? 1.0 : -1.0;
                    } else {
                        der *= bit ? tb : 1.0 - tb;
                    }
                }
                t.dN[(gi * t.corners + q) * 3 + a] = der / g.h;
            }
        }
    }
    // Two-point Gauss is exact for the Q1 stiffness integrand.
    const double vol = g.cell_volume();
    t.K.assign(static_cast<std::size_t>(t.corners) * t.corners, 0.0);
    for (int gi = 0; gi < t.ngauss; ++gi) {
        for (int q = 0; q < t.corners; ++q) {
            for (int p = 0; p < t.corners; ++p) {
                double s = 0.0;
                for (int a = 0; a < d; ++a) {
                    s += t.dN[(gi * t.corners + q) * 3 + a] * t.dN[(gi * t.corners + p) * 3 + a];
                }
                t.K[q * t.corners + p] += t.weight[gi] * vol * s;
            }
        }
    }
    return t;
}

void apply_stiffness(const Grid& g, const CellTables& t, std::span<const double> x,
                     std::span<double> y, const std::vector<std::uint8_t>* fixed) {
    std::fill(y.begin(), y.end(), 0.0);
    const int nc = t.corners;
    const std::uint8_t* fx = fixed ? fixed->data() : nullptr;
    for_each_cell(g, [&](std::size_t base) {
        double xe[8];
        for (int q = 0; q < nc; ++q) {
            const std::size_t n = base + t.offs[q];
            xe[q] = (fx && fx[n]) ? 0.0 : x[n];
        }
        for (int q = 0; q < nc; ++q) {
            double s = 0.0;
            const double* row = &t.K[q * nc];
            for (int p = 0; p < nc; ++p) s += row[p] * xe[p];
            y[base + t.offs[q]] += s;
        }
    });
    if (fx) {
        for (std::size_t i = 0; i < y.size(); ++i) {
            if (fx[i]) y[i] = 0.0;
        }
    }
}

std::vector<double> lumped_mass(const Grid& g) {
    std::vector<double> w(g.node_count());
    const double vol = g.cell_volume();
    for (std::size_t idx = 0; idx < w.size(); ++idx) {
        const auto m = g.multi_index(idx);
        double wi = vol;
        for (int a = 0; a < g.dim; ++a) {
            if (m[a] == 0 || m[a] == g.n_cells[a]) wi *= 0.5;
        }
        w[idx] = wi;
    }
    return w;
}

}  // namespace fbm::q1
