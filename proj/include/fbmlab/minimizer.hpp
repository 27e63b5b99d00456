#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "fbmlab/density.hpp"
#include "fbmlab/field.hpp"

namespace fbm {

enum class BoundaryKind { HalfPlane, Radial, Wedge, File };

/// Named boundary-data generators.
///
///   halfplane(e):   (x . e)^+
///   radial(c):      (|x - center| - c)^+
///   wedge(angle):   max(0, x . e(+angle/2), x . e(-angle/2)), e(b) = (cos b, sin b, 0)
///   file:           interpolated from a stored scalar field
struct BoundaryData {
    BoundaryKind kind = BoundaryKind::HalfPlane;
    Point direction{1.0, 0.0, 0.0};
    Point center{};
    double c = 0.5;
    double angle = 0.0;
    std::string path;
    std::shared_ptr<const ScalarField> field;

    static BoundaryData halfplane(const Point& e);
    static BoundaryData radial(double c, const Point& center = {});
    static BoundaryData wedge(double angle);
    static BoundaryData from_field(std::shared_ptr<const ScalarField> f, std::string path = {});

    double eval(const Point& x, int dim) const;
    std::string name() const;
};

/// Discrete one-phase problem: minimize
///   J_eps(u) = sum_cells int [F(|grad u|^2) + lambda H_eps(u)]
/// over Q1 fields with u = g on fixed_mask.
struct Problem {
    Grid grid;
    DensityModel model;
    double lambda = 1.0;
    BoundaryData boundary;
    double eps = 0.0;
    std::vector<std::uint8_t> fixed_mask;

    /// lambda defaults to bernoulli_lambda(model); eps = eps_factor * h;
    /// fixed_mask = all boundary nodes.
    static Problem make(const Grid& g, const DensityModel& m, const BoundaryData& bd,
                        std::optional<double> lambda = std::nullopt, double eps_factor = 2.0);

    void validate() const;
};

/// Boundary data sampled at every node.
ScalarField boundary_values(const Problem& p);

/// Linear-model extension of the boundary data: the discrete harmonic
/// function with the prescribed values on fixed_mask.
ScalarField harmonic_extension(const Problem& p, double tol = 1e-10);

/// J_eps(u), evaluated with 2^dim-point Gauss quadrature per cell.
double energy(const Problem& p, const ScalarField& u);

/// Nodal first variation G, normalized so that <G, v> h^dim is the directional
/// derivative of energy along v. Zero on fixed_mask.
ScalarField energy_gradient(const Problem& p, const ScalarField& u);

enum class Descent {
    Plain,    // d = -G
    Sobolev,  // d = -(2K)^{-1} dJ/du, K the Dirichlet Q1 stiffness
};

struct MinimizeOptions {
    double tol = 1e-6;
    int max_iter = 200;
    Descent descent = Descent::Sobolev;
    double initial_step = 0.0;  // <= 0: 1 for Sobolev, h^2 / (4 dim C0 scale) for Plain
    double armijo_c = 1e-4;
    int max_backtracks = 60;
    double precond_tol = 1e-4;
    /// When every fixed value and u0 are >= 0, iterate on the set u >= 0
    /// (minimizers are nonnegative there): nodes at 0 with G > 0 are held,
    /// trial points are clipped at 0, and the stopping test uses the
    /// projected gradient.
    bool project_nonnegative = true;
    /// Stop ("stalled") when the energy decreased by less than
    /// stall_rel_decrease * |E| over the last stall_window accepted steps.
    int stall_window = 10;
    double stall_rel_decrease = 1e-13;
};

struct MinimizeReport {
    int iterations = 0;
    double initial_energy = 0.0;
    double final_energy = 0.0;
    double gradient_norm = 0.0;  // sup norm of masked (projected) G at the returned field
    std::vector<double> step_history;
    std::vector<double> energy_history;  // energy after every accepted step
    bool converged = false;
    bool projected = false;  // nonnegativity projection was active
    double lipschitz = 0.0;  // max |grad u| over nodes of the returned field
    std::string stop_reason;
};

/// Armijo-backtracked descent (halving) until sup |G| <= tol or max_iter.
/// Energy never increases across accepted steps; fixed_mask nodes are never
/// written.
/// Throws DivergedError if the energy becomes non-finite.
std::pair<ScalarField, MinimizeReport> minimize(const Problem& p, const ScalarField& u0,
                                                const MinimizeOptions& opt);

/// Inner-variation residual
///   R(phi) = sum_cells int 2 F'(|grad u|^2) grad u^T (D phi) grad u
///            - (F(|grad u|^2) + lambda H_eps(u)) div phi
/// for each test field. Test fields must vanish on boundary nodes
/// (ContractError otherwise).
std::vector<double> domain_variation_residual(const Problem& p, const ScalarField& u,
                                              std::span<const VectorField> tests);

}  // namespace fbm
