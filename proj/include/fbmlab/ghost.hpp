#pragma once

#include <optional>
#include <vector>

#include "fbmlab/density.hpp"
#include "fbmlab/field.hpp"

namespace fbm {

/// U^z(x) = (F'(|grad u|^2) - F0) (2u / rho^2) (grad u - u (x - z) / rho^2),
/// rho = max(|x - z|, cap_radius), evaluated at the grid nodes.
struct FluxField {
    Point z{};
    double F0 = 1.0;
    double cap_radius = 0.0;
    VectorField field;
};

/// F0 defaults to F'(1); cap_radius <= 0 means h/2. Uses the nodal gradient.
/// Throws GeometryError if z lies outside the grid box.
FluxField flux_field(const ScalarField& u, const DensityModel& m, const Point& z,
                     std::optional<double> F0 = std::nullopt, double cap_radius = 0.0);

struct SmallUReport {
    double max_violation;  // max over nodes outside the cap of |U| |x-z| - eps_star C_Lip
    double eps_star;       // sup |F'(t) - F'(1)| over t in [0, max(1, Lip^2)]
    double lipschitz;      // max(max |grad u|, max |u| / |x - z|)
    double C_Lip;          // 2 Lip (Lip + max(Lip, Lip^2))
    bool pass;             // max_violation <= 1e-8
};

SmallUReport smallU_bound_check(const FluxField& U, const DensityModel& m, const ScalarField& u);

/// Gradient part of the Helmholtz decomposition of U on the grid box.
struct GhostFunction {
    Point z{};
    double F0 = 1.0;
    ScalarField potential;  // mean zero (trapezoid weights)
    VectorField remainder;  // U - gradient(potential), nodal
    int iterations = 0;
    double relative_residual = 0.0;  // ||b - K phi|| / ||b|| of the weak Neumann system
};

/// Weak Neumann problem: find Q1 phi with int grad phi . grad psi = int U . grad psi
/// for all Q1 psi, U taken as its Q1 interpolant. Conjugate gradients with the
/// constant mode projected out each iteration, then the weighted mean removed.
/// max_iter <= 0 picks a cap from the grid size. Throws SolverError when the
/// cap is reached before tol.
GhostFunction neumann_solve(const FluxField& U, double tol = 1e-8, int max_iter = 0);
GhostFunction neumann_solve(const VectorField& U, double tol = 1e-8, int max_iter = 0);

/// Load vector b_p = int U . grad psi_p (U as Q1 interpolant).
std::vector<double> neumann_load(const VectorField& U);

/// Weak divergence of the remainder, int (U - grad phi) . grad psi_p for every
/// node p, in Q1 form (b - K phi).
std::vector<double> remainder_weak_divergence(const VectorField& U, const GhostFunction& g);

/// ||b - K phi|| / ||b|| recomputed from scratch (0 when b = 0).
double weak_divergence_residual(const VectorField& U, const GhostFunction& g);

struct StabilityReport {
    double phi_norm;  // (int |phi|^s + |grad phi|^s)^(1/s)
    double U_norm;    // (int |U|^s)^(1/s)
    double ratio;     // phi_norm / U_norm, 0 when U = 0
};

StabilityReport decomposition_stability_check(const VectorField& U, const GhostFunction& g,
                                              double s = 1.5);

struct ShellIdentityRow {
    double r;
    double flux;        // r^{1-n} int_{dB_r} U . nu
    double d_shell;     // centered difference in r of shell_average(phi)
    double mismatch;    // |flux - d_shell|
};

/// dr <= 0 picks the grid spacing. n_points <= 0 picks default_sphere_points.
std::vector<ShellIdentityRow> shell_identity_check(const VectorField& U, const GhostFunction& g,
                                                   const Point& z, const std::vector<double>& radii,
                                                   double dr = 0.0, int n_points = 0);

struct RajRow {
    double r;
    double d_mean_phi;     // centered difference in r of the ball mean of phi
    double mean_radial_U;  // ball mean of U . (x - z) / |x - z|
    double gap;            // d_mean_phi - mean_radial_U
    double corrected_gap;  // d_mean_phi - (1/r) ball mean of U . (x - z)
};

std::vector<RajRow> raj_identity_check(const VectorField& U, const GhostFunction& g,
                                       const Point& z, const std::vector<double>& radii,
                                       double dr = 0.0, int subsamples = 2);

struct RescaledFlux {
    FluxField flux;            // on the reference grid [-1,1]^dim, base point 0
    double max_scaled_bound;   // max over reference nodes of |U_theta(x)| |x|
};

/// U_theta(x) = theta U^z(z + theta x) on [-1,1]^dim with ref_cells cells per
/// axis, u and its nodal gradient interpolated from the source grid. With
/// squared_argument = false, F' is evaluated at |grad u| instead of |grad u|^2.
/// Throws GeometryError if z + theta [-1,1]^dim leaves the source box.
RescaledFlux rescaled_flux(const ScalarField& u, const DensityModel& m, const Point& z,
                           double theta, std::optional<double> F0 = std::nullopt,
                           int ref_cells = 32, bool squared_argument = true);

}  // namespace fbm
