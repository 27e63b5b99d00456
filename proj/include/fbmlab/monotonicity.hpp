#pragma once

#include <optional>
#include <string>
#include <vector>

#include "fbmlab/density.hpp"
#include "fbmlab/field.hpp"
#include "fbmlab/ghost.hpp"

namespace fbm {

enum class GradientMode {
    Reconstructed,  // exact gradient of the multilinear interpolant
    Nodal,          // interpolated centered-difference gradient
};

struct QuadratureOptions {
    int sphere_points = 0;     // <= 0: default_sphere_points(dim, r, h)
    int ball_subsamples = 4;   // per axis and cell
    GradientMode gradient = GradientMode::Reconstructed;
};

/// r^{-n} int_{B_r} F(|grad u|^2) + lambda 1{u>0}  -  F0 r^{-n-1} int_{dB_r} u^2.
/// The indicator uses the sign of the interpolant at each sample point.
/// F0 defaults to F'(1).
double weiss_core(const ScalarField& u, const DensityModel& m, double lambda, const Point& z,
                  double r, std::optional<double> F0 = std::nullopt,
                  const QuadratureOptions& q = {});

/// r^{-n} int_{B_r} F(|grad u|^2) + lambda 1{u>0}.
double rescaled_energy(const ScalarField& u, const DensityModel& m, double lambda, const Point& z,
                       double r, const QuadratureOptions& q = {});

/// weiss_core - shell_average(phi). Throws ContractError if the ghost was
/// built for another base point or F0.
double A_value(const ScalarField& u, const DensityModel& m, double lambda, const Point& z, double r,
               const GhostFunction& g, std::optional<double> F0 = std::nullopt,
               const QuadratureOptions& q = {});

/// (2 / r^n) int_{dB_r} F'(|grad u|^2) (u_nu - u/r)^2.
double A_prime_formula(const ScalarField& u, const DensityModel& m, const Point& z, double r,
                       const QuadratureOptions& q = {});

/// (2 / r^{n-1}) int_{dB_r} (F'(|grad u|^2) - F0) (u / r^2) (u_nu - u/r).
double T_error_term(const ScalarField& u, const DensityModel& m, const Point& z, double r,
                    std::optional<double> F0 = std::nullopt, const QuadratureOptions& q = {});

/// r^{1-n} int_{dB_r} U . nu.
double T_flux_form(const FluxField& U, double r, int sphere_points = 0);

/// Sphere-quadrature error estimate of T_error_term: |T(n) - T(n/2)| for the
/// point count n in use.
double T_quadrature_tolerance(const ScalarField& u, const DensityModel& m, const Point& z, double r,
                              std::optional<double> F0 = std::nullopt,
                              const QuadratureOptions& q = {});

struct MainIdRow {
    double r;
    double lhs;         // d/dr of rescaled_energy, difference over the radius grid
    double a_prime;     // A_prime_formula
    double cross;       // (2 / r^{n-1}) int F' (u / r^2) (u_nu - u/r)
    double gap;         // lhs - a_prime - cross
};

/// Radii must be strictly increasing, at least 2 of them.
std::vector<MainIdRow> mainid_check(const ScalarField& u, const DensityModel& m, double lambda,
                                    const Point& z, const std::vector<double>& radii,
                                    const QuadratureOptions& q = {});

/// Derivative of samples y(r) in log r: three-point (nonuniform) centered
/// differences inside, second-order one-sided at the ends, divided by r.
/// Two samples use the two-point slope; one sample gives NaN.
std::vector<double> log_radius_derivative(const std::vector<double>& r, const std::vector<double>& y);

struct MonotonicityRow {
    double r;
    double weiss_core;
    double ghost_term;
    double A;
    double A_prime_fd;
    double A_prime_formula;
    double T;
    double mainid_gap;  // (A_prime_fd - A_prime_formula) + (ghost_prime_fd - T)
    double osc_r;       // mean over B_r of |phi - mean phi|^2
    bool violation;     // A(r) < A(previous r) - tol_mono
};

struct MonotonicityReport {
    Point z{};
    int dim = 3;
    double F0 = 1.0;
    double lambda = 1.0;
    double h = 0.0;
    int n_sphere_points = 0;  // count used at the largest radius
    double tol_mono = 0.0;    // 5 (h / r_min) |A(r_max)|
    int violations = 0;
    std::vector<MonotonicityRow> rows;
};

/// mainid_gap recomputed from stored rows (same arithmetic as scan).
std::vector<double> recombine_mainid_gap(const std::vector<MonotonicityRow>& rows);

/// Radii strictly increasing. Throws ContractError otherwise.
MonotonicityReport scan(const ScalarField& u, const DensityModel& m, double lambda, const Point& z,
                        const std::vector<double>& radii, const GhostFunction& g,
                        const QuadratureOptions& q = {});

/// Geometric radii r_min, r_min ratio, ... up to r_max (inclusive within 1e-12).
std::vector<double> geometric_radii(double r_min, double r_max, double ratio);

/// CSV: r,weiss_core,ghost_term,A,A_prime_fd,A_prime_formula,T,mainid_gap,osc_r
void write_report_csv(const std::string& path, const MonotonicityReport& rep);

/// Mean over B_r(z) of |phi - mean_{B_r} phi|^2 for each r.
std::vector<double> bmo_oscillation(const ScalarField& phi, const Point& z,
                                    const std::vector<double>& radii, int subsamples = 4);

struct VmoReport {
    std::vector<double> profile;
    double limit_estimate;  // last profile value
    double floor;           // 10 h^2 ||phi||_rms^2
    bool pass;              // last <= 0.25 first  or  last <= floor
};

/// r_list must be strictly decreasing.
VmoReport vmo_check(const ScalarField& phi, const Point& z, const std::vector<double>& r_list,
                    int subsamples = 4);

struct RegularPointFit {
    double a0;
    double a1;
    double a2;        // coefficient of the r^2 remainder
    double residual;  // max |y - a0 - a1 r|
};

/// Least squares y ~ a0 + a1 r + a2 r^2. At least 4 samples and 3 distinct
/// radii (ContractError otherwise).
RegularPointFit regular_point_fit(const std::vector<double>& radii, const std::vector<double>& values);

/// Fit of the shell averages of phi around z.
RegularPointFit regular_point_fit(const ScalarField& phi, const Point& z,
                                  const std::vector<double>& radii, int sphere_points = 0);

}  // namespace fbm
