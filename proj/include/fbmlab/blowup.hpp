#pragma once

#include <vector>

#include "fbmlab/density.hpp"
#include "fbmlab/field.hpp"
#include "fbmlab/ghost.hpp"

namespace fbm {

/// u_r(y) = u(z + r y) / r sampled on ref. Throws GeometryError if z + r * ref
/// leaves the source box.
ScalarField rescale(const ScalarField& u, const Point& z, double r, const Grid& ref);

/// r^{-(n+1)} int_{B_r(z)} |u - grad u . (x - z)|, gradient of the multilinear
/// interpolant.
double homogeneity_deviation(const ScalarField& u, const Point& z, double r, int subsamples = 4);

/// r^{2-n} int_{B_r(z)} |U|^2 (the r^{-1} weight in three dimensions).
double flux_energy_ratio(const FluxField& U, double r, int subsamples = 2);

struct FlatnessResult {
    Point e_best{};
    double deficit = 0.0;
};

/// inf over unit e of sup over B_R of |u - (x . e)^+|, R = ref_ball_radius.
/// The sup runs over grid nodes in the closed ball, a cube-sphere lattice on
/// its boundary and the point R e; the inf starts from a lattice of directions
/// (216 cube-sphere points in 3D, 256 angles in 2D) and is refined by a
/// pattern search over the moves {-1,0,1}^dim.
FlatnessResult flatness_deficit(const ScalarField& u, double ref_ball_radius = 0.5);

struct BlowupOptions {
    double delta = 0.05;   // deviation threshold
    double gamma = 0.1;    // flatness threshold
    int ref_cells = 32;    // reference grid [-1,1]^dim
};

struct BlowupScale {
    double scale;
    double deviation;
    double deficit;
    Point e_best;
    double u_at_origin;  // u_r(0)
};

struct BlowupSequence {
    Point z{};
    std::vector<BlowupScale> scales;
};

/// Scales must be strictly decreasing.
BlowupSequence blowup_sequence(const ScalarField& u, const Point& z, const std::vector<double>& scales,
                               const BlowupOptions& opt = {});

/// Dyadic scales 2^{-k} from the largest that fits around z down to 8h.
std::vector<double> dyadic_scales(const Grid& g, const Point& z);

enum class Verdict { Regular, Inconclusive };

struct RegularityReport {
    BlowupSequence sequence;
    Verdict verdict = Verdict::Inconclusive;
};

/// "regular" iff deviation <= delta and deficit <= gamma at the two smallest
/// scales. Throws UnavailableError unless dim = 3 and the model passes the
/// flatness condition.
RegularityReport regularity_verdict(const ScalarField& u, const DensityModel& m, const Point& z,
                                    const std::vector<double>& scales, const BlowupOptions& opt = {});

const char* verdict_name(Verdict v);

}  // namespace fbm
