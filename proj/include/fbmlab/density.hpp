#pragma once

#include <cstddef>
#include <string>

namespace fbm {

enum class DensityKind { Linear, ArctanPerturbed };

/// Energy density F(t), t = |grad u|^2.
///
///   Linear:           F(t) = t
///   ArctanPerturbed:  F(t) = t + alpha * (t * atan(t) - log(1 + t^2) / 2)
///
/// Every kind is multiplied by `scale` (default 1). c0 and C0 are the
/// claimed structural bounds c0 <= F' <= C0, 0 <= F'' <= C0 / (1 + t);
/// they are checked by check_structural, never assumed.
struct DensityModel {
    DensityKind kind = DensityKind::Linear;
    double alpha = 0.0;
    double c0 = 1.0;
    double C0 = 1.0;
    double t_max = 1.0;
    double scale = 1.0;

    static DensityModel linear();
    /// Declared bounds default to c0 = 1, C0 = 1 + alpha * pi / 2.
    static DensityModel arctan(double alpha);

    /// Throws ConfigError if alpha < 0, c0/C0/t_max/scale not positive.
    void validate() const;
    std::string name() const;
};

double eval_F(const DensityModel& m, double t);
double eval_dF(const DensityModel& m, double t);
double eval_d2F(const DensityModel& m, double t);

/// Psi(t) = 2 t F'(t) - F(t).
double psi(const DensityModel& m, double t);

/// lambda such that the free-boundary condition reads |grad u| = 1: Psi(1).
double bernoulli_lambda(const DensityModel& m);

inline constexpr std::size_t kDefaultScanSamples = 100000;

struct StructuralReport {
    double c0_observed;   // min F' over the samples
    double C0_observed;   // max F'
    double F2_margin;     // min over samples of C0/(1+t) - F''  (negative on violation)
    double min_d2F;       // min F''
    bool pass;
};

/// Samples t = 0 and a log-spaced grid up to m.t_max.
StructuralReport check_structural(const DensityModel& m,
                                  std::size_t n_samples = kDefaultScanSamples);

struct FlatnessReport {
    double sup_ratio;  // sup F''/F'
    double lhs;        // 1 + 2 sup_ratio
    bool pass;         // lhs < 4
};

FlatnessReport check_flatness_condition(const DensityModel& m,
                                        std::size_t n_samples = kDefaultScanSamples);

/// sup_{t in [0, t_hi]} |F'(t) - F'(1)|. t_hi may be +infinity.
double epsilon_star(const DensityModel& m, double t_hi = 1.0,
                    std::size_t n_samples = kDefaultScanSamples);

}  // namespace fbm
