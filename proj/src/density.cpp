#include "fbmlab/density.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "fbmlab/errors.hpp"

namespace fbm {

namespace {

void require_argument(double t) {
    if (!std::isfinite(t) || t < 0.0) {
        throw DomainError("density argument must be finite and >= 0, got " + std::to_string(t));
    }
}

// t = 0 followed by n-1 log-spaced points in [t_hi * 1e-10, t_hi].
std::vector<double> log_samples(double t_hi, std::size_t n) {
    std::vector<double> ts;
    ts.reserve(std::max<std::size_t>(n, 2));
    ts.push_back(0.0);
    const std::size_t m = std::max<std::size_t>(n, 2) - 1;
    const double lo = std::log(t_hi) - 10.0 * std::numbers::ln10;
    const double hi = std::log(t_hi);
    for (std::size_t i = 0; i < m; ++i) {
        const double s = m == 1 ? 1.0 : static_cast<double>(i) / static_cast<double>(m - 1);
        ts.push_back(std::exp(lo + s * (hi - lo)));
    }
    ts.back() = t_hi;
    return ts;
}

}  // namespace

DensityModel DensityModel::linear() {
    return DensityModel{};
}

DensityModel DensityModel::arctan(double alpha) {
    DensityModel m;
    m.kind = DensityKind::ArctanPerturbed;
    m.alpha = alpha;
    m.c0 = 1.0;
    m.C0 = 1.0 + alpha * std::numbers::pi / 2.0;
    return m;
}

void DensityModel::validate() const {
    if (kind == DensityKind::ArctanPerturbed && !(std::isfinite(alpha) && alpha >= 0.0)) {
        throw ConfigError("density.alpha must be a finite nonnegative number");
    }
    if (!(c0 > 0.0) || !(C0 > 0.0) || !std::isfinite(c0) || !std::isfinite(C0)) {
        throw ConfigError("density structural bounds c0, C0 must be positive");
    }
    if (!(t_max > 0.0) || !std::isfinite(t_max)) {
        throw ConfigError("density.t_max must be positive");
    }
    if (!(scale > 0.0) || !std::isfinite(scale)) {
        throw ConfigError("density.scale must be positive");
    }
}

std::string DensityModel::name() const {
    return kind == DensityKind::Linear ? "linear" : "arctan";
}

double eval_F(const DensityModel& m, double t) {
    require_argument(t);
    switch (m.kind) {
        case DensityKind::Linear:
            return m.scale * t;
        case DensityKind::ArctanPerturbed:
            return m.scale * (t + m.alpha * (t * std::atan(t) - 0.5 * std::log1p(t * t)));
    }
    return 0.0;
}

double eval_dF(const DensityModel& m, double t) {
    require_argument(t);
    switch (m.kind) {
        case DensityKind::Linear:
            return m.scale;
        case DensityKind::ArctanPerturbed:
            return m.scale * (1.0 + m.alpha * std::atan(t));
    }
    return 0.0;
}

double eval_d2F(const DensityModel& m, double t) {
    require_argument(t);
    switch (m.kind) {
        case DensityKind::Linear:
            return 0.0;
        case DensityKind::ArctanPerturbed:
            return m.scale * m.alpha / (1.0 + t * t);
    }
    return 0.0;
}

double psi(const DensityModel& m, double t) {
    return 2.0 * t * eval_dF(m, t) - eval_F(m, t);
}

double bernoulli_lambda(const DensityModel& m) {
    m.validate();
    return psi(m, 1.0);
}

StructuralReport check_structural(const DensityModel& m, std::size_t n_samples) {
    StructuralReport rep{};
    rep.c0_observed = INFINITY;
    rep.C0_observed = -INFINITY;
    rep.F2_margin = INFINITY;
    rep.min_d2F = INFINITY;
    for (double t : log_samples(m.t_max, n_samples)) {
        const double d1 = eval_dF(m, t);
        const double d2 = eval_d2F(m, t);
        rep.c0_observed = std::min(rep.c0_observed, d1);
        rep.C0_observed = std::max(rep.C0_observed, d1);
        rep.F2_margin = std::min(rep.F2_margin, m.C0 / (1.0 + t) - d2);
        rep.min_d2F = std::min(rep.min_d2F, d2);
    }
    rep.pass = rep.c0_observed >= m.c0 && rep.C0_observed <= m.C0 && rep.F2_margin >= 0.0 &&
               rep.min_d2F >= 0.0;
    return rep;
}

FlatnessReport check_flatness_condition(const DensityModel& m, std::size_t n_samples) {
    double sup = 0.0;
    for (double t : log_samples(m.t_max, n_samples)) {
        sup = std::max(sup, eval_d2F(m, t) / eval_dF(m, t));
    }
    FlatnessReport rep{};
    rep.sup_ratio = sup;
    rep.lhs = 1.0 + 2.0 * sup;
    rep.pass = rep.lhs < 4.0;
    return rep;
}

double epsilon_star(const DensityModel& m, double t_hi, std::size_t n_samples) {
    if (std::isnan(t_hi) || t_hi < 0.0) {
        throw DomainError("epsilon_star interval end must be >= 0");
    }
    // F' is bounded; past 1e12 every supported kind is flat to round-off.
    const double hi = std::isinf(t_hi) ? 1e12 : t_hi;
    const double ref = eval_dF(m, 1.0);
    double sup = 0.0;
    if (hi == 0.0) {
        return std::abs(eval_dF(m, 0.0) - ref);
    }
    for (double t : log_samples(hi, n_samples)) {
        sup = std::max(sup, std::abs(eval_dF(m, t) - ref));
    }
    return sup;
}

}  // namespace fbm
