#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "fbmlab/blowup.hpp"
#include "fbmlab/errors.hpp"

using namespace fbm;
using std::numbers::pi;

namespace {

ScalarField half_plane(const Grid& g, const Point& z, const Point& e) {
    return sample_scalar(g, [&](const Point& x) { return std::max(0.0, dot(sub(x, z), e, g.dim)); });
}

double max_diff(const ScalarField& a, const ScalarField& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

}  // namespace

TEST_CASE("rescale") {
    const Grid g = Grid::cube(2, -1.0, 1.0, 64);
    const Grid ref = Grid::cube(2, -1.0, 1.0, 16);
    const Point z{0.1, -0.2, 0};
    const Point e{0.6, 0.8, 0};
    const auto hp = half_plane(g, z, e);
    CHECK(max_diff(rescale(hp, z, 0.5, ref), rescale(hp, z, 0.25, ref)) <= g.h);

    const auto same = rescale(hp, {}, 1.0, g);
    CHECK(same.values == hp.values);

    const auto quad = sample_scalar(g, [](const Point& x) { return dot(x, x, 2); });
    for (double r : {0.5, 0.25}) {
        const auto ur = rescale(quad, {}, r, ref);
        for (std::size_t i = 0; i < ref.node_count(); ++i) {
            const Point y = ref.node(i);
            CHECK(ur[i] == doctest::Approx(r * dot(y, y, 2)).epsilon(1e-12).scale(g.h * g.h / r));
        }
    }
    CHECK_THROWS_AS(rescale(hp, z, 0.95, ref), GeometryError);
}

TEST_CASE("property: rescale composes") {
    std::mt19937_64 rng(21);
    std::uniform_real_distribution<double> u(-0.2, 0.2);
    const Grid g = Grid::cube(2, -1.0, 1.0, 128);
    const Grid ref = Grid::cube(2, -1.0, 1.0, 64);
    const auto f = sample_scalar(g, [](const Point& x) { return std::sin(3 * x[0]) * std::cos(2 * x[1]) + x[0] * x[1]; });
    for (int rep = 0; rep < 5; ++rep) {
        const Point z{u(rng), u(rng), 0};
        const double r1 = 0.6, r2 = 0.5;
        const auto once = rescale(f, z, r1 * r2, ref);
        const auto twice = rescale(rescale(f, z, r1, ref), {}, r2, ref);
        // two interpolation errors of a function with second derivatives of order 10, scaled by 1/r
        CHECK(max_diff(once, twice) <= 2 * 10 * ref.h * ref.h);
    }
}

TEST_CASE("homogeneity deviation") {
    const Grid g = Grid::cube(3, -1.0625, 1.0625, 102);  // h = 1/48
    const auto quad = sample_scalar(g, [](const Point& x) { return dot(x, x, 3); });
    CHECK(homogeneity_deviation(quad, {}, 1.0) == doctest::Approx(4 * pi / 5).epsilon(1e-2));

    const Grid g2 = Grid::cube(2, -1.0, 1.0, 64);
    const auto hp = half_plane(g2, {}, {1, 0, 0});
    CHECK(homogeneity_deviation(hp, {}, 0.5) <= g2.h);
    const auto cone = sample_scalar(g2, [](const Point& x) { return norm(x, 2); });
    CHECK(homogeneity_deviation(cone, {}, 0.5) <= g2.h);
}

TEST_CASE("property: deviation is linear in the field") {
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> u(-1.0, 1.0), c(0.1, 5.0);
    const Grid g = Grid::cube(2, -1.0, 1.0, 32);
    for (int rep = 0; rep < 10; ++rep) {
        ScalarField f(g);
        for (auto& v : f.values) v = u(rng);
        const double s = c(rng);
        ScalarField fs = f;
        for (auto& v : fs.values) v *= s;
        const double d = homogeneity_deviation(f, {}, 0.6);
        CHECK(homogeneity_deviation(fs, {}, 0.6) == doctest::Approx(s * d).epsilon(1e-12));
    }
}

TEST_CASE("flatness deficit examples") {
    const Grid g = Grid::cube(3, -1.0, 1.0, 32);
    const Point e0{0.48, 0.6, 0.64};
    const auto hp = half_plane(g, {}, e0);
    const auto r = flatness_deficit(hp);
    // boundary samples interpolate across the kink, where the Q1 error is at most h/4
    CHECK(r.deficit <= g.h / 4);
    CHECK(dot(r.e_best, e0, 3) >= 1 - 1e-4);

    CHECK(flatness_deficit(ScalarField(g, 0.0)).deficit == doctest::Approx(0.5).epsilon(1e-12));
    const auto wedge = sample_scalar(g, [](const Point& x) { return std::abs(x[0]); });
    CHECK(flatness_deficit(wedge).deficit == doctest::Approx(0.5).epsilon(1e-3));

    const Grid g2 = Grid::cube(2, -1.0, 1.0, 32);
    const Point e2{std::cos(1.0), std::sin(1.0), 0};
    const auto r2 = flatness_deficit(half_plane(g2, {}, e2));
    CHECK(r2.deficit <= g2.h / 4);
    CHECK(dot(r2.e_best, e2, 2) >= 1 - 1e-4);
}

TEST_CASE("property: flatness deficit is rotation equivariant") {
    const Grid g = Grid::cube(3, -1.0, 1.0, 32);
    auto fn = [](const Point& x) {
        return std::max(0.0, 0.9 * x[0] + 0.3 * x[1] - 0.2 * x[2] + 0.15 * x[1] * x[1]);
    };
    const auto base = flatness_deficit(sample_scalar(g, fn));
    // quarter turn about the x3 axis: (x1, x2) -> (-x2, x1)
    const auto rot = sample_scalar(g, [&](const Point& x) { return fn({x[1], -x[0], x[2]}); });
    const auto r = flatness_deficit(rot);
    CHECK(r.deficit == doctest::Approx(base.deficit).epsilon(1e-6));
    const Point expect{-base.e_best[1], base.e_best[0], base.e_best[2]};
    CHECK(dot(r.e_best, expect, 3) >= 1 - 1e-6);

    // quarter turn about the x1 axis: (x2, x3) -> (-x3, x2)
    const auto rot1 = sample_scalar(g, [&](const Point& x) { return fn({x[0], x[2], -x[1]}); });
    const auto r1 = flatness_deficit(rot1);
    CHECK(r1.deficit == doctest::Approx(base.deficit).epsilon(1e-6));
    const Point expect1{base.e_best[0], -base.e_best[2], base.e_best[1]};
    CHECK(dot(r1.e_best, expect1, 3) >= 1 - 1e-6);
}

TEST_CASE("blow-up sequence and dyadic scales") {
    const Grid g = Grid::cube(3, -1.0, 1.0, 64);
    const Point z{0.1, 0.0, 0.0};
    const auto hp = half_plane(g, z, {1, 0, 0});
    const auto scales = dyadic_scales(g, z);
    REQUIRE(scales.size() >= 2);
    CHECK(scales.front() <= 0.9);
    CHECK(scales.back() >= 8 * g.h - 1e-12);
    for (std::size_t i = 1; i < scales.size(); ++i) CHECK(scales[i] == scales[i - 1] / 2);

    const auto seq = blowup_sequence(hp, z, scales);
    for (const auto& s : seq.scales) {
        CHECK(std::abs(s.u_at_origin) <= g.h);
        CHECK(s.deviation <= 0.05);
        CHECK(s.deficit <= 0.05);
    }
    CHECK_THROWS_AS(blowup_sequence(hp, z, {0.1, 0.2}), ContractError);
}

TEST_CASE("regularity verdict") {
    const Grid g = Grid::cube(3, -1.0, 1.0, 64);
    const auto hp = half_plane(g, {}, {0, 0, 1});
    const auto rep = regularity_verdict(hp, DensityModel::linear(), {}, dyadic_scales(g, {}));
    CHECK(rep.verdict == Verdict::Regular);
    CHECK(std::string(verdict_name(rep.verdict)) == "regular");

    // z on the sphere |x| = 1/2 of the one-phase profile (|x| - 1/2)^+
    const Point z{0.5, 0.0, 0.0};
    const double half = 0.0625;
    const Grid local = Grid::make(3, {z[0] - half, -half, -half}, {z[0] + half, half, half}, {64, 64, 64});
    const auto sph = sample_scalar(local, [](const Point& x) { return std::max(0.0, norm(x, 3) - 0.5); });
    const auto sr = regularity_verdict(sph, DensityModel::arctan(0.1), z, {1.0 / 32, 1.0 / 64});
    CHECK(sr.verdict == Verdict::Regular);

    const Grid g2 = Grid::cube(2, -1.0, 1.0, 32);
    CHECK_THROWS_AS(regularity_verdict(half_plane(g2, {}, {1, 0, 0}), DensityModel::linear(), {}, {0.5, 0.25}),
                    UnavailableError);
    CHECK_THROWS_AS(regularity_verdict(hp, DensityModel::arctan(2.0), {}, {0.5, 0.25}), UnavailableError);

    const auto cone = sample_scalar(g, [](const Point& x) { return norm(x, 3); });
    CHECK(regularity_verdict(cone, DensityModel::linear(), {}, {0.5, 0.25}).verdict == Verdict::Inconclusive);
}

TEST_CASE("flux energy ratio") {
    const Grid g = Grid::cube(3, -1.0, 1.0, 16);
    FluxField U;
    U.field = VectorField(g, 0.0);
    CHECK(flux_energy_ratio(U, 0.5) == 0.0);
    U.field = sample_vector(g, [](const Point&) { return Point{1.0, 0.0, 0.0}; });
    // r^{-1} |B_r| in three dimensions
    CHECK(flux_energy_ratio(U, 0.5) == doctest::Approx(4 * pi / 3 * 0.25).epsilon(2e-2));
}
