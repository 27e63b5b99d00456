#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <numbers>
#include <random>

#include "fbmlab/errors.hpp"
#include "fbmlab/field.hpp"
#include "fbmlab/field_io.hpp"
#include "fbmlab/quadrature.hpp"

using namespace fbm;
using std::numbers::pi;

namespace {

double sq_norm(const Point& x, int dim) { return dot(x, x, dim); }

bool interior(const Grid& g, std::size_t i) { return !g.on_boundary(i); }

}  // namespace

TEST_CASE("grid construction") {
    const Grid g = Grid::cube(3, -1.0, 1.0, 8);
    CHECK(g.h == 0.25);
    CHECK(g.node_count() == 729);
    CHECK(g.cell_count() == 512);
    CHECK(g.index(1, 2, 3) == (1 * 9 + 2) * 9 + 3);
    const auto mi = g.multi_index(g.index(4, 5, 6));
    CHECK(mi[0] == 4);
    CHECK(mi[1] == 5);
    CHECK(mi[2] == 6);
    CHECK_THROWS_AS(Grid::make(2, {0, 0, 0}, {1, 2, 0}, {4, 4, 0}), ConfigError);
    CHECK_THROWS_AS(Grid::make(2, {0, 0, 0}, {0, 1, 0}, {4, 4, 0}), ConfigError);
    CHECK_NOTHROW(Grid::make(2, {0, 0, 0}, {1, 2, 0}, {4, 8, 0}));
}

TEST_CASE("gradient of constant, affine and quadratic fields") {
    const Grid g = Grid::cube(3, -1.0, 1.0, 16);
    const auto c = gradient(ScalarField(g, 3.5));
    for (double v : c.values) CHECK(v == 0.0);

    const Point a{0.3, -1.2, 2.5};
    const auto lin = gradient(sample_scalar(g, [&](const Point& x) { return dot(a, x, 3); }));
    double err = 0.0;
    for (std::size_t i = 0; i < g.node_count(); ++i) {
        const Point v = lin.at(i);
        for (int d = 0; d < 3; ++d) err = std::max(err, std::abs(v[d] - a[d]));
    }
    CHECK(err <= 1e-12);

    const Grid q = Grid::cube(3, -1.0, 1.0, 64);
    const auto gq = gradient(sample_scalar(q, [](const Point& x) { return sq_norm(x, 3); }));
    err = 0.0;
    for (std::size_t i = 0; i < q.node_count(); ++i) {
        if (!interior(q, i)) continue;
        const Point x = q.node(i);
        const Point v = gq.at(i);
        for (int d = 0; d < 3; ++d) err = std::max(err, std::abs(v[d] - 2 * x[d]));
    }
    CHECK(err <= 1e-10);
}

TEST_CASE("gradient needs three nodes per axis") {
    const Grid g = Grid::make(2, {0, 0, 0}, {1, 0.5, 0}, {2, 1, 0});
    CHECK_THROWS_AS(gradient(ScalarField(g, 1.0)), GeometryError);
}

TEST_CASE("interpolation") {
    const Grid g = Grid::cube(2, -1.0, 1.0, 10);
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> v(-2.0, 2.0);
    ScalarField f(g);
    for (auto& x : f.values) x = v(rng);
    for (std::size_t i = 0; i < g.node_count(); i += 7) CHECK(interpolate(f, g.node(i)) == f[i]);

    const auto aff = sample_scalar(g, [](const Point& x) { return 1.5 - 2 * x[0] + 0.7 * x[1]; });
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int k = 0; k < 200; ++k) {
        const Point p{u(rng), u(rng), 0};
        CHECK(interpolate(aff, p) == doctest::Approx(1.5 - 2 * p[0] + 0.7 * p[1]).epsilon(1e-13));
    }

    const auto quad = sample_scalar(g, [](const Point& x) { return sq_norm(x, 2); });
    const Point mid{g.node(3, 4)[0] + 0.5 * g.h, g.node(3, 4)[1], 0};
    CHECK(interpolate(quad, mid) - sq_norm(mid, 2) == doctest::Approx(g.h * g.h / 4).epsilon(1e-10));

    CHECK_THROWS_AS(interpolate(f, Point{1.5, 0, 0}), GeometryError);
}

TEST_CASE("sphere quadrature") {
    const auto s = sphere_quadrature(3, {}, 0.5, 2000);
    double w = 0.0;
    for (const auto& p : s) w += p.w;
    CHECK(w == doctest::Approx(pi).epsilon(1e-13));

    const Point e{0.6, 0.0, 0.8};
    for (double r : {0.1, 0.5, 1.0}) {
        double odd = 0.0;
        for (const auto& p : sphere_quadrature(3, {}, r, 2000)) odd += p.w * dot(p.normal, e, 3);
        CHECK(std::abs(odd) <= 1e-3 * r * r);
    }

    double second = 0.0;
    for (const auto& p : sphere_quadrature(3, {}, 1.0, 4000)) {
        const double c = dot(p.normal, e, 3);
        second += p.w * c * c;
    }
    CHECK(second == doctest::Approx(4 * pi / 3).epsilon(5e-3));

    const auto s2 = sphere_quadrature(2, {0.1, 0.2, 0}, 0.3, 64);
    w = 0.0;
    for (const auto& p : s2) w += p.w;
    CHECK(w == doctest::Approx(2 * pi * 0.3).epsilon(1e-13));

    const Grid g = Grid::cube(2, -1.0, 1.0, 8);
    CHECK_THROWS_AS(sphere_quadrature(g, {0.8, 0, 0}, 0.3, 64), GeometryError);
}

TEST_CASE("shell average") {
    const Grid g = Grid::cube(3, -1.0, 1.0, 32);
    CHECK(shell_average(ScalarField(g, 2.0), {}, 0.4) == doctest::Approx(2.0 * 4 * pi).epsilon(1e-12));

    const auto odd = sample_scalar(g, [](const Point& x) { return x[0] - 0.5 * x[2]; });
    CHECK(std::abs(shell_average(odd, {}, 0.5)) <= 1e-3);

    const Point z{0.1, -0.05, 0.0};
    const auto hp = sample_scalar(g, [&](const Point& x) {
        const double s = std::max(0.0, x[1] - z[1]);
        return s * s;
    });
    const double r = 0.5;
    CHECK(shell_average(hp, z, r) == doctest::Approx(r * r * 2 * pi / 3).epsilon(5e-3));

    const Grid g2 = Grid::cube(2, -1.0, 1.0, 16);
    CHECK(shell_average(ScalarField(g2, 1.0), {}, 0.7) == doctest::Approx(2 * pi).epsilon(1e-12));
}

TEST_CASE("ball integral") {
    const Grid g3 = Grid::cube(3, -1.1, 1.1, 71);  // h close to 1/32, no node on x3 = 0
    CHECK(ball_integral(ScalarField(g3, 1.0), {}, 1.0) == doctest::Approx(4 * pi / 3).epsilon(2e-3));
    const auto half = sample_scalar(g3, [](const Point& x) { return x[2] > 0 ? 1.0 : 0.0; });
    const Point e{0.0, 0.0, 1.0};
    const double hb = ball_integrate(g3, {}, 1.0, {}, [&](const Point& x) { return dot(x, e, 3) > 0 ? 1.0 : 0.0; });
    CHECK(hb == doctest::Approx(2 * pi / 3).epsilon(5e-3));
    CHECK(ball_integral(half, {}, 1.0) == doctest::Approx(2 * pi / 3).epsilon(5e-3));

    const Grid g2 = Grid::cube(2, -1.25, 1.25, 80);
    CHECK(ball_integral(ScalarField(g2, 1.0), {}, 1.0) == doctest::Approx(pi).epsilon(2e-3));
    CHECK_THROWS_AS(ball_integral(ScalarField(g2, 1.0), {}, 1.3), GeometryError);
}

TEST_CASE("property: co-area consistency of ball and shell quadrature") {
    const Grid g = Grid::cube(2, -1.0, 1.0, 128);
    const auto f = sample_scalar(g, [](const Point& x) { return 1.0 + x[0] * x[0] + std::sin(x[1]); });
    const Point z{0.05, -0.1, 0};
    for (double r : {0.3, 0.5}) {
        const double dr = g.h;
        const double d = (ball_integral(f, z, r + dr) - ball_integral(f, z, r - dr)) / (2 * dr);
        const double shell = shell_average(f, z, r) * r;  // r^{n-1} times the average
        CHECK(std::abs(d - shell) <= 4 * g.h * std::abs(shell));
    }
}

TEST_CASE("property: refinement orders") {
    auto fn = [](const Point& x) { return std::cos(2 * x[0]) * std::exp(x[1]); };
    const Point z{0.1, 0.0, 0};
    const double r = 0.5;
    // exact ball integral via a very fine reference
    const Grid fine = Grid::cube(2, -1.0, 1.0, 512);
    const double ref_ball = ball_integrate(fine, z, r, {8, 0.0}, fn);
    double prev = 0.0;
    for (int n : {32, 64, 128}) {
        const Grid g = Grid::cube(2, -1.0, 1.0, n);
        const double err = std::abs(ball_integral(sample_scalar(g, fn), z, r) - ref_ball);
        if (n > 32) CHECK(err <= prev / 1.9);
        prev = err;
    }

    // sphere rule on an analytic integrand: error falls at least quadratically in n_points
    auto shell = [&](int np) {
        double s = 0.0;
        for (const auto& p : sphere_quadrature(3, z, r, np)) s += p.w * fn(p.x) * fn(p.x);
        return s;
    };
    const double ref = shell(256000);
    const double e1 = std::abs(shell(1000) - ref);
    const double e2 = std::abs(shell(4000) - ref);
    CHECK(e2 <= e1 / 4);
}

TEST_CASE("property: gradient and interpolation commute with affine box maps") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    const Grid g = Grid::cube(2, -1.0, 1.0, 12);
    const double s = 2.5;
    const Point shift{0.75, -3.0, 0};
    const Grid m = Grid::make(2, {-s + shift[0], -s + shift[1], 0}, {s + shift[0], s + shift[1], 0}, {12, 12, 0});
    ScalarField f(g);
    for (auto& v : f.values) v = u(rng);
    ScalarField fm(m);
    fm.values = f.values;
    const auto gf = gradient(f);
    const auto gm = gradient(fm);
    for (std::size_t i = 0; i < g.node_count(); ++i) {
        const Point a = gf.at(i), b = gm.at(i);
        CHECK(b[0] * s == doctest::Approx(a[0]).epsilon(1e-12));
        CHECK(b[1] * s == doctest::Approx(a[1]).epsilon(1e-12));
    }
    for (int k = 0; k < 100; ++k) {
        const Point p{u(rng), u(rng), 0};
        const Point q{s * p[0] + shift[0], s * p[1] + shift[1], 0};
        CHECK(interpolate(fm, q) == doctest::Approx(interpolate(f, p)).epsilon(1e-12));
    }
}

TEST_CASE("smoothed indicator") {
    const Grid g = Grid::cube(2, 0.0, 1.0, 4);
    const double eps = 0.1;
    for (double v : smoothed_indicator(ScalarField(g, -1.0), eps).values) CHECK(v == 0.0);
    for (double v : smoothed_indicator(ScalarField(g, 2 * eps), eps).values) CHECK(v == 1.0);
    ScalarField f(g, 0.0);
    f[3] = eps / 2;
    CHECK(smoothed_indicator(f, eps)[3] == 0.5);
    CHECK(smoothed_step(0.0, eps) == 0.0);
    CHECK(smoothed_step(eps, eps) == 1.0);
}

TEST_CASE("free boundary points") {
    const Grid g = Grid::cube(2, -1.0, 1.0, 20);
    const auto plane = free_boundary_points(sample_scalar(g, [](const Point& x) { return x[0]; }));
    CHECK(plane.size() == 21);
    for (const auto& p : plane) CHECK(std::abs(p[0]) <= g.h);

    CHECK(free_boundary_points(ScalarField(g, 1.0)).empty());

    const Grid g3 = Grid::cube(3, -1.0, 1.0, 24);
    const auto sph = free_boundary_points(sample_scalar(g3, [](const Point& x) { return norm(x, 3) - 0.5; }));
    CHECK(sph.size() > 100);
    for (const auto& p : sph) CHECK(std::abs(norm(p, 3) - 0.5) <= g3.h);
}

TEST_CASE("field file round trip") {
    const auto dir = std::filesystem::temp_directory_path() / "fbmlab_field_io";
    std::filesystem::create_directories(dir);
    const Grid g = Grid::make(3, {-1, -0.5, 0}, {1, 0.5, 0.25}, {8, 4, 1});
    std::mt19937_64 rng(17);
    std::normal_distribution<double> n;
    ScalarField f(g);
    for (auto& v : f.values) v = n(rng);
    const std::string path = (dir / "f.bin").string();
    write_field(path, f, FieldMeta{Point{0.1, 0.2, 0.0}, 1.25});
    FieldMeta meta;
    const auto back = read_scalar_field(path, &meta);
    CHECK(back.grid.same_as(g));
    CHECK(back.values == f.values);
    REQUIRE(meta.base_point.has_value());
    CHECK((*meta.base_point)[1] == 0.2);
    CHECK(meta.F0.value() == 1.25);

    VectorField v(g);
    for (auto& x : v.values) x = n(rng);
    write_field((dir / "v.bin").string(), v);
    const auto raw = read_field_file((dir / "v.bin").string());
    CHECK(raw.components == 3);
    CHECK(raw.data == v.values);
    CHECK_THROWS_AS(read_scalar_field((dir / "v.bin").string()), ConfigError);
}

TEST_CASE("round-trip decimal formatting") {
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(-1e6, 1e6);
    for (int i = 0; i < 1000; ++i) {
        const double x = u(rng) * std::pow(10.0, static_cast<int>(i % 40) - 20);
        CHECK(std::stod(format_double(x)) == x);
    }
}
