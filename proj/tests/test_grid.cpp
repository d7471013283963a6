#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <cstdio>

#include "doctest.h"
#include "evf/grid.hpp"

using namespace evf;

namespace {
constexpr double kPi = 3.14159265358979323846;

ScalarField trig_field(const Grid& g, int kx, int ky) {
    ScalarField s(g);
    const int n = g.n();
    const double h = 2.0 * kPi / n;
    for (int iy = 0; iy < n; ++iy)
        for (int ix = 0; ix < n; ++ix)
            s.v[static_cast<std::size_t>(iy) * n + ix] = std::sin(kx * ix * h + 0.3) *
                                                         std::cos(ky * iy * h - 0.1);
    return s;
}
}  // namespace

TEST_CASE("spectral derivatives are exact on band-limited trig fields") {
    const Grid g({32, 2.0 * kPi});
    const int n = g.n();
    const double h = 2.0 * kPi / n;
    const ScalarField s = trig_field(g, 2, 3);
    std::vector<double> dx(g.nodes()), dy(g.nodes());
    g.deriv(s.v, dx, 0);
    g.deriv(s.v, dy, 1);
    double worst = 0;
    for (int iy = 0; iy < n; ++iy)
        for (int ix = 0; ix < n; ++ix) {
            const std::size_t i = static_cast<std::size_t>(iy) * n + ix;
            const double ex = 2.0 * std::cos(2 * ix * h + 0.3) * std::cos(3 * iy * h - 0.1);
            const double ey = -3.0 * std::sin(2 * ix * h + 0.3) * std::sin(3 * iy * h - 0.1);
            worst = std::max({worst, std::abs(dx[i] - ex), std::abs(dy[i] - ey)});
        }
    CHECK(worst < 1e-12);
}

TEST_CASE("Leray projection yields zero discrete divergence and is idempotent") {
    const Grid g({32, 2.0 * kPi});
    const VectorField v = random_vector_field(g, 17, 6, 1.0);
    const VectorField p = leray_project(v);
    CHECK(p.solenoidal);
    const ScalarField d = div(p);
    for (double x : d.v) CHECK(std::abs(x) < 1e-12);
    const VectorField pp = leray_project(p);
    for (std::size_t i = 0; i < p.x.size(); ++i) {
        CHECK(p.x[i] == doctest::Approx(pp.x[i]).epsilon(1e-13));
        CHECK(p.y[i] == doctest::Approx(pp.y[i]).epsilon(1e-13));
    }
}

TEST_CASE("integration and inner products") {
    const Grid g({16, 2.0 * kPi});
    ScalarField one(g);
    for (double& x : one.v) x = 1.0;
    CHECK(integrate(one) == doctest::Approx(4.0 * kPi * kPi).epsilon(1e-14));

    // sym <-> full promotion in the matrix inner product
    MatField s(g, false), f(g, true);
    for (std::size_t i = 0; i < s.c[0].size(); ++i) {
        s.c[0][i] = 1.0;
        s.c[1][i] = 2.0;
        s.c[2][i] = 3.0;
        f.c[0][i] = 0.5;
        f.c[1][i] = -1.0;
        f.c[2][i] = 4.0;
        f.c[3][i] = 2.0;
    }
    // S : F = 1*0.5 + 2*(-1) + 2*4 + 3*2 = 12.5 per node
    const double expect = 12.5 * 4.0 * kPi * kPi;
    CHECK(inner(s, f) == doctest::Approx(expect).epsilon(1e-14));
    CHECK(inner(f, s) == doctest::Approx(expect).epsilon(1e-14));
}

TEST_CASE("dealiasing zeroes the top third of the spectrum and fixes low modes") {
    const Grid g({32, 2.0 * kPi});
    VectorField v = random_vector_field(g, 3, 4, 1.0);  // modes within the kept band
    VectorField w = v;
    dealias(w);
    for (std::size_t i = 0; i < v.x.size(); ++i) {
        CHECK(std::abs(v.x[i] - w.x[i]) < 1e-12);
        CHECK(std::abs(v.y[i] - w.y[i]) < 1e-12);
    }
}

TEST_CASE("binary field round-trip is exact") {
    const Grid g({16, 2.0 * kPi});
    const VectorField v = random_vector_field(g, 5, 4, 0.7);
    const MatField t = random_spd_field(g, 6, 3, 0.4);
    const std::string dir = "test_grid_io_tmp";
    std::remove((dir + "_v.fld").c_str());
    write_field(dir + "_v.fld", v);
    write_field(dir + "_t.fld", t);
    const VectorField v2 = read_vector_field(dir + "_v.fld", g);
    const MatField t2 = read_mat_field(dir + "_t.fld", g);
    for (std::size_t i = 0; i < v.x.size(); ++i) {
        CHECK(v.x[i] == v2.x[i]);
        CHECK(v.y[i] == v2.y[i]);
    }
    CHECK(t2.full == t.full);
    for (int k = 0; k < t.ncomp(); ++k)
        for (std::size_t i = 0; i < t.c[k].size(); ++i) CHECK(t.c[k][i] == t2.c[k][i]);
    std::remove((dir + "_v.fld").c_str());
    std::remove((dir + "_t.fld").c_str());
}

TEST_CASE("random fields are deterministic in the seed") {
    const Grid g({16, 2.0 * kPi});
    const VectorField a = random_vector_field(g, 11, 3, 1.0);
    const VectorField b = random_vector_field(g, 11, 3, 1.0);
    const VectorField c = random_vector_field(g, 12, 3, 1.0);
    bool same = true, differ = false;
    for (std::size_t i = 0; i < a.x.size(); ++i) {
        same = same && a.x[i] == b.x[i] && a.y[i] == b.y[i];
        differ = differ || a.x[i] != c.x[i];
    }
    CHECK(same);
    CHECK(differ);
}

TEST_CASE("grid mismatch is rejected") {
    const Grid g1({16, 2.0 * kPi});
    const Grid g2({32, 2.0 * kPi});
    const VectorField a = random_vector_field(g1, 1, 2, 1.0);
    const VectorField b = random_vector_field(g2, 1, 2, 1.0);
    CHECK_THROWS_AS(inner(a, b), GridMismatch);
}

TEST_CASE("embedding constant is positive and grid-stable") {
    const Grid g1({32, 2.0 * kPi});
    const Grid g2({64, 2.0 * kPi});
    CHECK(g1.embedding_constant() > 0.1);
    CHECK(g2.embedding_constant() > 0.1);
    CHECK(std::abs(g1.embedding_constant() - g2.embedding_constant()) < 0.2);
}
