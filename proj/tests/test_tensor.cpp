#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>

#include "doctest.h"
#include "evf/grid.hpp"

using namespace evf;

namespace {

SplitMix64 make_rng(std::uint64_t seed) { return SplitMix64(seed); }

Sym2 rand_sym2(SplitMix64& rng, double s = 1.0) {
    Sym2 m;
    for (double& p : m.p) p = s * rng.normal();
    return m;
}
Sym3 rand_sym3(SplitMix64& rng, double s = 1.0) {
    Sym3 m;
    for (double& p : m.p) p = s * rng.normal();
    return m;
}

template <int d>
double max_abs_diff(const Sym<d>& a, const Sym<d>& b) {
    double w = 0;
    for (int i = 0; i < Sym<d>::np; ++i) w = std::max(w, std::abs(a.p[i] - b.p[i]));
    return w;
}

}  // namespace

TEST_CASE("eigendecomposition reconstructs the matrix (2-D and 3-D)") {
    auto rng = make_rng(42);
    for (int t = 0; t < 200; ++t) {
        {
            const Sym2 s = rand_sym2(rng);
            const Sym2 r = apply_fn(s, [](double l) { return l; });
            CHECK(max_abs_diff(s, r) < 1e-13);
            const Eig<2> e = eig_sym(s);
            CHECK(e.lam[0] <= e.lam[1]);
            // orthogonality of q
            const Mat2 qtq = matmul(transpose(e.q), e.q);
            CHECK(std::abs(qtq(0, 0) - 1) < 1e-14);
            CHECK(std::abs(qtq(0, 1)) < 1e-14);
        }
        {
            const Sym3 s = rand_sym3(rng);
            const Sym3 r = apply_fn(s, [](double l) { return l; });
            CHECK(max_abs_diff(s, r) < 1e-12);
            const Eig<3> e = eig_sym(s);
            CHECK(e.lam[0] <= e.lam[1]);
            CHECK(e.lam[1] <= e.lam[2]);
        }
    }
}

TEST_CASE("spd functions: sqrt, inverse, trace-log") {
    auto rng = make_rng(7);
    for (int t = 0; t < 200; ++t) {
        Sym2 s = rand_sym2(rng, 0.5);
        s = square(s) + 0.1 * Sym2::identity();  // SPD
        const Sym2 r = spd_sqrt(s);
        CHECK(max_abs_diff(square(r), s) < 1e-12);
        const Sym2 si = spd_inv(s);
        const Mat2 prod = mul_ss(s, si);
        CHECK(std::abs(prod(0, 0) - 1) < 1e-10);
        CHECK(std::abs(prod(0, 1)) < 1e-10);
        CHECK(std::abs(trace_log(s) - std::log(det(s))) < 1e-10);
    }
    CHECK_THROWS_AS(spd_sqrt(-1.0 * Sym2::identity()), NotPositiveDefinite);
    CHECK_THROWS_AS(trace_log(0.0 * Sym2::identity()), NotPositiveDefinite);
}

TEST_CASE("conjugate root maps satisfy their defining quadratics") {
    auto rng = make_rng(99);
    for (int t = 0; t < 500; ++t) {
        const double beta = 0.05 + 0.9 * rng.uniform();
        {
            const Sym2 sig = rand_sym2(rng, 1.5);
            const Sym2 b = b_of_sigma(sig, beta);
            CHECK(min_eigenvalue(b) > 0);
            const Sym2 shifted = sig - (1.0 - 2.0 * beta) * Sym2::identity();
            const Sym2 res = beta * square(b) - sym_part(mul_ss(shifted, b)) -
                             (1.0 - beta) * Sym2::identity();
            CHECK(max_abs_diff(res, 0.0 * res) < 1e-11);
            const Sym2 f = f_of_sigma(sig);
            CHECK(min_eigenvalue(f) > 0);
            const Sym2 resf = square(f) - sym_part(mul_ss(sig, f)) - Sym2::identity();
            CHECK(max_abs_diff(resf, 0.0 * resf) < 1e-11);
        }
        {
            const Sym3 sig = rand_sym3(rng, 1.5);
            const Sym3 b = b_of_sigma(sig, beta);
            const Sym3 shifted = sig - (1.0 - 2.0 * beta) * Sym3::identity();
            const Sym3 res = beta * square(b) - sym_part(mul_ss(shifted, b)) -
                             (1.0 - beta) * Sym3::identity();
            CHECK(max_abs_diff(res, 0.0 * res) < 1e-11);
            const Sym3 f = f_of_sigma(sig);
            const Sym3 resf = square(f) - sym_part(mul_ss(sig, f)) - Sym3::identity();
            CHECK(max_abs_diff(resf, 0.0 * resf) < 1e-11);
        }
    }
}

TEST_CASE("invariants") {
    auto rng = make_rng(3);
    for (int t = 0; t < 100; ++t) {
        const Sym3 s = rand_sym3(rng);
        const auto inv = invariants(s);
        // characteristic identity: lam satisfies l^3 - I1 l^2 + I2 l - I3 = 0
        const Eig<3> e = eig_sym(s);
        for (double l : e.lam)
            CHECK(std::abs(l * l * l - inv[0] * l * l + inv[1] * l - inv[2]) < 1e-10);
    }
}

TEST_CASE("angular velocity solver: SW + WS = H, antisymmetry, S = I case") {
    auto rng = make_rng(1234);
    for (int t = 0; t < 500; ++t) {
        const double a = 2.0 * rng.normal(), b = 2.0 * rng.normal();
        {
            Sym2 s = rand_sym2(rng, 0.8);
            s = s + (2.0 + neg_part_magnitude(s)) * Sym2::identity();
            Mat2 l;
            for (double& x : l.a) x = rng.normal();
            const Mat2 w = angular_velocity_w(s, l, a, b);
            const Mat2 res = matmul(s.full(), w) + matmul(w, s.full()) - angular_rhs_h(s, l, a, b);
            for (double x : res.a) CHECK(std::abs(x) < 1e-10);
            CHECK(std::abs(w(0, 0)) < 1e-14);
            CHECK(std::abs(w(1, 1)) < 1e-14);
            CHECK(std::abs(w(0, 1) + w(1, 0)) < 1e-14);
        }
        {
            Sym3 s = rand_sym3(rng, 0.8);
            s = s + (2.0 + neg_part_magnitude(s)) * Sym3::identity();
            Mat3 l;
            for (double& x : l.a) x = rng.normal();
            const Mat3 w = angular_velocity_w(s, l, a, b);
            const Mat3 res = matmul(s.full(), w) + matmul(w, s.full()) - angular_rhs_h(s, l, a, b);
            for (double x : res.a) CHECK(std::abs(x) < 1e-10);
            for (int i = 0; i < 3; ++i)
                for (int j = 0; j < 3; ++j) CHECK(std::abs(w(i, j) + w(j, i)) < 1e-14);
        }
    }
    // S = I: SW + WS = 2W, so W = H/2.
    {
        Mat3 l;
        auto r2 = make_rng(5);
        for (double& x : l.a) x = r2.normal();
        const Sym3 id = Sym3::identity();
        const Mat3 w = angular_velocity_w(id, l, 1.3, -0.4);
        const Mat3 h = angular_rhs_h(id, l, 1.3, -0.4);
        for (int i = 0; i < 9; ++i) CHECK(std::abs(w.a[i] - 0.5 * h.a[i]) < 1e-12);
    }
    // degenerate invariants refused
    CHECK_THROWS_AS(angular_velocity_w(0.0 * Sym2::identity(), Mat2::identity(), 1.0, 0.0),
                    DegenerateInvariants);
}
