#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>

#include "doctest.h"
#include "evf/models.hpp"

using namespace evf;

namespace {

constexpr double kPi = 3.14159265358979323846;

// states with constant conformation c * I and zero velocity
State const_state(const Grid& g, double c) {
    State s;
    s.v = VectorField(g);
    s.v.solenoidal = true;
    s.C = MatField(g, false);
    for (std::size_t i = 0; i < s.C.c[0].size(); ++i) {
        s.C.c[0][i] = c;
        s.C.c[2][i] = c;
    }
    s.C.spd = c > 0;
    return s;
}

TestFunction zero_tf(const Grid& g) {
    TestFunction tf;
    tf.phi = VectorField(g);
    tf.phi.solenoidal = true;
    tf.sigma = MatField(g, false);
    return tf;
}

}  // namespace

TEST_CASE("hand-evaluated energy and dissipation densities") {
    const Grid g({16, 2.0 * kPi});
    const double area = 4.0 * kPi * kPi;
    const State s2 = const_state(g, 2.0);

    {
        ModelQ m(g, {1.0, 1.0, 0.5, 0.5});
        // density (1-beta) tr(B - I - log B) + (beta/2)|B - I|^2 at B = 2I
        CHECK(m.energy(s2) == doctest::Approx((1.5 - std::log(2.0)) * area).epsilon(1e-13));
        // density of the relaxation traces at B = 2I, beta = delta = 1/2
        CHECK(m.dissipation(s2, m.at_time(0.0)) == doctest::Approx(3.0 * area).epsilon(1e-13));
    }
    {
        ModelS m(g, {1.0, 1.0, 1.0});
        // density 1/2 (|F|^2 - |I|^2 - log det F^2) at F = 2I
        CHECK(m.energy(s2) == doctest::Approx((3.0 - std::log(4.0)) * area).epsilon(1e-13));
        // density (1/mu_p) |F - F^{-1}|^2 = (2 - 1/2)^2 * 2
        CHECK(m.dissipation(s2, m.at_time(0.0)) == doctest::Approx(4.5 * area).epsilon(1e-13));
    }
}

TEST_CASE("minimizer has zero energy and zero unforced dissipation") {
    const Grid g({16, 2.0 * kPi});
    ModelQ q(g, {1.0, 1.0, 0.5, 0.3});
    ModelS s(g, {1.0, 0.9, 2.0});
    ModelLLZ l(g, {1.0});
    for (const Model* m : {(const Model*)&q, (const Model*)&s, (const Model*)&l}) {
        const State u = m->minimizer();
        CHECK(m->energy(u) == 0.0);
        CHECK(m->dissipation(u, m->at_time(0.0)) == 0.0);
    }
}

TEST_CASE("energy is +infinity off the SPD cone for the symmetric models") {
    const Grid g({16, 2.0 * kPi});
    ModelQ q(g, {1.0, 1.0, 0.5, 0.3});
    const State bad = const_state(g, -1.0);
    CHECK(std::isinf(q.energy(bad)));
    CHECK_THROWS_AS(q.dissipation(bad, q.at_time(0.0)), OutsideDomain);
}

TEST_CASE("superlinearity probe: E(lambda s)/lambda increases") {
    const Grid g({16, 2.0 * kPi});
    ModelQ q(g, {1.0, 1.0, 0.5, 0.3});
    ModelS s(g, {1.0, 0.9, 2.0});
    ModelLLZ l(g, {1.0});
    for (const Model* m : {(const Model*)&q, (const Model*)&s, (const Model*)&l}) {
        const State u = random_admissible_state(*m, 21, 2, 0.2);
        double prev = -1;
        for (double lam : {1.0, 2.0, 4.0, 8.0, 16.0}) {
            State su = state_lincomb(lam, u, 0.0, u);
            if (!m->full_c()) {
                // scale the conformation in log space: C^lam stays SPD and
                // moves superlinearly away from the identity
                su.C = u.C;
                for (std::size_t i = 0; i < su.C.c[0].size(); ++i)
                    su.C.set(i, apply_fn(u.C.sym_at(i),
                                         [lam](double l) { return std::pow(l, lam); }));
            }
            const double ratio = m->energy(su) / lam;
            CHECK(ratio > prev);
            CHECK(std::isfinite(ratio));
            prev = ratio;
        }
    }
}

TEST_CASE("Fenchel suite at small trial count") {
    const Grid g({16, 2.0 * kPi});
    ModelQ q(g, {1.0, 1.0, 0.5, 0.3});
    ModelS s(g, {1.0, 0.9, 2.0});
    ModelLLZ l(g, {1.0});
    for (const Model* m : {(const Model*)&q, (const Model*)&s, (const Model*)&l}) {
        for (int t = 0; t < 20; ++t) {
            const State u = random_admissible_state(*m, 300 + 7 * t);
            CHECK(fenchel_roundtrip_error(*m, u) < 1e-10);
            CHECK(fenchel_young_gap(*m, u) < 1e-9);
        }
    }
}

TEST_CASE("regularity weight at the zero test function") {
    const Grid g({16, 2.0 * kPi});
    const TestFunctionData tfd = prepare_test_function(zero_tf(g));
    {
        ModelQ m(g, {1.0, 1.0, 0.5, 1.0});  // beta + delta - 3 delta beta = 0
        CHECK(m.reg_weight_k(tfd, 1.0) == 0.0);
    }
    {
        ModelQ m(g, {1.0, 1.0, 0.5, 2.0});  // (0.5 + 2 - 3)_- = 0.5 -> 2*0.5/0.5
        CHECK(m.reg_weight_k(tfd, 1.0) == doctest::Approx(2.0).epsilon(1e-14));
    }
    {
        ModelS m(g, {1.0, 1.0, 2.0});
        CHECK(m.reg_weight_k(tfd, 1.0) == 0.0);
    }
    {
        ModelLLZ m(g, {1.0});
        CHECK(m.reg_weight_k(tfd, 1.0) == 0.0);
    }
}

TEST_CASE("Hessian of the model-Q energy in closed form") {
    const Grid g({16, 2.0 * kPi});
    const double beta = 0.4;
    ModelQ m(g, {1.0, 1.0, beta, 0.3});
    const State u = random_admissible_state(m, 33);
    State dir = random_admissible_state(m, 34, 2, 0.1);
    const DualState h = m.hessian_apply(u, dir);
    for (std::size_t i = 0; i < u.C.c[0].size(); i += 37) {
        const Sym2 b = u.C.sym_at(i);
        const Sym2 dc = dir.C.sym_at(i);
        const Sym2 bi = spd_inv(b);
        const Sym2 expect = (1.0 - beta) * sym_part(matmul(mul_ss(bi, dc), bi.full())) +
                            beta * dc;
        const Sym2 got = h.tau.sym_at(i);
        for (int k = 0; k < 3; ++k) CHECK(std::abs(expect.p[k] - got.p[k]) < 1e-11);
    }
}

TEST_CASE("parameter validation") {
    const Grid g({16, 2.0 * kPi});
    CHECK_THROWS_AS(ModelQ(g, {1.0, 1.0, 1.5, 0.3}), ConfigError);  // beta out of (0,1)
    CHECK_THROWS_AS(ModelQ(g, {1.0, 0.0, 0.5, 0.3}), ConfigError);  // alpha = 0
    CHECK_THROWS_AS(ModelQ(g, {-1.0, 1.0, 0.5, 0.3}), ConfigError);
    CHECK_THROWS_AS(ModelS(g, {1.0, 1.0, 0.0}), ConfigError);
    CHECK_THROWS_AS(ModelLLZ(g, {0.0}), ConfigError);
}

TEST_CASE("forcing-bound guards") {
    const Grid g({16, 2.0 * kPi});
    // model Q rejects conformation sources with sup norm > 1/2
    Forcing big;
    big.conformation = [](const Grid& gr, double) {
        MatField s(gr, false);
        for (std::size_t i = 0; i < s.c[0].size(); ++i) {
            s.c[0][i] = 0.6;
            s.c[2][i] = 0.6;
        }
        return s;
    };
    ModelQ mq(g, {1.0, 1.0, 0.5, 0.3}, big);
    CHECK_THROWS_AS(mq.at_time(0.0), ConfigError);
    // the quadratic model rejects conformation sources outright
    CHECK_THROWS_AS(ModelLLZ(g, {1.0}, big), ConfigError);
}

TEST_CASE("operator identity and convexity on random test functions") {
    const Grid g({32, 2.0 * kPi});
    ModelQ q(g, {1.0, 1.0, 0.5, 0.3});
    ModelS s(g, {1.0, 0.9, 2.0});
    ModelLLZ l(g, {1.0});
    for (const Model* m : {(const Model*)&q, (const Model*)&s, (const Model*)&l}) {
        for (int t = 0; t < 4; ++t) {
            TestFunction tf;
            tf.phi = leray_project(random_vector_field(g, 900 + t, 2, 0.3));
            tf.sigma = random_sym_field(g, 950 + t, 2, 0.3);
            CHECK(check_adiss(*m, 0.0, tf) < 1e-8);
            CHECK(check_convexity(*m, 0.0, tf, 30, 1000 + t) <= 1e-9);
        }
    }
}

TEST_CASE("state algebra: promotion rules") {
    const Grid g({16, 2.0 * kPi});
    ModelLLZ l(g, {1.0});
    ModelQ q(g, {1.0, 1.0, 0.5, 0.3});
    const State full = random_admissible_state(l, 1);
    const State sym = random_admissible_state(q, 2);
    // full += sym promotes; sym += full is rejected
    State a = full;
    state_axpy(a, 0.5, sym);
    CHECK(a.C.full);
    State b = sym;
    CHECK_THROWS_AS(state_axpy(b, 0.5, full), GridMismatch);
}
