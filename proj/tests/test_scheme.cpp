#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "evf/diagnostics.hpp"

using namespace evf;

namespace {
constexpr double kPi = 3.14159265358979323846;

SchemeConfig minmax_cfg(const Grid& g, double tau, long steps, std::uint64_t seed) {
    SchemeConfig cfg;
    cfg.tau = tau;
    cfg.n_steps = steps;
    cfg.tol_saddle = 3e-9;
    cfg.seed = seed;
    cfg.basis = default_test_basis(g, tau * steps);
    return cfg;
}

bool states_equal(const State& a, const State& b) {
    for (std::size_t i = 0; i < a.v.x.size(); ++i)
        if (a.v.x[i] != b.v.x[i] || a.v.y[i] != b.v.y[i]) return false;
    for (int k = 0; k < a.C.ncomp(); ++k)
        for (std::size_t i = 0; i < a.C.c[k].size(); ++i)
            if (a.C.c[k][i] != b.C.c[k][i]) return false;
    return true;
}
}  // namespace

TEST_CASE("feasibility bisection: trivial branches") {
    const Grid g({16, 2.0 * kPi});
    ModelQ m(g, {1.0, 1.0, 0.5, 0.3});
    const StepData sd = m.at_time(0.0);
    // Phi = 0 -> the minimizer, objective 0, alpha = 1
    DualState zero;
    zero.w = VectorField(g);
    zero.tau = MatField(g, false);
    const auto [alpha, state] = feasibility_alpha(m, zero, 1.0, sd, 0.01);
    CHECK(alpha == 1.0);
    CHECK(m.energy(state) == 0.0);
    // large target -> unconstrained branch alpha = 1
    const DualState z = m.subdiff_energy(random_admissible_state(m, 5));
    const auto [alpha2, state2] = feasibility_alpha(m, z, 1e12, sd, 0.01);
    CHECK(alpha2 == 1.0);
    // small target -> constrained branch, feasible within the bisection gap
    const double target = 0.25 * (m.energy(state2) + 0.01 * m.dissipation(state2, sd));
    const auto [alpha3, state3] = feasibility_alpha(m, z, target, sd, 0.01);
    CHECK(alpha3 < 1.0);
    CHECK(m.energy(state3) + 0.01 * m.dissipation(state3, sd) <= target + 1e-10);
}

TEST_CASE("scheme configuration guards") {
    const Grid g({16, 2.0 * kPi});
    ModelLLZ m(g, {1.0});
    SchemeConfig cfg;
    cfg.tau = -1.0;
    CHECK_THROWS_AS(Scheme(m, cfg), ConfigError);
    SchemeConfig cfg2;  // minmax without a basis
    CHECK_THROWS_AS(Scheme(m, cfg2), ConfigError);
}

TEST_CASE("equilibrium is an exact fixed point of both steppers") {
    const Grid g({32, 2.0 * kPi});
    ModelQ m(g, {1.0, 1.0, 0.5, 0.3});
    const State u0 = m.minimizer();
    for (SchemeMode mode : {SchemeMode::baseline, SchemeMode::minmax}) {
        SchemeConfig cfg = minmax_cfg(g, 1.0 / 64, 20, 0);
        cfg.mode = mode;
        const Scheme sch(m, cfg);
        const AugmentedTrajectory traj = sch.run(u0);
        for (double e : traj.energy) CHECK(std::abs(e) <= 1e-12);
        CHECK(states_equal(traj.states.front(), traj.states.back()));
    }
}

TEST_CASE("discrete energy inequality holds step by step") {
    const Grid g({32, 2.0 * kPi});
    auto f = make_mode_forcing({{1, 0, 0.3, 0.0, 2.0, 0.5}});
    ModelLLZ m(g, {1.0}, f);
    SchemeConfig cfg = minmax_cfg(g, 1.0 / 128, 32, 3);
    const Scheme sch(m, cfg);
    const AugmentedTrajectory traj = sch.run(random_admissible_state(m, 3));
    for (std::size_t i = 1; i < traj.energy.size(); ++i) {
        CHECK(traj.energy[i] + cfg.tau * traj.psi[i] <=
              traj.energy[i - 1] + cfg.tau * traj.c_psi[i] + 1e-12);
        CHECK(traj.energy[i] >= m.energy(traj.states[i]) - 1e-12);
    }
}

TEST_CASE("semi-flow (restart) property is bitwise") {
    const Grid g({32, 2.0 * kPi});
    ModelS m(g, {1.0, 0.9, 2.0});
    SchemeConfig cfg = minmax_cfg(g, 1.0 / 128, 12, 9);
    const Scheme sch(m, cfg);
    const State u0 = random_admissible_state(m, 9);
    const AugmentedTrajectory full = sch.run(u0);

    SchemeConfig head = cfg;
    head.n_steps = 7;
    const AugmentedTrajectory a = Scheme(m, head).run(u0);
    SchemeConfig tail = cfg;
    tail.n_steps = 5;
    tail.start_step = 7;
    const AugmentedTrajectory b = Scheme(m, tail).run(a.states.back());
    CHECK(states_equal(full.states.back(), b.states.back()));
    CHECK(full.energy.back() == b.energy.back());
    CHECK(full.times.back() == b.times.back());
}

TEST_CASE("baseline stepper preserves positive definiteness on benign data") {
    const Grid g({32, 2.0 * kPi});
    ModelS m(g, {1.0, 0.9, 2.0});
    SchemeConfig cfg;
    cfg.mode = SchemeMode::baseline;
    cfg.tau = 1.0 / 128;
    cfg.n_steps = 32;
    const Scheme sch(m, cfg);
    const AugmentedTrajectory traj = sch.run(random_admissible_state(m, 13));
    for (const State& s : traj.states)
        for (std::size_t i = 0; i < s.C.c[0].size(); ++i)
            CHECK(min_eigenvalue(s.C.sym_at(i)) > 0);
}

TEST_CASE("energy CSV columns and determinism") {
    const Grid g({16, 2.0 * kPi});
    ModelLLZ m(g, {1.0});
    SchemeConfig cfg = minmax_cfg(g, 1.0 / 64, 4, 1);
    const AugmentedTrajectory t1 = Scheme(m, cfg).run(random_admissible_state(m, 1));
    const AugmentedTrajectory t2 = Scheme(m, cfg).run(random_admissible_state(m, 1));
    write_energy_csv("test_scheme_a.csv", t1);
    write_energy_csv("test_scheme_b.csv", t2);
    std::ifstream fa("test_scheme_a.csv"), fb("test_scheme_b.csv");
    std::stringstream sa, sb;
    sa << fa.rdbuf();
    sb << fb.rdbuf();
    CHECK(sa.str() == sb.str());
    CHECK(sa.str().rfind("t,E,energy_of_state,dissipation,c_psi,tv_running", 0) == 0);
    std::remove("test_scheme_a.csv");
    std::remove("test_scheme_b.csv");
}
