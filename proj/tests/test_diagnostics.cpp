#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <cstdio>
#include <fstream>

#include "doctest.h"
#include "evf/diagnostics.hpp"

using namespace evf;

namespace {
constexpr double kPi = 3.14159265358979323846;

AugmentedTrajectory short_minmax(const Model& m, const std::vector<TestFunction>& basis,
                                 double tau, long steps, std::uint64_t seed) {
    SchemeConfig cfg;
    cfg.tau = tau;
    cfg.n_steps = steps;
    cfg.tol_saddle = 3e-9;
    cfg.basis = basis;
    return Scheme(m, cfg).run(random_admissible_state(m, seed));
}
}  // namespace

TEST_CASE("default basis: 24 shapes, solenoidal velocities") {
    const Grid g({32, 2.0 * kPi});
    const auto basis = default_test_basis(g, 1.0);
    CHECK(basis.size() == 24);
    for (const TestFunction& tf : basis) {
        CHECK(tf.phi.solenoidal);
        const ScalarField d = div(tf.phi);
        for (double x : d.v) CHECK(std::abs(x) < 1e-12);
    }
    // the mixed third carries time dependence
    for (std::size_t i = 16; i < 24; ++i) CHECK(basis[i].tc == TestFunction::TimeCoef::cosine);
}

TEST_CASE("variational-inequality residual: reduction and equilibrium cases") {
    const Grid g({32, 2.0 * kPi});
    ModelLLZ m(g, {1.0});
    const auto basis = default_test_basis(g, 8.0 / 128);
    const AugmentedTrajectory traj = short_minmax(m, basis, 1.0 / 128, 8, 17);

    // zero test function reduces the lhs to the plain energy inequality
    TestFunction zero;
    zero.phi = VectorField(g);
    zero.phi.solenoidal = true;
    zero.sigma = MatField(g, false);
    const double lhs = evi_residual(m, traj, zero, traj.times.front(), traj.times.back());
    double expect = traj.energy.back() - traj.energy.front();
    for (std::size_t n = 1; n < traj.psi.size(); ++n) expect += traj.tau * traj.psi[n];
    CHECK(lhs == doctest::Approx(expect).epsilon(1e-13));
    CHECK(lhs <= 1e-12);  // energy inequality along an unforced trajectory

    // off-grid times are rejected
    CHECK_THROWS_AS(evi_residual(m, traj, zero, 0.5 * traj.tau, traj.times.back()), Misaligned);
    CHECK_THROWS_AS(evi_residual(m, traj, zero, traj.times.back(), traj.times.front()),
                    Misaligned);

    // full check over the basis
    const EviReport rep = evi_check(m, traj, basis, 1e-6 * (1.0 + traj.energy.front()), 2);
    CHECK(rep.pass);
    CHECK(rep.worst <= rep.tol);
}

TEST_CASE("equilibrium trajectory: lhs nonpositive for every shape") {
    const Grid g({32, 2.0 * kPi});
    ModelQ m(g, {1.0, 1.0, 0.5, 0.3});
    const auto basis = default_test_basis(g, 6.0 / 64);
    SchemeConfig cfg;
    cfg.tau = 1.0 / 64;
    cfg.n_steps = 6;
    cfg.basis = basis;
    const AugmentedTrajectory traj = Scheme(m, cfg).run(m.minimizer());
    const EviReport rep = evi_check(m, traj, basis, 1e-12, 1);
    CHECK(rep.pass);
}

TEST_CASE("weak probe is alpha-independent") {
    const Grid g({32, 2.0 * kPi});
    ModelLLZ m(g, {1.0});
    const auto basis = default_test_basis(g, 8.0 / 128);
    const AugmentedTrajectory traj = short_minmax(m, basis, 1.0 / 128, 8, 23);
    const WeakProbeReport rep = weak_solution_probe(m, traj, basis[3], {1.0, 0.1, 0.01});
    CHECK(rep.gap <= 1e-10 * (1.0 + std::abs(rep.extrapolated)));
    CHECK(std::abs(rep.extrapolated - rep.residual.front()) <=
          0.1 * (1e-12 + std::abs(rep.extrapolated)));
}

TEST_CASE("relative energy: trace form equals the generic Bregman form") {
    const Grid g({16, 2.0 * kPi});
    ModelQ m(g, {1.0, 0.8, 0.4, 0.25});
    for (int t = 0; t < 10; ++t) {
        const State u = random_admissible_state(m, 100 + t, 2, 0.25);
        const State ut = random_admissible_state(m, 200 + t, 2, 0.2);
        const double rg = relative_energy(m, u, m.energy(u), ut);
        const double rq = relative_energy_q(m, u, m.energy(u), ut);
        CHECK(rg == doctest::Approx(rq).epsilon(1e-11));
        CHECK(rg >= -1e-12);  // Bregman divergence of a convex energy
        // slack variable enters additively
        CHECK(relative_energy(m, u, m.energy(u) + 0.5, ut) == doctest::Approx(rg + 0.5));
    }
}

TEST_CASE("relative dissipation: grouped form equals the generic remainder") {
    const Grid g({16, 2.0 * kPi});
    ModelQ m(g, {1.0, 0.8, 0.4, 0.25});
    for (int t = 0; t < 10; ++t) {
        const State u = random_admissible_state(m, 300 + t, 2, 0.25);
        const State ut = random_admissible_state(m, 400 + t, 2, 0.2);
        const double wg = relative_dissipation(m, u, ut, 0.0);
        const double wq = relative_dissipation_q(m, u, ut, 0.0);
        CHECK(std::abs(wg - wq) <= 1e-10 * std::max(1.0, std::abs(wg)));
        CHECK(wg >= -1e-9 * std::max(1.0, std::abs(wg)));  // convexity of G
    }
}

TEST_CASE("manufactured solution is exact for the space-discrete system") {
    const Grid g({32, 2.0 * kPi});
    const ParamsS p{1.0, 0.9, 2.0};
    const ManufacturedS mf(g, p);
    ModelS m(g, p, mf.forcing());
    SchemeConfig cfg;
    cfg.mode = SchemeMode::baseline;
    cfg.tau = 1e-3;
    cfg.n_steps = 10;
    const AugmentedTrajectory traj = Scheme(m, cfg).run(mf.at(0.0));
    const GronwallReport rep = gronwall_weak_strong(
        m, traj, [&](double t) { return mf.at(t); }, [&](double t) { return mf.dt_at(t); });
    CHECK(rep.pass);
    for (double r : rep.resid) CHECK(std::abs(r) < 1e-10);  // forcing cancels exactly
    for (double r : rep.R) CHECK(std::abs(r) < 1e-10);      // trajectory tracks the target
}

TEST_CASE("Gronwall gate refuses near-singular strong states") {
    const Grid g({16, 2.0 * kPi});
    ModelQ m(g, {1.0, 1.0, 0.5, 0.3});
    SchemeConfig cfg;
    cfg.mode = SchemeMode::baseline;
    cfg.tau = 1e-3;
    cfg.n_steps = 2;
    const AugmentedTrajectory traj = Scheme(m, cfg).run(m.minimizer());
    auto bad = [&](double) {
        State s = m.minimizer();
        for (std::size_t i = 0; i < s.C.c[0].size(); ++i) s.C.c[0][i] = 1e-4;
        return s;
    };
    CHECK_THROWS_AS(gronwall_weak_strong(m, traj, bad, nullptr), GateViolation);
}

TEST_CASE("BV post-processing") {
    const BvReport a = bv_postprocess({3.0, 2.0, 2.0, 1.5});
    CHECK(a.tv == doctest::Approx(1.5));
    CHECK(a.monotone);
    const BvReport b = bv_postprocess({1.0, 2.0, 0.5});
    CHECK(b.tv == doctest::Approx(2.5));
    CHECK(!b.monotone);
    CHECK(b.upward_jumps == std::vector<std::size_t>{1});
}

TEST_CASE("Peterlin second-derivative form is indefinite") {
    // documented witness
    Sym2 b, gm;
    b(0, 0) = 1.0;
    b(1, 1) = 0.01;
    gm(0, 0) = 1.0;
    gm(1, 1) = 0.001;
    const double v = peterlin_form(b, gm);
    CHECK(v < -17.0);
    CHECK(v == doctest::Approx(-17.98).epsilon(1e-3));
    // positive direction exists too (indefinite, not concave)
    CHECK(peterlin_form(Sym2::identity(), Sym2::identity()) > -1e-12);
    // eta-corrections up to 10 do not restore nonnegativity
    for (double eta = 0.0; eta <= 10.0; eta += 0.5) CHECK(peterlin_form(b, gm, eta) < 0.0);
    // searched witness is at least as low and respects the same sweep
    const PeterlinWitness w = peterlin_nonconvexity_witness();
    CHECK(w.value <= v);
    CHECK(peterlin_form(w.b, w.g, 10.0) < 0.0);
}

TEST_CASE("diagnostics CSV writer") {
    const std::vector<CheckRecord> recs{{"alpha", "q", 1.25, 2.0, true}};
    write_diagnostics_csv("test_diag_tmp.csv", recs);
    std::ifstream f("test_diag_tmp.csv");
    std::string header, line;
    std::getline(f, header);
    std::getline(f, line);
    CHECK(header == "check,model,residual,tolerance,pass");
    CHECK(line == "alpha,q,1.25,2,1");
    std::remove("test_diag_tmp.csv");
}
