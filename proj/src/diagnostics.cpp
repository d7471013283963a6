#include "evf/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace evf {

namespace {

constexpr double kPi = 3.14159265358979323846;

ScalarField sampled(const Grid& g, const std::function<double(double, double)>& f) {
    ScalarField s(g);
    const int n = g.n();
    const double h = g.L() / n;
    for (int iy = 0; iy < n; ++iy)
        for (int ix = 0; ix < n; ++ix) s.v[static_cast<std::size_t>(iy) * n + ix] = f(ix * h, iy * h);
    return s;
}

// Solenoidal velocity shape from a stream function (curl is evaluated
// spectrally, so the discrete divergence vanishes exactly).
VectorField from_stream(const Grid& g, const std::function<double(double, double)>& psi) {
    const ScalarField p = sampled(g, psi);
    VectorField v(g);
    g.deriv(p.v, v.x, 1);
    g.deriv(p.v, v.y, 0);
    for (double& y : v.y) y = -y;
    v.solenoidal = true;
    return v;
}

}  // namespace

std::vector<TestFunction> default_test_basis(const Grid& g, double horizon) {
    const double q = 2.0 * kPi / g.L();
    std::vector<TestFunction> basis;

    const std::function<double(double, double)> streams[8] = {
        [q](double x, double) { return 0.3 * std::sin(q * x); },
        [q](double x, double) { return 0.3 * std::cos(q * x); },
        [q](double, double y) { return 0.3 * std::sin(q * y); },
        [q](double, double y) { return 0.3 * std::cos(q * y); },
        [q](double x, double y) { return 0.3 * std::sin(q * (x + y)); },
        [q](double x, double y) { return 0.3 * std::cos(q * (x - y)); },
        [q](double x, double y) { return 0.15 * std::sin(q * (2 * x + y)); },
        [q](double x, double y) { return 0.15 * std::cos(q * (x - 2 * y)); },
    };
    for (const auto& psi : streams) {
        TestFunction tf;
        tf.phi = from_stream(g, psi);
        tf.sigma = MatField(g, /*full=*/false);
        basis.push_back(std::move(tf));
    }

    // 8 stress shapes (xx, xy, yy components), including definite constants
    // of both signs.
    using F2 = std::function<double(double, double)>;
    const F2 zero = [](double, double) { return 0.0; };
    struct SigmaSpec {
        F2 xx, xy, yy;
    };
    const SigmaSpec sigmas[8] = {
        {[](double, double) { return 0.5; }, zero, [](double, double) { return 0.5; }},
        {[](double, double) { return -0.4; }, zero, [](double, double) { return -0.4; }},
        {[](double, double) { return 0.5; }, zero, [](double, double) { return -0.3; }},
        {zero, [](double, double) { return 0.4; }, zero},
        {[q](double x, double) { return 0.3 * std::cos(q * x); }, zero,
         [q](double x, double) { return 0.3 * std::cos(q * x); }},
        {zero, [q](double, double y) { return 0.3 * std::sin(q * y); }, zero},
        {[q](double x, double y) { return 0.4 * std::cos(q * (x + y)); }, zero,
         [q](double x, double y) { return -0.2 * std::cos(q * (x + y)); }},
        {[q](double x, double y) { return 0.25 * std::sin(q * (x - y)); }, zero,
         [q](double x, double y) { return -0.25 * std::sin(q * (x - y)); }},
    };
    for (const SigmaSpec& sp : sigmas) {
        TestFunction tf;
        tf.phi = VectorField(g);
        tf.phi.solenoidal = true;
        tf.sigma = MatField(g, /*full=*/false);
        tf.sigma.c[0] = sampled(g, sp.xx).v;
        tf.sigma.c[1] = sampled(g, sp.xy).v;
        tf.sigma.c[2] = sampled(g, sp.yy).v;
        basis.push_back(std::move(tf));
    }

    // 8 mixed shapes with time-dependent coefficients.
    for (int k = 0; k < 8; ++k) {
        TestFunction tf;
        tf.phi = from_stream(g, streams[k]);
        for (double& x : tf.phi.x) x *= 0.5;
        for (double& y : tf.phi.y) y *= 0.5;
        tf.sigma = MatField(g, /*full=*/false);
        tf.sigma.c[0] = sampled(g, sigmas[k].xx).v;
        tf.sigma.c[1] = sampled(g, sigmas[k].xy).v;
        tf.sigma.c[2] = sampled(g, sigmas[k].yy).v;
        for (int c = 0; c < 3; ++c)
            for (double& x : tf.sigma.c[c]) x *= 0.5;
        tf.tc = TestFunction::TimeCoef::cosine;
        tf.omega = kPi * (k + 1) / horizon;
        basis.push_back(std::move(tf));
    }
    return basis;
}

// ---------------------------------------------------------------------------
// Variational-inequality residual.

namespace {

struct ShapeSeries {
    std::vector<double> p;  // <U^n, shape>, n = 0..N
    std::vector<double> a;  // <A^n(U^n), shape>, n = 1..N (index 0 unused)
};

std::vector<ShapeSeries> build_series(const Model& m, const AugmentedTrajectory& traj,
                                      const std::vector<TestFunctionData>& tfds) {
    const std::size_t nsteps = traj.states.size();
    std::vector<ShapeSeries> out(tfds.size());
    for (auto& s : out) {
        s.p.assign(nsteps, 0.0);
        s.a.assign(nsteps, 0.0);
    }
    for (std::size_t n = 0; n < nsteps; ++n) {
        for (std::size_t j = 0; j < tfds.size(); ++j)
            out[j].p[n] = m.pair_state(traj.states[n], tfds[j]);
        if (n > 0) {
            const StepData sd = m.time_average(traj.times[n - 1], traj.times[n]);
            const AFlux flux = m.assemble_flux(traj.states[n], sd);
            for (std::size_t j = 0; j < tfds.size(); ++j)
                out[j].a[n] = flux_pairing(flux, tfds[j]);
        }
    }
    return out;
}

// lhs over (times[mi], times[Mi]] for one shape; with_k switches the energy
// defect weight term on (the weak probe runs with it off, where it would
// multiply E - E(U) = 0 at step resolution).
double lhs_from_series(const Model& m, const AugmentedTrajectory& traj,
                       const TestFunctionData& tfd, const ShapeSeries& se, double scale,
                       std::size_t mi, std::size_t Mi, bool with_k) {
    const double tau = traj.tau;
    auto theta = [&](std::size_t n) { return scale * tfd.tf.coef(traj.times[n]); };
    double lhs = (traj.energy[Mi] - theta(Mi - 1) * se.p[Mi]) -
                 (traj.energy[mi] - theta(mi) * se.p[mi]);
    for (std::size_t n = mi + 1; n + 1 <= Mi; ++n)
        if (n < Mi) lhs += se.p[n] * (theta(n) - theta(n - 1));
    for (std::size_t n = mi + 1; n <= Mi; ++n) {
        lhs += tau * (traj.psi[n] - theta(n - 1) * se.a[n]);
        if (with_k)
            lhs += tau * m.reg_weight_k(tfd, theta(n - 1)) *
                   (traj.energy[n] - traj.energy[n - 1] - tau * traj.c_psi[n]);
    }
    return lhs;
}

std::size_t aligned_index(const AugmentedTrajectory& traj, double t, const char* who) {
    for (std::size_t i = 0; i < traj.times.size(); ++i)
        if (std::abs(traj.times[i] - t) <= 1e-9 * std::max(1.0, std::abs(t))) return i;
    throw Misaligned(std::string(who) + ": time not on the stored grid");
}

}  // namespace

double evi_residual(const Model& m, const AugmentedTrajectory& traj, const TestFunction& tf,
                    double s, double t) {
    const std::size_t mi = aligned_index(traj, s, "evi_residual");
    const std::size_t Mi = aligned_index(traj, t, "evi_residual");
    if (mi >= Mi) throw Misaligned("evi_residual: requires s < t");
    std::vector<TestFunctionData> tfds{prepare_test_function(tf)};
    const auto series = build_series(m, traj, tfds);
    return lhs_from_series(m, traj, tfds[0], series[0], 1.0, mi, Mi, /*with_k=*/true);
}

EviReport evi_check(const Model& m, const AugmentedTrajectory& traj,
                    const std::vector<TestFunction>& basis, double evi_tol, int stride) {
    EviReport rep;
    rep.tol = evi_tol;
    rep.basis_description =
        std::to_string(basis.size()) + " shapes, stride " + std::to_string(stride);
    std::vector<TestFunctionData> tfds;
    for (const TestFunction& tf : basis) tfds.push_back(prepare_test_function(tf));
    const auto series = build_series(m, traj, tfds);

    std::vector<std::size_t> marks;
    const std::size_t last = traj.states.size() - 1;
    for (std::size_t i = 0; i < last; i += static_cast<std::size_t>(stride)) marks.push_back(i);
    marks.push_back(last);

    rep.worst = -std::numeric_limits<double>::infinity();
    rep.pass = true;
    for (std::size_t j = 0; j < tfds.size(); ++j)
        for (std::size_t im = 0; im < marks.size(); ++im)
            for (std::size_t it = im + 1; it < marks.size(); ++it) {
                EviEntry e;
                e.shape = static_cast<int>(j);
                e.s = traj.times[marks[im]];
                e.t = traj.times[marks[it]];
                e.lhs = lhs_from_series(m, traj, tfds[j], series[j], 1.0, marks[im], marks[it],
                                        /*with_k=*/true);
                e.pass = e.lhs <= evi_tol;
                rep.worst = std::max(rep.worst, e.lhs);
                rep.pass = rep.pass && e.pass;
                rep.entries.push_back(e);
            }
    return rep;
}

WeakProbeReport weak_solution_probe(const Model& m, const AugmentedTrajectory& traj,
                                    const TestFunction& theta, const std::vector<double>& alphas) {
    WeakProbeReport rep;
    rep.alphas = alphas;
    std::vector<TestFunctionData> tfds{prepare_test_function(theta)};
    const auto series = build_series(m, traj, tfds);
    const std::size_t last = traj.states.size() - 1;
    for (double a : alphas) {
        const double plus =
            lhs_from_series(m, traj, tfds[0], series[0], 1.0 / a, 0, last, /*with_k=*/false);
        const double minus =
            lhs_from_series(m, traj, tfds[0], series[0], -1.0 / a, 0, last, /*with_k=*/false);
        rep.residual.push_back(0.5 * a * (plus - minus));
    }
    rep.extrapolated = rep.residual.empty() ? 0.0 : rep.residual.back();
    if (!rep.residual.empty()) {
        const auto [mn, mx] = std::minmax_element(rep.residual.begin(), rep.residual.end());
        rep.gap = *mx - *mn;
    }
    return rep;
}

// ---------------------------------------------------------------------------
// Relative energy / relative dissipation.

double relative_energy(const Model& m, const State& u, double e_slack, const State& ut) {
    const DualState z = m.subdiff_energy(ut);
    const State diff = state_lincomb(1.0, u, -1.0, ut);
    const double pair = inner(z.w, diff.v) + inner(z.tau, diff.C);
    return e_slack - m.energy(ut) - pair;
}

double relative_energy_q(const ModelQ& m, const State& u, double e_slack, const State& ut) {
    const double beta = m.params().beta;
    double acc = 0;
    for (std::size_t i = 0; i < u.v.x.size(); ++i) {
        const double dvx = u.v.x[i] - ut.v.x[i], dvy = u.v.y[i] - ut.v.y[i];
        acc += 0.5 * (dvx * dvx + dvy * dvy);
        const Sym2 b = u.C.sym_at(i), bt = ut.C.sym_at(i);
        const Sym2 db = b - bt;
        acc += 0.5 * beta * ddot(db, db);
        const Sym2 bti = spd_inv(bt);
        acc += (1.0 - beta) * (ddot(bti, b) - 2.0 - (trace_log(b) - trace_log(bt)));
    }
    return e_slack - m.energy(u) + acc * m.grid().cell_area();
}

double relative_dissipation(const Model& m, const State& u, const State& ut, double t) {
    if (m.full_c())
        throw ConfigError("relative_dissipation: full-layout conformation not supported");
    TestFunction tf;
    const DualState z = m.subdiff_energy(ut);
    tf.phi = z.w;
    tf.sigma = z.tau;
    const TestFunctionData tfd = prepare_test_function(tf);
    const double kw = m.reg_weight_k(tfd, 1.0);
    const StepData sd = m.at_time(t);
    auto g = [&](const State& s) {
        return m.dissipation(s, sd) - flux_pairing(m.assemble_flux(s, sd), tfd) +
               kw * m.energy(s);
    };
    const State diff = state_lincomb(1.0, u, -1.0, ut);
    const double dg = m.d_dissipation(ut, diff, sd) -
                      flux_pairing(m.assemble_flux_dir(ut, diff), tfd) +
                      kw * (inner(z.w, diff.v) + inner(z.tau, diff.C));
    return g(u) - g(ut) - dg;
}

double relative_dissipation_q(const ModelQ& m, const State& u, const State& ut, double t) {
    (void)t;  // forcing and sources are affine in the state, so they drop
              // out of the second-order remainder
    const double beta = m.params().beta, alpha = m.params().alpha, dl = m.params().delta;
    const Grid& g = m.grid();
    // regularity weight at the strong state's energy derivative
    TestFunction tfw;
    const DualState z = m.subdiff_energy(ut);
    tfw.phi = z.w;
    tfw.sigma = z.tau;
    const double kw = m.reg_weight_k(prepare_test_function(tfw), 1.0);

    const State diff = state_lincomb(1.0, u, -1.0, ut);
    const MatField gdv = grad_vec(diff.v);
    const MatField gvt = grad_vec(ut.v);
    // D = DE_B(Bt) and its spatial derivatives
    MatField dfield(g, /*full=*/false);
    for (std::size_t i = 0; i < u.v.x.size(); ++i) {
        const Eig<2> e = eig_sym(ut.C.sym_at(i));
        dfield.set(i, apply_eig(e, [beta](double b) {
                       return (1.0 - beta) * (1.0 - 1.0 / b) + beta * (b - 1.0);
                   }));
    }
    MatField ddx(g, false), ddy(g, false);
    for (int k = 0; k < 3; ++k) {
        g.deriv(dfield.c[k], ddx.c[k], 0);
        g.deriv(dfield.c[k], ddy.c[k], 1);
    }

    const Sym2 id = Sym2::identity();
    double acc = 0;
    for (std::size_t i = 0; i < u.v.x.size(); ++i) {
        const Mat2 ldv = gdv.at(i);
        const Sym2 b = u.C.sym_at(i), bt = ut.C.sym_at(i);
        const Sym2 db = b - bt;
        const Sym2 db2 = square(db);
        const Sym2 bi = spd_inv(b), bti = spd_inv(bt);
        const Sym2 d = dfield.sym_at(i);

        // (1) viscous
        acc += m.params().mu * ddot(ldv, ldv);
        // (2) relaxation Bregman of (1-beta) tr(B - 2I + B^{-1})
        acc += (1.0 - beta) *
               (trace(bi) - 2.0 * trace(bti) + trace(matmul(mul_ss(bti, b), bti.full())));
        // (3) quadratic relaxation
        acc += (beta + dl * (1.0 - beta)) * ddot(db, db);
        // (4) cubic relaxation remainder
        acc += dl * beta * ddot(b + 2.0 * bt - 2.0 * id, db2);
        // (5) convection/stress stretching against grad vt
        const Mat2 lvt = gvt.at(i);
        const double dvx = diff.v.x[i], dvy = diff.v.y[i];
        acc += dvx * dvx * lvt(0, 0) + dvx * dvy * (lvt(0, 1) + lvt(1, 0)) + dvy * dvy * lvt(1, 1);
        acc -= alpha * beta * ddot(db2, sym_part(lvt));
        // (6) transport remainder against grad D
        acc += dvx * ddot(db, ddx.sym_at(i)) + dvy * ddot(db, ddy.sym_at(i));
        // (7) rotation/stretching remainder against D
        acc += ddot(2.0 * sym_prod(skw_part(ldv), db) + alpha * sym_prod(sym_part(ldv).full(), db),
                    d);
        // (8) cubic operator remainder
        acc -= dl * ddot(db2, d);
    }
    double w = acc * g.cell_area();
    // (9) energy Bregman times the regularity weight
    w += kw * relative_energy(m, u, m.energy(u), ut);
    return w;
}

// ---------------------------------------------------------------------------
// Gronwall weak-strong comparison.

GronwallReport gronwall_weak_strong(const Model& m, const AugmentedTrajectory& traj,
                                    const std::function<State(double)>& strong,
                                    const std::function<State(double)>& strong_dt) {
    if (m.full_c())
        throw ConfigError("gronwall_weak_strong: full-layout conformation not supported");
    GronwallReport rep;
    const std::size_t nt = traj.times.size();
    rep.times = traj.times;

    std::vector<State> st(nt);
    for (std::size_t i = 0; i < nt; ++i) {
        st[i] = strong(traj.times[i]);
        for (std::size_t node = 0; node < st[i].C.c[0].size(); ++node)
            if (det(st[i].C.sym_at(node)) < 1e-3)
                throw GateViolation(
                    "gronwall_weak_strong: strong trajectory violates det >= 1e-3 gate");
    }
    auto dstrong = [&](std::size_t i) {
        if (strong_dt) return strong_dt(traj.times[i]);
        // centered differences on the stored grid, one-sided at the ends
        const std::size_t a = i == 0 ? 0 : i - 1;
        const std::size_t b = i + 1 < nt ? i + 1 : i;
        return state_lincomb(1.0 / (traj.times[b] - traj.times[a]), st[b],
                             -1.0 / (traj.times[b] - traj.times[a]), st[a]);
    };

    rep.R.resize(nt);
    rep.K.resize(nt);
    rep.resid.resize(nt);
    for (std::size_t i = 0; i < nt; ++i) {
        rep.R[i] = relative_energy(m, traj.states[i], traj.energy[i], st[i]);
        TestFunction tfw;
        const DualState z = m.subdiff_energy(st[i]);
        tfw.phi = z.w;
        tfw.sigma = z.tau;
        rep.K[i] = m.reg_weight_k(prepare_test_function(tfw), 1.0);

        const State diff = state_lincomb(1.0, traj.states[i], -1.0, st[i]);
        const DualState eta = m.hessian_apply(st[i], diff);
        TestFunction tfe;
        tfe.phi = eta.w;
        tfe.phi.solenoidal = true;
        tfe.sigma = eta.tau;
        const TestFunctionData tfd = prepare_test_function(tfe);
        const State dt = dstrong(i);
        const StepData sd = m.at_time(traj.times[i]);
        const double val = inner(dt.v, tfe.phi) + inner(dt.C, tfe.sigma) +
                           flux_pairing(m.assemble_flux(st[i], sd), tfd);
        rep.resid[i] = std::abs(val);
    }

    // envelope by trapezoidal quadrature: e^{Kint}(R0 + int resid e^{-Kint})
    rep.envelope.resize(nt);
    double kint = 0, fint = 0;
    rep.envelope[0] = rep.R[0];
    double prev_kint = 0;
    for (std::size_t i = 1; i < nt; ++i) {
        const double dt = rep.times[i] - rep.times[i - 1];
        kint += 0.5 * dt * (rep.K[i - 1] + rep.K[i]);
        fint += 0.5 * dt *
                (rep.resid[i - 1] * std::exp(-prev_kint) + rep.resid[i] * std::exp(-kint));
        prev_kint = kint;
        rep.envelope[i] = std::exp(kint) * (rep.R[0] + fint);
    }
    rep.worst_margin = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < nt; ++i)
        rep.worst_margin = std::max(rep.worst_margin, rep.R[i] - rep.envelope[i]);
    rep.pass = rep.worst_margin <= 1e-10 * (1.0 + rep.R[0]) + 1e-12;
    return rep;
}

// ---------------------------------------------------------------------------

BvReport bv_postprocess(const std::vector<double>& e) {
    BvReport rep;
    for (std::size_t i = 1; i < e.size(); ++i) {
        rep.tv += std::abs(e[i] - e[i - 1]);
        if (e[i] > e[i - 1]) rep.upward_jumps.push_back(i);
    }
    rep.monotone = rep.upward_jumps.empty();
    return rep;
}

// ---------------------------------------------------------------------------

double peterlin_form(const Sym2& b, const Sym2& g, double eta) {
    const Sym2 bi = spd_inv(b);
    const Sym2 bigbi = sym_part(matmul(mul_ss(bi, g), bi.full()));
    const Sym2 x = sym_part(matmul(mul_ss(bigbi, g), bi.full()));  // B^-1 G B^-1 G B^-1
    double v = -2.0 * trace(g) * trace(bigbi) + 2.0 * trace(b) * trace(x);
    if (eta != 0.0) {
        const Mat2 big = mul_ss(bi, g);
        v += eta * trace(matmul(big, big));
    }
    return v;
}

PeterlinWitness peterlin_nonconvexity_witness() {
    PeterlinWitness w;
    w.b(0, 0) = 1.0;
    w.b(1, 1) = 0.01;
    w.g(0, 0) = 1.0;
    w.g(1, 1) = 0.001;
    w.value = peterlin_form(w.b, w.g);
    // Deterministic pattern search for an even lower value.  The form is
    // homogeneous of degree -1 in B, so it is unbounded below; the search is
    // confined to a compact SPD box and to points where the form stays
    // negative under the eta * tr((B^-1 G)^2) correction up to eta = 10
    // (which keeps the witness meaningful for the whole correction sweep;
    // the form is linear in eta, so the endpoint check suffices).
    auto admissible = [](const Sym2& b, const Sym2& g) {
        for (double x : b.p)
            if (std::abs(x) > 4.0) return false;
        for (double x : g.p)
            if (std::abs(x) > 4.0) return false;
        return min_eigenvalue(b) > 5e-3 && peterlin_form(b, g, 10.0) < 0.0;
    };
    double step = 0.25;
    for (int round = 0; round < 40; ++round) {
        bool improved = false;
        double* coords[5] = {&w.b.p[0], &w.b.p[2], &w.g.p[0], &w.g.p[1], &w.g.p[2]};
        for (double* c : coords)
            for (double sgn : {1.0, -1.0}) {
                const double save = *c;
                *c = save * (1.0 + sgn * step) + (save == 0.0 ? sgn * step : 0.0);
                const double v = admissible(w.b, w.g) ? peterlin_form(w.b, w.g)
                                                      : std::numeric_limits<double>::infinity();
                if (v < w.value) {
                    w.value = v;
                    improved = true;
                    continue;
                }
                *c = save;
            }
        if (!improved) step *= 0.5;
        if (step < 1e-6) break;
    }
    return w;
}

// ---------------------------------------------------------------------------
// Manufactured Neo-Hookean solution.

ManufacturedS::ManufacturedS(const Grid& g, ParamsS params, double amp_v, double amp_c,
                             double omega)
    : g_(&g),
      base_(std::make_shared<ModelS>(g, params)),
      amp_v_(amp_v),
      amp_c_(amp_c),
      omega_(omega) {
    const double q = 2.0 * kPi / g.L();
    vshape_ = from_stream(g, [q](double x, double y) {
        return std::sin(q * x) + 0.5 * std::cos(q * y) + 0.3 * std::sin(q * (x + y));
    });
    cshape_ = MatField(g, /*full=*/false);
    cshape_.c[0] = sampled(g, [q](double x, double) { return std::cos(q * x); }).v;
    cshape_.c[1] = sampled(g, [q](double, double y) { return 0.4 * std::sin(q * y); }).v;
    cshape_.c[2] = sampled(g, [q](double x, double y) { return 0.5 * std::cos(q * (x - y)); }).v;
}

State ManufacturedS::at(double t) const {
    const double av = amp_v_ * std::cos(omega_ * t);
    const double ac = amp_c_ * std::cos(0.7 * omega_ * t);
    State s;
    s.v = VectorField(*g_);
    s.v.solenoidal = true;
    for (std::size_t i = 0; i < s.v.x.size(); ++i) {
        s.v.x[i] = av * vshape_.x[i];
        s.v.y[i] = av * vshape_.y[i];
    }
    s.C = MatField(*g_, /*full=*/false);
    for (std::size_t i = 0; i < s.C.c[0].size(); ++i) {
        s.C.c[0][i] = 1.0 + ac * cshape_.c[0][i];
        s.C.c[1][i] = ac * cshape_.c[1][i];
        s.C.c[2][i] = 1.0 + ac * cshape_.c[2][i];
    }
    s.C.spd = true;
    return s;
}

State ManufacturedS::dt_at(double t) const {
    const double dav = -amp_v_ * omega_ * std::sin(omega_ * t);
    const double dac = -amp_c_ * 0.7 * omega_ * std::sin(0.7 * omega_ * t);
    State s;
    s.v = VectorField(*g_);
    s.v.solenoidal = true;
    for (std::size_t i = 0; i < s.v.x.size(); ++i) {
        s.v.x[i] = dav * vshape_.x[i];
        s.v.y[i] = dav * vshape_.y[i];
    }
    s.C = MatField(*g_, /*full=*/false);
    for (int k = 0; k < 3; ++k)
        for (std::size_t i = 0; i < s.C.c[k].size(); ++i) s.C.c[k][i] = dac * cshape_.c[k][i];
    return s;
}

Forcing ManufacturedS::forcing() const {
    Forcing f;
    f.velocity = [this](const Grid& g, double t) {
        const State u = at(t);
        const AFlux flux = base_->assemble_flux(u, StepData{});
        VectorField out = div_mat(flux.P);
        const State du = dt_at(t);
        for (std::size_t i = 0; i < out.x.size(); ++i) {
            out.x[i] = du.v.x[i] - out.x[i];
            out.y[i] = du.v.y[i] - out.y[i];
        }
        (void)g;
        return out;
    };
    f.conformation = [this](const Grid& g, double t) {
        const State u = at(t);
        const AFlux flux = base_->assemble_flux(u, StepData{});
        const State du = dt_at(t);
        MatField out(g, /*full=*/false);
        for (int k = 0; k < 3; ++k) {
            std::vector<double> dx(g.nodes()), dy(g.nodes());
            g.deriv(u.C.c[k], dx, 0);
            g.deriv(u.C.c[k], dy, 1);
            for (std::size_t i = 0; i < out.c[k].size(); ++i)
                out.c[k][i] = du.C.c[k][i] + flux.R.c[k][i] +
                              u.v.x[i] * dx[i] + u.v.y[i] * dy[i];
        }
        return out;
    };
    return f;
}

// ---------------------------------------------------------------------------

void write_diagnostics_csv(const std::string& path, const std::vector<CheckRecord>& records) {
    std::FILE* f = std::fopen(path.c_str(), "w");
    if (!f) throw ConfigError("write_diagnostics_csv: cannot open " + path);
    std::fprintf(f, "check,model,residual,tolerance,pass\n");
    for (const CheckRecord& r : records)
        std::fprintf(f, "%s,%s,%.17g,%.17g,%d\n", r.check.c_str(), r.model.c_str(), r.residual,
                     r.tolerance, r.pass ? 1 : 0);
    std::fclose(f);
}

void write_relenergy_csv(const std::string& path, const GronwallReport& rep) {
    std::FILE* f = std::fopen(path.c_str(), "w");
    if (!f) throw ConfigError("write_relenergy_csv: cannot open " + path);
    std::fprintf(f, "t,R,K,resid,envelope\n");
    for (std::size_t i = 0; i < rep.times.size(); ++i)
        std::fprintf(f, "%.17g,%.17g,%.17g,%.17g,%.17g\n", rep.times[i], rep.R[i], rep.K[i],
                     rep.resid[i], rep.envelope[i]);
    std::fclose(f);
}

}  // namespace evf
