#include "evf/model.hpp"

#include <algorithm>
#include <cmath>

namespace evf {

// ---------------------------------------------------------------------------
// State algebra.

namespace {

// Adds a * src into dst where the layouts may differ (symmetric shapes are
// promoted into full-layout states; the reverse is rejected).
void mat_axpy(MatField& dst, double a, const MatField& src) {
    require_same_grid(dst.g, src.g, "state_axpy");
    if (dst.full == src.full) {
        for (int k = 0; k < dst.ncomp(); ++k)
            for (std::size_t i = 0; i < dst.c[k].size(); ++i) dst.c[k][i] += a * src.c[k][i];
    } else if (dst.full && !src.full) {
        for (std::size_t i = 0; i < dst.c[0].size(); ++i) {
            dst.c[0][i] += a * src.c[0][i];
            dst.c[1][i] += a * src.c[1][i];
            dst.c[2][i] += a * src.c[1][i];
            dst.c[3][i] += a * src.c[2][i];
        }
    } else {
        throw GridMismatch("state_axpy: cannot add a full-layout field into a symmetric one");
    }
}

}  // namespace

void state_axpy(State& u, double a, const State& dir) {
    require_same_grid(u.v.g, dir.v.g, "state_axpy");
    for (std::size_t i = 0; i < u.v.x.size(); ++i) {
        u.v.x[i] += a * dir.v.x[i];
        u.v.y[i] += a * dir.v.y[i];
    }
    u.v.solenoidal = u.v.solenoidal && dir.v.solenoidal;
    mat_axpy(u.C, a, dir.C);
    u.C.spd = false;  // must be re-verified by the caller if needed
}

State state_lincomb(double a, const State& x, double b, const State& y) {
    State r = x;
    for (std::size_t i = 0; i < r.v.x.size(); ++i) {
        r.v.x[i] = a * x.v.x[i];
        r.v.y[i] = a * x.v.y[i];
    }
    for (int k = 0; k < r.C.ncomp(); ++k)
        for (std::size_t i = 0; i < r.C.c[k].size(); ++i) r.C.c[k][i] = a * x.C.c[k][i];
    state_axpy(r, b, y);
    r.v.solenoidal = x.v.solenoidal && y.v.solenoidal;
    return r;
}

// ---------------------------------------------------------------------------
// Test-function preparation.

TestFunctionData prepare_test_function(const TestFunction& tf) {
    TestFunctionData d;
    d.tf = tf;
    const Grid& g = *tf.phi.g;
    d.grad_phi = grad_vec(tf.phi);
    d.dsig_dx = MatField(g, /*full=*/false);
    d.dsig_dy = MatField(g, /*full=*/false);
    for (int k = 0; k < 3; ++k) {
        g.deriv(tf.sigma.c[k], d.dsig_dx.c[k], 0);
        g.deriv(tf.sigma.c[k], d.dsig_dy.c[k], 1);
    }

    KNorms& nm = d.norms;
    ScalarField gs3(g);  // |grad sigma|^3 integrand
    for (std::size_t i = 0; i < tf.phi.x.size(); ++i) {
        const Mat2 gp = d.grad_phi.at(i);
        const Sym2 gps = sym_part(gp);
        const Eig<2> e = eig_sym(gps);
        nm.gradphi_sym_neg[0] = std::max(nm.gradphi_sym_neg[0], std::max(0.0, -e.lam[0]));
        nm.gradphi_sym_neg[1] = std::max(nm.gradphi_sym_neg[1], std::max(0.0, e.lam[1]));
        nm.gradphi_sym_inf =
            std::max(nm.gradphi_sym_inf, std::max(std::abs(e.lam[0]), std::abs(e.lam[1])));
        nm.gradphi_inf = std::max(nm.gradphi_inf, std::sqrt(ddot(gp, gp)));

        const Sym2 s = tf.sigma.sym_at(i);
        const Eig<2> es = eig_sym(s);
        nm.sigma_inf = std::max(nm.sigma_inf, std::max(std::abs(es.lam[0]), std::abs(es.lam[1])));
        nm.sigma_neg[0] = std::max(nm.sigma_neg[0], std::max(0.0, -es.lam[0]));
        nm.sigma_neg[1] = std::max(nm.sigma_neg[1], std::max(0.0, es.lam[1]));

        double g2 = 0;
        g2 += ddot(d.dsig_dx.sym_at(i), d.dsig_dx.sym_at(i));
        g2 += ddot(d.dsig_dy.sym_at(i), d.dsig_dy.sym_at(i));
        gs3.v[i] = std::pow(g2, 1.5);
    }
    nm.gradsigma_l3_sq = std::pow(integrate(gs3), 2.0 / 3.0);
    return d;
}

double flux_pairing(const AFlux& flux, const TestFunctionData& tfd) {
    double s = inner(flux.P, tfd.grad_phi) + inner(flux.R, tfd.tf.sigma) +
               inner(flux.Tx, tfd.dsig_dx) + inner(flux.Ty, tfd.dsig_dy);
    if (flux.fbar != nullptr && flux.fbar->g != nullptr)
        s -= inner(*flux.fbar, tfd.tf.phi);
    return s;
}

// ---------------------------------------------------------------------------
// Forcing.

Forcing make_mode_forcing(std::vector<ForcingMode> modes) {
    Forcing f;
    if (modes.empty()) return f;
    f.velocity = [modes](const Grid& g, double t) {
        VectorField out(g);
        const int n = g.n();
        const double twopi = 2.0 * 3.14159265358979323846;
        for (const ForcingMode& m : modes) {
            const double ct = std::cos(m.omega * t);
            for (int iy = 0; iy < n; ++iy)
                for (int ix = 0; ix < n; ++ix) {
                    const double ph =
                        twopi * (static_cast<double>(m.kx) * ix + static_cast<double>(m.ky) * iy) / n +
                        m.phase;
                    const double c = std::cos(ph) * ct;
                    const std::size_t idx = static_cast<std::size_t>(iy) * n + ix;
                    out.x[idx] += m.ax * c;
                    out.y[idx] += m.ay * c;
                }
        }
        return leray_project(out);
    };
    return f;
}

double dual_norm_sq(const Grid& g, const VectorField& f) {
    VectorField pf = f.solenoidal ? f : leray_project(f);
    VectorField u(g);
    g.inv_neg_laplacian(pf.x, u.x);
    g.inv_neg_laplacian(pf.y, u.y);
    return inner(pf, u);
}

// ---------------------------------------------------------------------------
// Model base conveniences.

State Model::minimizer() const {
    State s;
    s.v = VectorField(*grid_);
    s.v.solenoidal = true;
    s.C = MatField(*grid_, full_c());
    if (!full_c()) {
        // identity conformation
        std::fill(s.C.c[0].begin(), s.C.c[0].end(), 1.0);
        std::fill(s.C.c[2].begin(), s.C.c[2].end(), 1.0);
        s.C.spd = true;
    }
    return s;
}

StepData Model::at_time(double t) const {
    StepData sd;
    if (forcing_.velocity) {
        sd.fbar = forcing_.velocity(*grid_, t);
        sd.has_f = true;
    }
    if (forcing_.conformation) {
        sd.srcbar = forcing_.conformation(*grid_, t);
        sd.has_src = true;
    }
    sd.c_psi = c_psi(t);
    return sd;
}

StepData Model::time_average(double t0, double t1) const {
    // 2-point Gauss-Legendre on (t0, t1); all time dependence enters the
    // functionals linearly (through f and the source), so averaging the data
    // averages the functionals exactly, and the nodewise bound
    // Psi(t,.) >= -C_Psi(t) is preserved by the shared quadrature.
    const double h = t1 - t0;
    const double ta = t0 + h * (0.5 - 0.5 / std::sqrt(3.0));
    const double tb = t0 + h * (0.5 + 0.5 / std::sqrt(3.0));
    StepData sd;
    if (forcing_.velocity) {
        VectorField fa = forcing_.velocity(*grid_, ta);
        VectorField fb = forcing_.velocity(*grid_, tb);
        for (std::size_t i = 0; i < fa.x.size(); ++i) {
            fa.x[i] = 0.5 * (fa.x[i] + fb.x[i]);
            fa.y[i] = 0.5 * (fa.y[i] + fb.y[i]);
        }
        sd.fbar = std::move(fa);
        sd.has_f = true;
    }
    if (forcing_.conformation) {
        MatField sa = forcing_.conformation(*grid_, ta);
        MatField sb = forcing_.conformation(*grid_, tb);
        for (int k = 0; k < sa.ncomp(); ++k)
            for (std::size_t i = 0; i < sa.c[k].size(); ++i)
                sa.c[k][i] = 0.5 * (sa.c[k][i] + sb.c[k][i]);
        sd.srcbar = std::move(sa);
        sd.has_src = true;
    }
    sd.c_psi = 0.5 * (c_psi(ta) + c_psi(tb));
    return sd;
}

double Model::dissipation_at(double t, const State& s) const {
    return dissipation(s, at_time(t));
}

double Model::operator_a(double t, const State& s, const TestFunctionData& tfd) const {
    const StepData sd = at_time(t);
    return flux_pairing(assemble_flux(s, sd), tfd);
}

double Model::pair_state(const State& u, const TestFunctionData& tfd) const {
    return inner(u.v, tfd.tf.phi) + inner(u.C, tfd.tf.sigma);
}

double Model::reg_weight_k(const TestFunctionData& tfd, double c) const {
    const int orient = c < 0 ? 1 : 0;
    return k_poly(tfd.norms, orient).eval(std::abs(c));
}

double Model::forcing_c_psi(double t) const {
    if (!forcing_.velocity) return 0.0;
    const VectorField f = forcing_.velocity(*grid_, t);
    return dual_norm_sq(*grid_, f) / (2.0 * mu());
}

// ---------------------------------------------------------------------------
// Checkers.

State random_admissible_state(const Model& m, std::uint64_t seed, int k_max, double scale) {
    State s;
    s.v = leray_project(random_vector_field(m.grid(), seed * 3 + 1, k_max, scale));
    s.C = m.full_c() ? random_full_field(m.grid(), seed * 3 + 2, k_max, scale)
                     : random_spd_field(m.grid(), seed * 3 + 2, k_max, scale);
    return s;
}

double fenchel_young_gap(const Model& m, const State& s) {
    const DualState z = m.subdiff_energy(s);
    const State zs = m.subdiff_conjugate(z);
    const double e = m.energy(s);
    // E*(z) = <z, DE*(z)> - E(DE*(z))
    const double pair_zzs = inner(z.w, zs.v) + inner(z.tau, zs.C);
    const double estar = pair_zzs - m.energy(zs);
    const double pair_zs = inner(z.w, s.v) + inner(z.tau, s.C);
    return std::abs(e + estar - pair_zs) / (1.0 + std::abs(e));
}

double fenchel_roundtrip_error(const Model& m, const State& s) {
    const State r = m.subdiff_conjugate(m.subdiff_energy(s));
    double worst = 0;
    for (std::size_t i = 0; i < s.v.x.size(); ++i) {
        worst = std::max(worst, std::abs(r.v.x[i] - s.v.x[i]));
        worst = std::max(worst, std::abs(r.v.y[i] - s.v.y[i]));
    }
    for (int k = 0; k < s.C.ncomp(); ++k)
        for (std::size_t i = 0; i < s.C.c[k].size(); ++i)
            worst = std::max(worst, std::abs(r.C.c[k][i] - s.C.c[k][i]));
    return worst;
}

double check_adiss(const Model& m, double t, const TestFunction& tf) {
    const TestFunctionData tfd = prepare_test_function(tf);
    DualState z;
    z.w = tf.phi;
    z.tau = tf.sigma;
    const State u = m.subdiff_conjugate(z);
    const StepData sd = m.at_time(t);
    const double a = flux_pairing(m.assemble_flux(u, sd), tfd);
    const double psi = m.dissipation(u, sd);
    return std::abs(a - psi) / (1.0 + std::abs(psi));
}

double check_convexity(const Model& m, double t, const TestFunction& tf, int trials,
                       std::uint64_t seed) {
    const TestFunctionData tfd = prepare_test_function(tf);
    const StepData sd = m.at_time(t);
    const double kw = m.reg_weight_k(tfd, 1.0);
    auto G = [&](const State& s) {
        return m.dissipation(s, sd) - flux_pairing(m.assemble_flux(s, sd), tfd) +
               kw * m.energy(s);
    };
    double worst = -std::numeric_limits<double>::infinity();
    for (int trial = 0; trial < trials; ++trial) {
        const std::uint64_t base = seed + 977u * static_cast<std::uint64_t>(trial);
        const State s1 = random_admissible_state(m, base * 2 + 1);
        const State s2 = random_admissible_state(m, base * 2 + 2);
        const State mid = state_lincomb(0.5, s1, 0.5, s2);
        const double g1 = G(s1), g2 = G(s2), gm = G(mid);
        const double scale = std::max({std::abs(g1), std::abs(g2), 1.0});
        worst = std::max(worst, (gm - 0.5 * (g1 + g2)) / scale);
    }
    return worst;
}

}  // namespace evf
