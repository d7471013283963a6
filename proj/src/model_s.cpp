// Symmetrized Neo-Hookean model.  Deformation variable F is symmetric
// positive definite; energy density (|F|^2 - |I|^2 - log det F^2)/2,
// dissipation density mu |grad v|^2 + (1/mu_p) |F - F^{-1}|^2 - f . v.
// log det F^2 is evaluated as 2 sum log(eigenvalue) to avoid cancellation.
#include <cmath>
#include <limits>

#include "evf/models.hpp"

namespace evf {

namespace {

double frob_sq(const MatField& s, std::size_t i) {
    const Sym2 m = s.sym_at(i);
    return ddot(m, m);
}

}  // namespace

ModelS::ModelS(const Grid& g, ParamsS p, Forcing forcing)
    : Model(g, std::move(forcing)), p_(p) {
    if (!(p_.mu > 0)) throw ConfigError("model_s: mu must be positive");
    if (p_.alpha == 0) throw ConfigError("model_s: alpha must be nonzero");
    if (!(p_.mu_p > 0)) throw ConfigError("model_s: mu_p must be positive");
}

double ModelS::energy(const State& s) const {
    double acc = 0;
    for (std::size_t i = 0; i < s.v.x.size(); ++i) {
        acc += 0.5 * (s.v.x[i] * s.v.x[i] + s.v.y[i] * s.v.y[i]);
        const Eig<2> e = eig_sym(s.C.sym_at(i));
        for (double f : e.lam) {
            if (f <= kSpdFloor) return std::numeric_limits<double>::infinity();
            acc += 0.5 * (f * f - 1.0) - std::log(f);
        }
    }
    return acc * grid_->cell_area();
}

double ModelS::dissipation(const State& s, const StepData& sd) const {
    const MatField gv = grad_vec(s.v);
    double acc = 0;
    for (std::size_t i = 0; i < s.v.x.size(); ++i) {
        const Mat2 l = gv.at(i);
        acc += p_.mu * ddot(l, l);
        const Eig<2> e = eig_sym(s.C.sym_at(i));
        if (e.lam[0] <= kSpdFloor)
            throw OutsideDomain("model_s dissipation: deformation not SPD");
        for (double f : e.lam) {
            const double r = f - 1.0 / f;
            acc += r * r / p_.mu_p;
        }
        if (sd.has_f) acc -= sd.fbar.x[i] * s.v.x[i] + sd.fbar.y[i] * s.v.y[i];
        if (sd.has_src) {
            const Sym2 de = apply_eig(e, [](double f) { return f - 1.0 / f; });
            acc -= ddot(sd.srcbar.sym_at(i), de);
        }
    }
    return acc * grid_->cell_area();
}

DualState ModelS::subdiff_energy(const State& s) const {
    DualState z;
    z.w = s.v;
    z.tau = MatField(*grid_, /*full=*/false);
    for (std::size_t i = 0; i < s.v.x.size(); ++i) {
        const Eig<2> e = eig_sym(s.C.sym_at(i));
        if (e.lam[0] <= kSpdFloor)
            throw OutsideDomain("model_s subdiff_energy: deformation not SPD");
        z.tau.set(i, apply_eig(e, [](double f) { return f - 1.0 / f; }));
    }
    return z;
}

State ModelS::subdiff_conjugate(const DualState& z) const {
    // Closed-form root map sigma -> F(sigma) = sigma/2 + sqrt(sigma^2/4 + I);
    // defined (and SPD) for every symmetric argument.
    State s;
    s.v = z.w;
    s.C = MatField(*grid_, /*full=*/false);
    for (std::size_t i = 0; i < z.w.x.size(); ++i) s.C.set(i, f_of_sigma(z.tau.sym_at(i)));
    s.C.spd = true;
    return s;
}

DualState ModelS::hessian_apply(const State& s, const State& dir) const {
    // D^2E(v,F)[(w,G)] = (w, G + F^{-1} G F^{-1}).
    DualState z;
    z.w = dir.v;
    z.tau = MatField(*grid_, /*full=*/false);
    for (std::size_t i = 0; i < s.v.x.size(); ++i) {
        const Sym2 finv = spd_inv(s.C.sym_at(i));
        const Sym2 g = dir.C.sym_at(i);
        z.tau.set(i, g + sym_part(matmul(matmul(finv.full(), g.full()), finv.full())));
    }
    return z;
}

AFlux ModelS::assemble_flux(const State& s, const StepData& sd) const {
    const double a = p_.alpha;
    AFlux fl;
    fl.P = MatField(*grid_, /*full=*/true);
    fl.R = MatField(*grid_, /*full=*/false);
    fl.Tx = MatField(*grid_, /*full=*/false);
    fl.Ty = MatField(*grid_, /*full=*/false);
    const MatField gv = grad_vec(s.v);
    for (std::size_t i = 0; i < s.v.x.size(); ++i) {
        const Mat2 l = gv.at(i);
        const Eig<2> e = eig_sym(s.C.sym_at(i));
        const Sym2 f = s.C.sym_at(i);
        // momentum flux: mu grad v - v x v + alpha F^2
        Mat2 pm = p_.mu * l;
        pm(0, 0) -= s.v.x[i] * s.v.x[i];
        pm(0, 1) -= s.v.x[i] * s.v.y[i];
        pm(1, 0) -= s.v.y[i] * s.v.x[i];
        pm(1, 1) -= s.v.y[i] * s.v.y[i];
        fl.P.set(i, pm + (a * square(f)).full());
        // reaction: rotation/stretching + relaxation - source
        Sym2 relax = apply_eig(e, [](double x) { return x - 1.0 / x; });
        Sym2 r = (-2.0) * sym_prod(skw_part(l), f) - a * sym_prod(sym_part(l).full(), f) +
                 (1.0 / p_.mu_p) * relax;
        if (sd.has_src) r = r - sd.srcbar.sym_at(i);
        fl.R.set(i, r);
        fl.Tx.set(i, (-s.v.x[i]) * f);
        fl.Ty.set(i, (-s.v.y[i]) * f);
    }
    if (sd.has_f) fl.fbar = &sd.fbar;
    return fl;
}

AFlux ModelS::assemble_flux_dir(const State& s, const State& dir) const {
    const double a = p_.alpha;
    AFlux fl;
    fl.P = MatField(*grid_, /*full=*/true);
    fl.R = MatField(*grid_, /*full=*/false);
    fl.Tx = MatField(*grid_, /*full=*/false);
    fl.Ty = MatField(*grid_, /*full=*/false);
    const MatField gv = grad_vec(s.v);
    const MatField gw = grad_vec(dir.v);
    for (std::size_t i = 0; i < s.v.x.size(); ++i) {
        const Mat2 l = gv.at(i), lw = gw.at(i);
        const Sym2 f = s.C.sym_at(i);
        const Sym2 finv = spd_inv(f);
        const Sym2 g = dir.C.sym_at(i);
        const Sym2 gffg = sym_part(mul_ss(g, f)) + sym_part(mul_ss(f, g));  // GF + FG
        Mat2 pm = p_.mu * lw;
        pm(0, 0) -= 2.0 * dir.v.x[i] * s.v.x[i];
        pm(0, 1) -= dir.v.x[i] * s.v.y[i] + s.v.x[i] * dir.v.y[i];
        pm(1, 0) -= dir.v.y[i] * s.v.x[i] + s.v.y[i] * dir.v.x[i];
        pm(1, 1) -= 2.0 * dir.v.y[i] * s.v.y[i];
        fl.P.set(i, pm + (a * gffg).full());
        const Sym2 hess = g + sym_part(matmul(matmul(finv.full(), g.full()), finv.full()));
        const Sym2 r = (-2.0) * (sym_prod(skw_part(lw), f) + sym_prod(skw_part(l), g)) -
                       a * (sym_prod(sym_part(lw).full(), f) + sym_prod(sym_part(l).full(), g)) +
                       (1.0 / p_.mu_p) * hess;
        fl.R.set(i, r);
        fl.Tx.set(i, (-dir.v.x[i]) * f + (-s.v.x[i]) * g);
        fl.Ty.set(i, (-dir.v.y[i]) * f + (-s.v.y[i]) * g);
    }
    return fl;
}

double ModelS::d_dissipation(const State& s, const State& dir, const StepData& sd) const {
    const MatField gv = grad_vec(s.v);
    const MatField gw = grad_vec(dir.v);
    double acc = 0;
    for (std::size_t i = 0; i < s.v.x.size(); ++i) {
        acc += 2.0 * p_.mu * ddot(gv.at(i), gw.at(i));
        const Eig<2> e = eig_sym(s.C.sym_at(i));
        if (e.lam[0] <= kSpdFloor)
            throw OutsideDomain("model_s d_dissipation: deformation not SPD");
        const Sym2 g = dir.C.sym_at(i);
        // d/dF |F - F^{-1}|^2 [G] = 2 (F - F^{-1}) : (G + F^{-1} G F^{-1})
        const Sym2 finv = apply_eig(e, [](double f) { return 1.0 / f; });
        const Sym2 relax = apply_eig(e, [](double f) { return f - 1.0 / f; });
        const Sym2 hess = g + sym_part(matmul(matmul(finv.full(), g.full()), finv.full()));
        acc += (2.0 / p_.mu_p) * ddot(relax, hess);
        if (sd.has_f) acc -= sd.fbar.x[i] * dir.v.x[i] + sd.fbar.y[i] * dir.v.y[i];
        if (sd.has_src) acc -= ddot(sd.srcbar.sym_at(i), hess);
    }
    return acc * grid_->cell_area();
}

KPoly ModelS::k_poly(const KNorms& norms, int orient) const {
    const double C = grid_->embedding_constant();
    KPoly k;
    k.a = 2.0 * std::max(1.0, p_.alpha) * norms.gradphi_sym_inf;
    k.b = ((2.0 + p_.alpha) * (2.0 + p_.alpha) / (4.0 * p_.mu)) * norms.sigma_inf *
              norms.sigma_inf +
          (1.0 / p_.mu_p) * norms.sigma_neg[orient] * norms.sigma_neg[orient] +
          (C * C / p_.mu) * norms.gradsigma_l3_sq;
    return k;
}

double ModelS::c_psi(double t) const {
    double c = forcing_c_psi(t);
    if (forcing_.conformation) {
        const MatField src = forcing_.conformation(*grid_, t);
        double l2 = 0;
        for (std::size_t i = 0; i < src.c[0].size(); ++i) l2 += frob_sq(src, i);
        c += 0.5 * p_.mu_p * l2 * grid_->cell_area();
    }
    return c;
}

}  // namespace evf
