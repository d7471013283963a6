// Regularized Oldroyd-B model.  Conformation variable B is symmetric
// positive definite; energy density (1-beta) tr(B - I - log B) +
// (beta/2) |B - I|^2, dissipation density
//   mu |grad v|^2 + tr((1-beta) B (I - B^{-1})^2
//                      + (beta + delta(1-beta)) (B - I)^2
//                      + delta beta B (B - I)^2) - f . v,
// both evaluated per nodal eigenvalue.  The operator is kept in flux form
// (see model.hpp); an optional matrix source moves between the dissipation
// and the operator so that the dissipation identity is preserved exactly.
#include <cmath>
#include <limits>

#include "evf/models.hpp"

namespace evf {

namespace {

// dE/db per eigenvalue.
inline double de_q(double b, double beta) {
    return (1.0 - beta) * (1.0 - 1.0 / b) + beta * (b - 1.0);
}

// relaxation dissipation density per eigenvalue:
// (1-beta) b (1 - 1/b)^2 + (beta + delta(1-beta)) (b-1)^2 + delta beta b (b-1)^2.
inline double relax_q(double b, double beta, double delta) {
    const double bm = b - 1.0;
    return (1.0 - beta) * (b - 2.0 + 1.0 / b) + (beta + delta * (1.0 - beta)) * bm * bm +
           delta * beta * b * bm * bm;
}

// derivative of relax_q in b.
inline double drelax_q(double b, double beta, double delta) {
    return (1.0 - beta) * (1.0 - 1.0 / (b * b)) +
           2.0 * (beta + delta * (1.0 - beta)) * (b - 1.0) +
           delta * beta * (3.0 * b * b - 4.0 * b + 1.0);
}

// Max nodal spectral norm of a symmetric matrix field.
double sup_spectral(const MatField& s) {
    double m = 0;
    for (std::size_t i = 0; i < s.c[0].size(); ++i) {
        const Eig<2> e = eig_sym(s.sym_at(i));
        m = std::max(m, std::max(std::abs(e.lam[0]), std::abs(e.lam[1])));
    }
    return m;
}

}  // namespace

ModelQ::ModelQ(const Grid& g, ParamsQ p, Forcing forcing)
    : Model(g, std::move(forcing)), p_(p) {
    if (!(p_.mu > 0)) throw ConfigError("model_q: mu must be positive");
    if (p_.alpha == 0) throw ConfigError("model_q: alpha must be nonzero");
    if (!(p_.beta > 0 && p_.beta < 1)) throw ConfigError("model_q: beta must lie in (0,1)");
    if (!(p_.delta > 0)) throw ConfigError("model_q: delta must be positive");
}

double ModelQ::energy(const State& s) const {
    const double beta = p_.beta;
    double acc = 0;
    for (std::size_t i = 0; i < s.v.x.size(); ++i) {
        acc += 0.5 * (s.v.x[i] * s.v.x[i] + s.v.y[i] * s.v.y[i]);
        const Eig<2> e = eig_sym(s.C.sym_at(i));
        for (double b : e.lam) {
            if (b <= kSpdFloor) return std::numeric_limits<double>::infinity();
            const double bm = b - 1.0;
            acc += (1.0 - beta) * (bm - std::log(b)) + 0.5 * beta * bm * bm;
        }
    }
    return acc * grid_->cell_area();
}

double ModelQ::dissipation(const State& s, const StepData& sd) const {
    const MatField gv = grad_vec(s.v);
    double acc = 0;
    for (std::size_t i = 0; i < s.v.x.size(); ++i) {
        const Mat2 l = gv.at(i);
        acc += p_.mu * ddot(l, l);
        const Eig<2> e = eig_sym(s.C.sym_at(i));
        for (double b : e.lam) {
            if (b <= kSpdFloor)
                throw OutsideDomain("model_q dissipation: conformation not SPD");
            acc += relax_q(b, p_.beta, p_.delta);
        }
        if (sd.has_f) acc -= sd.fbar.x[i] * s.v.x[i] + sd.fbar.y[i] * s.v.y[i];
        if (sd.has_src) {
            const Sym2 de = apply_eig(e, [this](double b) { return de_q(b, p_.beta); });
            acc -= ddot(sd.srcbar.sym_at(i), de);
        }
    }
    return acc * grid_->cell_area();
}

DualState ModelQ::subdiff_energy(const State& s) const {
    DualState z;
    z.w = s.v;
    z.tau = MatField(*grid_, /*full=*/false);
    for (std::size_t i = 0; i < s.v.x.size(); ++i) {
        const Eig<2> e = eig_sym(s.C.sym_at(i));
        if (e.lam[0] <= kSpdFloor)
            throw OutsideDomain("model_q subdiff_energy: conformation not SPD");
        z.tau.set(i, apply_eig(e, [this](double b) { return de_q(b, p_.beta); }));
    }
    return z;
}

State ModelQ::subdiff_conjugate(const DualState& z) const {
    // Closed-form root map sigma -> B(sigma); defined (and SPD) for every
    // symmetric argument.
    State s;
    s.v = z.w;
    s.C = MatField(*grid_, /*full=*/false);
    for (std::size_t i = 0; i < z.w.x.size(); ++i)
        s.C.set(i, b_of_sigma(z.tau.sym_at(i), p_.beta));
    s.C.spd = true;
    return s;
}

DualState ModelQ::hessian_apply(const State& s, const State& dir) const {
    // D^2E(v,B)[(w,G)] = (w, (1-beta) B^{-1} G B^{-1} + beta G).
    DualState z;
    z.w = dir.v;
    z.tau = MatField(*grid_, /*full=*/false);
    for (std::size_t i = 0; i < s.v.x.size(); ++i) {
        const Sym2 b = s.C.sym_at(i);
        const Sym2 g = dir.C.sym_at(i);
        const Sym2 binv = spd_inv(b);
        const Sym2 h = sym_part(matmul(matmul(binv.full(), g.full()), binv.full()));
        z.tau.set(i, (1.0 - p_.beta) * h + p_.beta * g);
    }
    return z;
}

AFlux ModelQ::assemble_flux(const State& s, const StepData& sd) const {
    const double a = p_.alpha, beta = p_.beta, delta = p_.delta;
    AFlux f;
    f.P = MatField(*grid_, /*full=*/true);
    f.R = MatField(*grid_, /*full=*/false);
    f.Tx = MatField(*grid_, /*full=*/false);
    f.Ty = MatField(*grid_, /*full=*/false);
    const MatField gv = grad_vec(s.v);
    const Sym2 id = Sym2::identity();
    for (std::size_t i = 0; i < s.v.x.size(); ++i) {
        const Mat2 l = gv.at(i);
        const Sym2 b = s.C.sym_at(i);
        const Sym2 b2 = square(b);
        // momentum flux: mu grad v - v x v + alpha ((1-beta)(B-I) + beta (B^2-B))
        Mat2 pm = p_.mu * l;
        pm(0, 0) -= s.v.x[i] * s.v.x[i];
        pm(0, 1) -= s.v.x[i] * s.v.y[i];
        pm(1, 0) -= s.v.y[i] * s.v.x[i];
        pm(1, 1) -= s.v.y[i] * s.v.y[i];
        const Sym2 elast = (a * (1.0 - beta)) * (b - id) + (a * beta) * (b2 - b);
        f.P.set(i, pm + elast.full());
        // conformation reaction: rotation/stretching + relaxation - source
        Sym2 r = (-2.0) * sym_prod(skw_part(l), b) - a * sym_prod(sym_part(l).full(), b) +
                 (b - id) + delta * (b2 - b);
        if (sd.has_src) r = r - sd.srcbar.sym_at(i);
        f.R.set(i, r);
        // transport: pairs with the sigma derivatives
        f.Tx.set(i, (-s.v.x[i]) * b);
        f.Ty.set(i, (-s.v.y[i]) * b);
    }
    if (sd.has_f) f.fbar = &sd.fbar;
    return f;
}

AFlux ModelQ::assemble_flux_dir(const State& s, const State& dir) const {
    const double a = p_.alpha, beta = p_.beta, delta = p_.delta;
    AFlux f;
    f.P = MatField(*grid_, /*full=*/true);
    f.R = MatField(*grid_, /*full=*/false);
    f.Tx = MatField(*grid_, /*full=*/false);
    f.Ty = MatField(*grid_, /*full=*/false);
    const MatField gv = grad_vec(s.v);
    const MatField gw = grad_vec(dir.v);
    for (std::size_t i = 0; i < s.v.x.size(); ++i) {
        const Mat2 l = gv.at(i), lw = gw.at(i);
        const Sym2 b = s.C.sym_at(i);
        const Sym2 g = dir.C.sym_at(i);
        const Sym2 gbbg = sym_part(mul_ss(g, b)) + sym_part(mul_ss(b, g));  // (GB + BG)_sym = GB+BG
        Mat2 pm = p_.mu * lw;
        pm(0, 0) -= 2.0 * dir.v.x[i] * s.v.x[i];
        pm(0, 1) -= dir.v.x[i] * s.v.y[i] + s.v.x[i] * dir.v.y[i];
        pm(1, 0) -= dir.v.y[i] * s.v.x[i] + s.v.y[i] * dir.v.x[i];
        pm(1, 1) -= 2.0 * dir.v.y[i] * s.v.y[i];
        const Sym2 elast = (a * (1.0 - beta)) * g + (a * beta) * (gbbg - g);
        f.P.set(i, pm + elast.full());
        const Sym2 r = (-2.0) * (sym_prod(skw_part(lw), b) + sym_prod(skw_part(l), g)) -
                       a * (sym_prod(sym_part(lw).full(), b) + sym_prod(sym_part(l).full(), g)) +
                       g + delta * (gbbg - g);
        f.R.set(i, r);
        f.Tx.set(i, (-dir.v.x[i]) * b + (-s.v.x[i]) * g);
        f.Ty.set(i, (-dir.v.y[i]) * b + (-s.v.y[i]) * g);
    }
    return f;
}

double ModelQ::d_dissipation(const State& s, const State& dir, const StepData& sd) const {
    const MatField gv = grad_vec(s.v);
    const MatField gw = grad_vec(dir.v);
    double acc = 0;
    for (std::size_t i = 0; i < s.v.x.size(); ++i) {
        acc += 2.0 * p_.mu * ddot(gv.at(i), gw.at(i));
        const Eig<2> e = eig_sym(s.C.sym_at(i));
        if (e.lam[0] <= kSpdFloor)
            throw OutsideDomain("model_q d_dissipation: conformation not SPD");
        const Sym2 g = dir.C.sym_at(i);
        const Sym2 dr = apply_eig(e, [this](double b) { return drelax_q(b, p_.beta, p_.delta); });
        acc += ddot(dr, g);
        if (sd.has_f) acc -= sd.fbar.x[i] * dir.v.x[i] + sd.fbar.y[i] * dir.v.y[i];
        if (sd.has_src) {
            const Sym2 binv = apply_eig(e, [](double b) { return 1.0 / b; });
            const Sym2 h = sym_part(matmul(matmul(binv.full(), g.full()), binv.full()));
            acc -= ddot(sd.srcbar.sym_at(i), (1.0 - p_.beta) * h + p_.beta * g);
        }
    }
    return acc * grid_->cell_area();
}

KPoly ModelQ::k_poly(const KNorms& norms, int orient) const {
    const double C = grid_->embedding_constant();
    KPoly k;
    const double gap = p_.beta + p_.delta - 3.0 * p_.delta * p_.beta;
    k.k0 = 2.0 * std::max(0.0, -gap) / p_.beta;
    k.a = 2.0 * std::max(1.0, p_.alpha) * norms.gradphi_sym_neg[orient];
    k.b = (C * C / (p_.beta * p_.mu)) * norms.gradsigma_l3_sq +
          ((2.0 + p_.alpha) * (2.0 + p_.alpha) / (4.0 * p_.mu * p_.beta)) * norms.sigma_inf *
              norms.sigma_inf;
    return k;
}

double ModelQ::c_psi(double t) const {
    double c = forcing_c_psi(t);
    if (forcing_.conformation) {
        const MatField src = forcing_.conformation(*grid_, t);
        const double sinf = sup_spectral(src);
        if (sinf > 0.5)
            throw ConfigError("model_q: conformation source exceeds the admissible sup bound 1/2");
        const double area = grid_->L() * grid_->L();
        const double beta = p_.beta, delta = p_.delta;
        c += area * (2.0 * (1.0 - beta) * sinf +
                     beta * beta * sinf * sinf / (2.0 * (beta + delta * (1.0 - beta))));
    }
    return c;
}

}  // namespace evf
