// Quadratic Lin-Liu-Zhang model.  The deformation variable F is a general
// (non-symmetric) matrix field; the energy |v|^2/2 + |F|^2/2 is quadratic,
// so the derivative pair DE / DE* is the identity and the whole state space
// is admissible.  Momentum flux carries the stress F F^T; the transport
// equation is stretched by the full velocity gradient.
#include <cmath>

#include "evf/models.hpp"

namespace evf {

ModelLLZ::ModelLLZ(const Grid& g, ParamsLLZ p, Forcing forcing)
    : Model(g, std::move(forcing)), p_(p) {
    if (!(p_.mu > 0)) throw ConfigError("model_llz: mu must be positive");
    if (forcing_.conformation)
        throw ConfigError("model_llz: deformation sources are not supported");
}

double ModelLLZ::energy(const State& s) const {
    double acc = 0;
    for (std::size_t i = 0; i < s.v.x.size(); ++i) {
        acc += 0.5 * (s.v.x[i] * s.v.x[i] + s.v.y[i] * s.v.y[i]);
        const Mat2 f = s.C.at(i);
        acc += 0.5 * ddot(f, f);
    }
    return acc * grid_->cell_area();
}

double ModelLLZ::dissipation(const State& s, const StepData& sd) const {
    const MatField gv = grad_vec(s.v);
    double acc = 0;
    for (std::size_t i = 0; i < s.v.x.size(); ++i) {
        const Mat2 l = gv.at(i);
        acc += p_.mu * ddot(l, l);
        if (sd.has_f) acc -= sd.fbar.x[i] * s.v.x[i] + sd.fbar.y[i] * s.v.y[i];
    }
    return acc * grid_->cell_area();
}

DualState ModelLLZ::subdiff_energy(const State& s) const {
    DualState z;
    z.w = s.v;
    z.tau = s.C;
    return z;
}

State ModelLLZ::subdiff_conjugate(const DualState& z) const {
    State s;
    s.v = z.w;
    if (z.tau.full) {
        s.C = z.tau;
    } else {
        // symmetric test-function shapes are promoted into the full layout
        s.C = MatField(*grid_, /*full=*/true);
        for (std::size_t i = 0; i < z.w.x.size(); ++i) s.C.set(i, z.tau.sym_at(i));
    }
    return s;
}

DualState ModelLLZ::hessian_apply(const State&, const State& dir) const {
    DualState z;
    z.w = dir.v;
    z.tau = dir.C;
    return z;
}

AFlux ModelLLZ::assemble_flux(const State& s, const StepData& sd) const {
    AFlux fl;
    fl.P = MatField(*grid_, /*full=*/true);
    fl.R = MatField(*grid_, /*full=*/true);
    fl.Tx = MatField(*grid_, /*full=*/true);
    fl.Ty = MatField(*grid_, /*full=*/true);
    const MatField gv = grad_vec(s.v);
    for (std::size_t i = 0; i < s.v.x.size(); ++i) {
        const Mat2 l = gv.at(i);
        const Mat2 f = s.C.at(i);
        // momentum flux: mu grad v - v x v + F F^T
        Mat2 pm = p_.mu * l + matmul(f, transpose(f));
        pm(0, 0) -= s.v.x[i] * s.v.x[i];
        pm(0, 1) -= s.v.x[i] * s.v.y[i];
        pm(1, 0) -= s.v.y[i] * s.v.x[i];
        pm(1, 1) -= s.v.y[i] * s.v.y[i];
        fl.P.set(i, pm);
        // reaction: minus the stretching (grad v) F
        fl.R.set(i, (-1.0) * matmul(l, f));
        fl.Tx.set(i, (-s.v.x[i]) * f);
        fl.Ty.set(i, (-s.v.y[i]) * f);
    }
    if (sd.has_f) fl.fbar = &sd.fbar;
    return fl;
}

AFlux ModelLLZ::assemble_flux_dir(const State& s, const State& dir) const {
    AFlux fl;
    fl.P = MatField(*grid_, /*full=*/true);
    fl.R = MatField(*grid_, /*full=*/true);
    fl.Tx = MatField(*grid_, /*full=*/true);
    fl.Ty = MatField(*grid_, /*full=*/true);
    const MatField gv = grad_vec(s.v);
    const MatField gw = grad_vec(dir.v);
    for (std::size_t i = 0; i < s.v.x.size(); ++i) {
        const Mat2 l = gv.at(i), lw = gw.at(i);
        const Mat2 f = s.C.at(i);
        const Mat2 g = dir.C.at(i);
        Mat2 pm = p_.mu * lw + matmul(g, transpose(f)) + matmul(f, transpose(g));
        pm(0, 0) -= 2.0 * dir.v.x[i] * s.v.x[i];
        pm(0, 1) -= dir.v.x[i] * s.v.y[i] + s.v.x[i] * dir.v.y[i];
        pm(1, 0) -= dir.v.y[i] * s.v.x[i] + s.v.y[i] * dir.v.x[i];
        pm(1, 1) -= 2.0 * dir.v.y[i] * s.v.y[i];
        fl.P.set(i, pm);
        fl.R.set(i, (-1.0) * (matmul(lw, f) + matmul(l, g)));
        fl.Tx.set(i, (-dir.v.x[i]) * f + (-s.v.x[i]) * g);
        fl.Ty.set(i, (-dir.v.y[i]) * f + (-s.v.y[i]) * g);
    }
    return fl;
}

double ModelLLZ::d_dissipation(const State& s, const State& dir, const StepData& sd) const {
    const MatField gv = grad_vec(s.v);
    const MatField gw = grad_vec(dir.v);
    double acc = 0;
    for (std::size_t i = 0; i < s.v.x.size(); ++i) {
        acc += 2.0 * p_.mu * ddot(gv.at(i), gw.at(i));
        if (sd.has_f) acc -= sd.fbar.x[i] * dir.v.x[i] + sd.fbar.y[i] * dir.v.y[i];
    }
    return acc * grid_->cell_area();
}

KPoly ModelLLZ::k_poly(const KNorms& norms, int /*orient*/) const {
    const double C = grid_->embedding_constant();
    KPoly k;
    k.a = 2.0 * norms.gradphi_inf;
    k.b = C * (norms.gradsigma_l3_sq + norms.sigma_inf * norms.sigma_inf);
    return k;
}

double ModelLLZ::c_psi(double t) const { return forcing_c_psi(t); }

}  // namespace evf
