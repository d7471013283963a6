#include "evf/scheme.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

namespace evf {

namespace {

double state_dot(const State& a, const State& b) {
    return inner(a.v, b.v) + inner(a.C, b.C);
}

DualState dual_scale(const DualState& z, double a) {
    DualState r = z;
    for (std::size_t i = 0; i < r.w.x.size(); ++i) {
        r.w.x[i] *= a;
        r.w.y[i] *= a;
    }
    for (int k = 0; k < r.tau.ncomp(); ++k)
        for (std::size_t i = 0; i < r.tau.c[k].size(); ++i) r.tau.c[k][i] *= a;
    return r;
}

// Solve the small SPD system A x = b by Cholesky with a tiny ridge fallback.
std::vector<double> solve_spd(std::vector<std::vector<double>> a, std::vector<double> b) {
    const int k = static_cast<int>(b.size());
    double tr = 0;
    for (int i = 0; i < k; ++i) tr += a[i][i];
    const double ridge = 1e-14 * (tr / std::max(1, k) + 1.0);
    for (int i = 0; i < k; ++i) a[i][i] += ridge;
    // in-place Cholesky
    for (int i = 0; i < k; ++i) {
        for (int j = 0; j < i; ++j) {
            double s = a[i][j];
            for (int t = 0; t < j; ++t) s -= a[i][t] * a[j][t];
            a[i][j] = s / a[j][j];
        }
        double s = a[i][i];
        for (int t = 0; t < i; ++t) s -= a[i][t] * a[i][t];
        a[i][i] = std::sqrt(std::max(s, 1e-300));
    }
    for (int i = 0; i < k; ++i) {
        double s = b[i];
        for (int t = 0; t < i; ++t) s -= a[i][t] * b[t];
        b[i] = s / a[i][i];
    }
    for (int i = k - 1; i >= 0; --i) {
        double s = b[i];
        for (int t = i + 1; t < k; ++t) s -= a[t][i] * b[t];
        b[i] = s / a[i][i];
    }
    return b;
}

double norm2(const std::vector<double>& v) {
    double s = 0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

}  // namespace

// ---------------------------------------------------------------------------

std::pair<double, State> feasibility_alpha(const Model& m, const DualState& phi,
                                           double target_energy, const StepData& sd, double tau) {
    auto value = [&](double a, State* out) {
        State u = m.subdiff_conjugate(dual_scale(phi, a));
        const double f = m.energy(u) + tau * m.dissipation(u, sd);
        if (out) *out = std::move(u);
        return f;
    };
    State u1;
    const double f1 = value(1.0, &u1);
    if (f1 <= target_energy) return {1.0, std::move(u1)};
    double lo = 0.0, hi = 1.0;
    State ulo;
    value(0.0, &ulo);  // DE*(0) = minimizer, value 0 <= target
    for (int it = 0; it < 60; ++it) {
        const double mid = 0.5 * (lo + hi);
        State um;
        const double fm = value(mid, &um);
        if (fm <= target_energy) {
            lo = mid;
            ulo = std::move(um);
        } else {
            hi = mid;
        }
    }
    return {lo, std::move(ulo)};
}

// ---------------------------------------------------------------------------

Scheme::Scheme(const Model& m, SchemeConfig cfg) : model_(&m), cfg_(std::move(cfg)) {
    if (!(cfg_.tau > 0)) throw ConfigError("scheme: tau must be positive");
    if (cfg_.n_steps < 0) throw ConfigError("scheme: n_steps must be nonnegative");
    if (cfg_.mode == SchemeMode::minmax && cfg_.basis.empty())
        throw ConfigError("scheme: minmax mode requires a nonempty test basis");
    // Feasibility of the constrained step requires tau K(0) < 1.
    const double k0 = m.k_poly(KNorms{}, 0).k0;
    if (!(cfg_.tau * k0 < 1.0))
        throw ConfigError("scheme: tau * K(0) must be below 1 for the chosen parameters");

    const Grid& g = m.grid();
    for (const TestFunction& tf : cfg_.basis) {
        require_same_grid(tf.phi.g, &g, "scheme basis");
        tfds_.push_back(prepare_test_function(tf));
    }
    // Orthonormalized solve directions spanning the basis shapes (modified
    // Gram-Schmidt; shapes that are linear combinations of earlier ones are
    // dropped, e.g. the mixed velocity+stress members of the default basis).
    for (const TestFunctionData& tfd : tfds_) {
        State d;
        d.v = tfd.tf.phi.solenoidal ? tfd.tf.phi : leray_project(tfd.tf.phi);
        if (m.full_c()) {
            d.C = MatField(g, /*full=*/true);
            for (std::size_t i = 0; i < d.v.x.size(); ++i) d.C.set(i, tfd.tf.sigma.sym_at(i));
        } else {
            d.C = tfd.tf.sigma;
        }
        const double orig = std::sqrt(state_dot(d, d));
        if (!(orig > 0)) continue;
        for (const State& e : dirs_) state_axpy(d, -state_dot(d, e), e);
        const double rem = std::sqrt(state_dot(d, d));
        if (rem < 1e-8 * orig) continue;
        State dn = state_lincomb(1.0 / rem, d, 0.0, d);
        dn.v.solenoidal = true;
        dirs_.push_back(std::move(dn));
    }
    pair0_.assign(tfds_.size(), std::vector<double>(dirs_.size(), 0.0));
    for (std::size_t j = 0; j < tfds_.size(); ++j)
        for (std::size_t k = 0; k < dirs_.size(); ++k)
            pair0_[j][k] = m.pair_state(dirs_[k], tfds_[j]);
}

StepData Scheme::step_data(long n) const {
    const double t0 = static_cast<double>(n - 1) * cfg_.tau;
    return model_->time_average(t0, t0 + cfg_.tau);
}

// ---------------------------------------------------------------------------
// Baseline stepper: explicit dealiased transport/stretching/stress, implicit
// viscosity (Helmholtz inverse) and implicit nodewise relaxation solved per
// eigenvalue by safeguarded bisection.

State Scheme::baseline_step(const State& u_prev, long n) const {
    const Grid& g = model_->grid();
    const double tau = cfg_.tau;
    const StepData sd = step_data(n);
    const AFlux flux = model_->assemble_flux(u_prev, sd);

    // velocity: v_new = (I - tau mu Lap)^{-1} P [ v + tau (div P_expl + f) ]
    VectorField rhs = div_mat(flux.P);
    const VectorField lap = laplacian(u_prev.v);
    for (std::size_t i = 0; i < rhs.x.size(); ++i) {
        rhs.x[i] -= model_->mu() * lap.x[i];
        rhs.y[i] -= model_->mu() * lap.y[i];
        if (sd.has_f) {
            rhs.x[i] += sd.fbar.x[i];
            rhs.y[i] += sd.fbar.y[i];
        }
    }
    dealias(rhs);
    VectorField vnew(g);
    for (std::size_t i = 0; i < rhs.x.size(); ++i) {
        vnew.x[i] = u_prev.v.x[i] + tau * rhs.x[i];
        vnew.y[i] = u_prev.v.y[i] + tau * rhs.y[i];
    }
    g.helmholtz_inverse(vnew.x, tau * model_->mu());
    g.helmholtz_inverse(vnew.y, tau * model_->mu());
    g.leray_planes(vnew.x, vnew.y);
    vnew.solenoidal = true;

    // conformation: dC/dt = -(R - relax(C)) - (v . grad) C  explicitly,
    // then solve b + tau r(b) = c per eigenvalue of the predictor.
    MatField crhs(g, u_prev.C.full);
    const bool relaxing = !model_->full_c();
    for (int k = 0; k < crhs.ncomp(); ++k) {
        std::vector<double> dx(g.nodes()), dy(g.nodes());
        g.deriv(u_prev.C.c[k], dx, 0);
        g.deriv(u_prev.C.c[k], dy, 1);
        for (std::size_t i = 0; i < crhs.c[k].size(); ++i)
            crhs.c[k][i] = -flux.R.c[k][i] - (u_prev.v.x[i] * dx[i] + u_prev.v.y[i] * dy[i]);
    }
    if (relaxing) {
        for (std::size_t i = 0; i < crhs.c[0].size(); ++i) {
            const Eig<2> e = eig_sym(u_prev.C.sym_at(i));
            const Sym2 r = apply_eig(e, [this](double b) { return model_->relax_rate(b); });
            crhs.c[0][i] += r(0, 0);
            crhs.c[1][i] += r(0, 1);
            crhs.c[2][i] += r(1, 1);
        }
    }
    dealias(crhs);
    MatField cnew(g, u_prev.C.full);
    for (int k = 0; k < cnew.ncomp(); ++k)
        for (std::size_t i = 0; i < cnew.c[k].size(); ++i)
            cnew.c[k][i] = u_prev.C.c[k][i] + tau * crhs.c[k][i];

    if (relaxing) {
        auto solve_relax = [&](double c) {
            // monotone scalar equation b + tau r(b) = c on (0, inf)
            if (c + tau * model_->relax_rate(c) == c) return c;  // exact fixed point
            double lo = 1e-14, hi = std::max(c, 1.0);
            if (lo + tau * model_->relax_rate(lo) - c > 0) return lo;
            int guard = 0;
            while (hi + tau * model_->relax_rate(hi) - c < 0 && guard++ < 200) hi *= 2;
            for (int it = 0; it < 80; ++it) {
                const double mid = 0.5 * (lo + hi);
                if (mid + tau * model_->relax_rate(mid) - c <= 0)
                    lo = mid;
                else
                    hi = mid;
            }
            return 0.5 * (lo + hi);
        };
        for (std::size_t i = 0; i < cnew.c[0].size(); ++i) {
            const Eig<2> e = eig_sym(cnew.sym_at(i));
            const Sym2 s = apply_eig(e, solve_relax);
            cnew.c[0][i] = s(0, 0);
            cnew.c[1][i] = s(0, 1);
            cnew.c[2][i] = s(1, 1);
        }
        dealias(cnew);
        for (std::size_t i = 0; i < cnew.c[0].size(); ++i)
            if (min_eigenvalue(cnew.sym_at(i)) <= kSpdFloor)
                throw SpdLost("baseline_step: conformation lost positivity", n,
                              static_cast<long>(i));
        cnew.spd = true;
    }
    return State{std::move(vnew), std::move(cnew)};
}

// ---------------------------------------------------------------------------
// Closed-form sup over the rescaling c in [0, c_max] of one ray:
// F(c) = slack + tau * kmult * (k0 + a c + b c^2) - s c g_j, concave when
// kmult <= 0 (which feasibility guarantees up to roundoff).

double Scheme::sup_over_rays(double slack, double kmult, const std::vector<double>& g,
                             int* worst_shape, double* worst_c, int* worst_orient) const {
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < tfds_.size(); ++j) {
        for (int orient = 0; orient < 2; ++orient) {
            const double s = orient ? -1.0 : 1.0;
            const KPoly kp = model_->k_poly(tfds_[j].norms, orient);
            const double q2 = cfg_.tau * kmult * kp.b;
            const double q1 = cfg_.tau * kmult * kp.a - s * g[j];
            const double q0 = slack + cfg_.tau * kmult * kp.k0;
            auto f = [&](double c) { return q0 + q1 * c + q2 * c * c; };
            double cbest = f(0.0) >= f(cfg_.c_max) ? 0.0 : cfg_.c_max;
            double fbest = std::max(f(0.0), f(cfg_.c_max));
            if (q2 < 0) {
                const double cv = -q1 / (2.0 * q2);
                if (cv > 0 && cv < cfg_.c_max && f(cv) > fbest) {
                    fbest = f(cv);
                    cbest = cv;
                }
            }
            if (fbest > best) {
                best = fbest;
                if (worst_shape) *worst_shape = static_cast<int>(j);
                if (worst_c) *worst_c = cbest;
                if (worst_orient) *worst_orient = orient;
            }
        }
    }
    return best;
}

std::pair<State, double> Scheme::minmax_step(const State& u_prev, double e_prev, long n) const {
    const double tau = cfg_.tau;
    const StepData sd = step_data(n);
    const double tol_abs = cfg_.tol_saddle * (1.0 + e_prev);
    const std::size_t nb = tfds_.size(), nd = dirs_.size();

    struct Eval {
        double e = 0, psi = 0, slack = 0;
        std::vector<double> g;
    };
    std::vector<double> pair_prev(nb);
    for (std::size_t j = 0; j < nb; ++j) pair_prev[j] = model_->pair_state(u_prev, tfds_[j]);

    auto evaluate = [&](const State& u, Eval& ev) {
        ev.e = model_->energy(u);
        if (!std::isfinite(ev.e)) return false;
        ev.psi = model_->dissipation(u, sd);
        ev.slack = ev.e + tau * ev.psi - e_prev;
        const AFlux flux = model_->assemble_flux(u, sd);
        ev.g.resize(nb);
        for (std::size_t j = 0; j < nb; ++j)
            ev.g[j] = model_->pair_state(u, tfds_[j]) - pair_prev[j] +
                      tau * flux_pairing(flux, tfds_[j]);
        return true;
    };
    auto ensure_feasible = [&](State& u, Eval& ev) {
        if (!evaluate(u, ev) || ev.slack > 0) {
            if (std::isfinite(model_->energy(u))) {
                u = feasibility_alpha(*model_, model_->subdiff_energy(u), e_prev, sd, tau).second;
            } else {
                u = feasibility_alpha(*model_, model_->subdiff_energy(u_prev), e_prev, sd, tau)
                        .second;
            }
            evaluate(u, ev);
        }
    };

    State u;
    try {
        u = baseline_step(u_prev, n);
    } catch (const SpdLost&) {
        u = u_prev;  // warm start falls back to the previous state
    }
    Eval ev;
    ensure_feasible(u, ev);

    double sup = std::numeric_limits<double>::infinity();
    for (int outer = 0; outer < cfg_.outer_iters; ++outer) {
        sup = sup_over_rays(ev.slack, ev.e - e_prev - tau * sd.c_psi, ev.g, nullptr, nullptr,
                            nullptr);
        if (sup <= tol_abs && ev.slack <= 1e-9 * (1.0 + e_prev)) return {std::move(u), sup};

        // quasi-Newton on g(U) = 0 in the direction subspace (Jacobian frozen
        // across the inner iterations)
        std::vector<std::vector<double>> jac(nb, std::vector<double>(nd));
        for (std::size_t k = 0; k < nd; ++k) {
            const AFlux fd = model_->assemble_flux_dir(u, dirs_[k]);
            for (std::size_t j = 0; j < nb; ++j)
                jac[j][k] = pair0_[j][k] + tau * flux_pairing(fd, tfds_[j]);
        }
        for (int inner = 0; inner < cfg_.inner_iters; ++inner) {
            const double gn = norm2(ev.g);
            if (gn <= 1e-13 * (1.0 + e_prev)) break;
            // least squares via normal equations (consistent: g is linear in
            // the test function, so dependent shapes give dependent rows)
            std::vector<std::vector<double>> ata(nd, std::vector<double>(nd, 0.0));
            std::vector<double> atb(nd, 0.0);
            for (std::size_t j = 0; j < nb; ++j)
                for (std::size_t k = 0; k < nd; ++k) {
                    atb[k] -= jac[j][k] * ev.g[j];
                    for (std::size_t l = k; l < nd; ++l) ata[k][l] += jac[j][k] * jac[j][l];
                }
            for (std::size_t k = 0; k < nd; ++k)
                for (std::size_t l = 0; l < k; ++l) ata[k][l] = ata[l][k];
            const std::vector<double> x = solve_spd(std::move(ata), std::move(atb));
            if (norm2(x) <= 1e-15) break;
            double step = 1.0;
            bool moved = false;
            for (int bt = 0; bt < 30 && !moved; ++bt, step *= 0.5) {
                State u_try = u;
                for (std::size_t k = 0; k < nd; ++k) state_axpy(u_try, step * x[k], dirs_[k]);
                Eval ev_try;
                if (!evaluate(u_try, ev_try)) continue;
                if (norm2(ev_try.g) <= (1.0 - 0.25 * step) * gn) {
                    u = std::move(u_try);
                    ev = std::move(ev_try);
                    moved = true;
                }
            }
            if (!moved) break;
        }
        ensure_feasible(u, ev);
    }

    // projected-subgradient polish on the worst ray
    sup = sup_over_rays(ev.slack, ev.e - e_prev - tau * sd.c_psi, ev.g, nullptr, nullptr, nullptr);
    for (int it = 0; it < cfg_.inner_iters && sup > tol_abs; ++it) {
        int wj = 0, worient = 0;
        double wc = 0;
        sup = sup_over_rays(ev.slack, ev.e - e_prev - tau * sd.c_psi, ev.g, &wj, &wc, &worient);
        const double s = worient ? -1.0 : 1.0;
        const double kw = model_->k_poly(tfds_[wj].norms, worient).eval(wc);
        const DualState de = model_->subdiff_energy(u);
        std::vector<double> grad(nd);
        double gnorm2 = 0;
        for (std::size_t k = 0; k < nd; ++k) {
            const AFlux fd = model_->assemble_flux_dir(u, dirs_[k]);
            grad[k] = (inner(de.w, dirs_[k].v) + inner(de.tau, dirs_[k].C)) * (1.0 + tau * kw) -
                      wc * s * pair0_[wj][k] + tau * model_->d_dissipation(u, dirs_[k], sd) -
                      tau * wc * s * flux_pairing(fd, tfds_[wj]);
            gnorm2 += grad[k] * grad[k];
        }
        if (gnorm2 <= 1e-28) break;
        double eta = 1.0 / (1.0 + std::sqrt(gnorm2));
        bool moved = false;
        for (int bt = 0; bt < 30 && !moved; ++bt, eta *= 0.5) {
            State u_try = u;
            for (std::size_t k = 0; k < nd; ++k) state_axpy(u_try, -eta * grad[k], dirs_[k]);
            Eval ev_try;
            if (!evaluate(u_try, ev_try)) continue;
            if (ev_try.slack > 0) {
                u_try = feasibility_alpha(*model_, model_->subdiff_energy(u_try), e_prev, sd, tau)
                            .second;
                if (!evaluate(u_try, ev_try)) continue;
            }
            const double sup_try = sup_over_rays(
                ev_try.slack, ev_try.e - e_prev - tau * sd.c_psi, ev_try.g, nullptr, nullptr,
                nullptr);
            if (sup_try < sup - 1e-2 * eta * gnorm2) {
                u = std::move(u_try);
                ev = std::move(ev_try);
                sup = sup_try;
                moved = true;
            }
        }
        if (!moved) break;
    }

    if (sup <= tol_abs && ev.slack <= 1e-9 * (1.0 + e_prev)) return {std::move(u), sup};
    throw SaddleNotConverged("minmax_step: iteration budget exhausted with positive sup", sup);
}

// ---------------------------------------------------------------------------

AugmentedTrajectory Scheme::run(const State& u0) const {
    AugmentedTrajectory tr;
    tr.tau = cfg_.tau;
    tr.start_step = cfg_.start_step;
    const double e0 = model_->energy(u0);
    if (!std::isfinite(e0)) throw OutsideDomain("scheme run: initial state outside dom E");

    const double t0 = static_cast<double>(cfg_.start_step) * cfg_.tau;
    tr.times.push_back(t0);
    tr.states.push_back(u0);
    tr.energy.push_back(e0);
    tr.energy_of_state.push_back(e0);
    tr.psi.push_back(model_->dissipation_at(t0, u0));
    tr.c_psi.push_back(model_->c_psi(t0));
    tr.saddle_sup.push_back(0.0);

    for (long i = 1; i <= cfg_.n_steps; ++i) {
        const long n = cfg_.start_step + i;
        State u;
        double sup = 0.0;
        if (cfg_.mode == SchemeMode::minmax) {
            auto [un, s] = minmax_step(tr.states.back(), tr.energy.back(), n);
            u = std::move(un);
            sup = s;
        } else {
            u = baseline_step(tr.states.back(), n);
        }
        const StepData sd = step_data(n);
        const double e = model_->energy(u);
        tr.times.push_back(static_cast<double>(n) * cfg_.tau);
        tr.energy.push_back(e);
        tr.energy_of_state.push_back(e);
        tr.psi.push_back(model_->dissipation(u, sd));
        tr.c_psi.push_back(sd.c_psi);
        tr.saddle_sup.push_back(sup);
        tr.states.push_back(std::move(u));
    }
    return tr;
}

void write_energy_csv(const std::string& path, const AugmentedTrajectory& tr) {
    std::FILE* f = std::fopen(path.c_str(), "w");
    if (!f) throw ConfigError("write_energy_csv: cannot open " + path);
    std::fprintf(f, "t,E,energy_of_state,dissipation,c_psi,tv_running\n");
    double tv = 0;
    for (std::size_t i = 0; i < tr.times.size(); ++i) {
        if (i > 0) tv += std::abs(tr.energy[i] - tr.energy[i - 1]);
        std::fprintf(f, "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", tr.times[i], tr.energy[i],
                     tr.energy_of_state[i], tr.psi[i], tr.c_psi[i], tv);
    }
    std::fclose(f);
}

}  // namespace evf
