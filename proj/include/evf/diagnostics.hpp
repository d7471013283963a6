// Trajectory certification: the variational-inequality residual against a
// test basis, the weak-formulation probe via two-sided rescalings, relative
// energy / relative dissipation between a generalized and a strong
// trajectory, the Gronwall weak-strong envelope, BV post-processing of the
// auxiliary energy, and the non-convexity witness for the Peterlin
// dissipation form.
#pragma once

#include <functional>
#include <string>
#include <vector>

#include "evf/models.hpp"
#include "evf/scheme.hpp"

namespace evf {

// Default 24-member test basis: 8 solenoidal velocity shapes (lowest
// wavenumbers, built from stream functions so they are discretely
// divergence-free), 8 constant/low-mode symmetric stress shapes including
// definite ones of both signs, and 8 mixed velocity+stress shapes carrying
// cos(pi k t / horizon) time coefficients.
std::vector<TestFunction> default_test_basis(const Grid& g, double horizon);

// ---------------------------------------------------------------------------
// Variational-inequality residual.  For a stored trajectory and a test
// function Phi(t) = theta(t) * shape, the left-hand side over (t_m, t_M] is
// the telescoped per-step objective sum
//   [E - <U, Phi>] bracket + sum <U^n, Phi^n - Phi^{n-1}>
//   + sum tau [Psi^n - <A^n(U^n), Phi^{n-1}> + K(Phi^{n-1})(E^n - E^{n-1} - tau C^n)],
// which a solution must keep <= evi_tol for every basis member and every
// grid-aligned pair s < t.

struct EviEntry {
    int shape = 0;
    double s = 0, t = 0;
    double lhs = 0;
    bool pass = false;
};

struct EviReport {
    std::vector<EviEntry> entries;
    double worst = 0;  // max lhs over all entries
    double tol = 0;
    bool pass = false;
    std::string basis_description;
};

double evi_residual(const Model& m, const AugmentedTrajectory& traj, const TestFunction& tf,
                    double s, double t);

EviReport evi_check(const Model& m, const AugmentedTrajectory& traj,
                    const std::vector<TestFunction>& basis, double evi_tol, int stride = 8);

// Weak-formulation probe: odd part of the inequality under Phi = +-Theta/alpha.
// The energy-defect weight multiplies E - E(U), which vanishes identically at
// step resolution, so the extracted residual is exactly alpha-independent;
// `gap` records the spread across the sampled alphas as a consistency check.
struct WeakProbeReport {
    std::vector<double> alphas;
    std::vector<double> residual;  // odd-part residual per alpha
    double extrapolated = 0;       // value at the smallest alpha
    double gap = 0;                // max - min over alphas
};

WeakProbeReport weak_solution_probe(const Model& m, const AugmentedTrajectory& traj,
                                    const TestFunction& theta, const std::vector<double>& alphas);

// ---------------------------------------------------------------------------
// Relative energy / relative dissipation.

// Generic Bregman form R = E - energy(ut) - <DE(ut), u - ut>, valid for any
// model; ut must lie in the interior of dom E.
double relative_energy(const Model& m, const State& u, double e_slack, const State& ut);

// Model-Q trace form: E - energy(u) + int 1/2|dv|^2 + beta/2 |dB|^2
// + (1-beta) tr(Bt^{-1} B - I - log(Bt^{-1} B)); agrees with the generic form.
double relative_energy_q(const ModelQ& m, const State& u, double e_slack, const State& ut);

// Generic relative dissipation: second-order remainder of
// G(s) = Psi(t,s) - <A(t,s), Phi~> + K(Phi~) E(s) at ut in direction u - ut,
// with Phi~ = DE(ut); nonnegative by convexity.
double relative_dissipation(const Model& m, const State& u, const State& ut, double t);

// Model-Q grouped trace form, assembled term by term.
double relative_dissipation_q(const ModelQ& m, const State& u, const State& ut, double t);

// ---------------------------------------------------------------------------
// Gronwall weak-strong comparison.  strong(t) samples the comparison
// trajectory; strong_dt is its time derivative (pass nullptr to use centered
// differences of the samples).  Throws GateViolation if the strong
// trajectory leaves the regularity gate det C >= 1e-3.
struct GronwallReport {
    std::vector<double> times;
    std::vector<double> R;         // relative energy
    std::vector<double> K;         // regularity weight at DE(strong)
    std::vector<double> resid;     // |<dUt/dt + A(Ut), D2E(Ut)(U - Ut)>|
    std::vector<double> envelope;  // R(0) e^{int K} + int resid e^{int K}
    double worst_margin = 0;       // max R - envelope
    bool pass = false;
};

GronwallReport gronwall_weak_strong(const Model& m, const AugmentedTrajectory& traj,
                                    const std::function<State(double)>& strong,
                                    const std::function<State(double)>& strong_dt);

// ---------------------------------------------------------------------------
// BV structure of the auxiliary energy series.
struct BvReport {
    double tv = 0;
    std::vector<std::size_t> upward_jumps;  // indices with E_i > E_{i-1}
    bool monotone = false;
};

BvReport bv_postprocess(const std::vector<double>& energy_series);

// ---------------------------------------------------------------------------
// Non-convexity witness for the Peterlin-type dissipation form
//   <DDS(B), (G, G)> = -2 tr(G) tr(B^{-1} G B^{-1}) + 2 tr(B) tr(B^{-1} G B^{-1} G B^{-1}).
double peterlin_form(const Sym2& b, const Sym2& g, double eta = 0.0);

struct PeterlinWitness {
    Sym2 b, g;
    double value = 0;
};

// Documented witness plus deterministic local search for an even lower value.
PeterlinWitness peterlin_nonconvexity_witness();

// ---------------------------------------------------------------------------
// Manufactured exact solution for the Neo-Hookean model: a band-limited
// analytic pair (v~, F~)(t) together with the forcing and matrix source that
// make it an exact solution of the space-discrete system.  Used by the
// weak-strong and convergence experiments.
class ManufacturedS {
  public:
    ManufacturedS(const Grid& g, ParamsS params, double amp_v = 0.25, double amp_c = 0.2,
                  double omega = 1.3);

    State at(double t) const;
    State dt_at(double t) const;
    Forcing forcing() const;  // functors keep this object alive by reference

  private:
    const Grid* g_;
    std::shared_ptr<ModelS> base_;  // source-free evaluator
    VectorField vshape_;
    MatField cshape_;
    double amp_v_, amp_c_, omega_;
};

// CSV emission (17 significant digits, stable column order).
void write_diagnostics_csv(const std::string& path, const std::vector<CheckRecord>& records);
void write_relenergy_csv(const std::string& path, const GronwallReport& report);

}  // namespace evf
