// Generic model contract: energy E, dissipation Psi, operator A, regularity
// weight K, the convex-conjugate derivative pair DE / DE*, and the energy
// Hessian, together with automated checkers for the structural identities
// every concrete model must satisfy (Fenchel equivalences, the
// dissipation identity <A(DE*(Phi)), Phi> = Psi(DE*(Phi)), and convexity of
// U -> Psi(U) - <A(U), Phi> + K(Phi) E(U)).
//
// The state is U = (v, C): a solenoidal velocity plus a matrix-valued
// conformation/deformation field.  Test functions are pairs (phi, sigma)
// with phi solenoidal and sigma symmetric, optionally carrying a scalar
// C^1 time coefficient.
#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "evf/grid.hpp"

namespace evf {

// ---------------------------------------------------------------------------

struct State {
    VectorField v;
    MatField C;

    State() = default;
    State(VectorField v_, MatField c_) : v(std::move(v_)), C(std::move(c_)) {}
};

struct DualState {
    VectorField w;
    MatField tau;
};

// u += a * dir (velocity keeps its solenoidal flag only if dir is solenoidal)
void state_axpy(State& u, double a, const State& dir);
State state_lincomb(double a, const State& x, double b, const State& y);

// ---------------------------------------------------------------------------
// Test functions Phi = (phi, sigma), with an optional scalar time path.

struct TestFunction {
    VectorField phi;   // solenoidal
    MatField sigma;    // packed symmetric
    enum class TimeCoef { constant, cosine } tc = TimeCoef::constant;
    double omega = 0.0;  // coefficient is cos(omega * t) when tc == cosine

    double coef(double t) const {
        return tc == TimeCoef::cosine ? std::cos(omega * t) : 1.0;
    }
};

// Norms entering the regularity weights, precomputed per shape.  The
// negative-part norms are orientation dependent (neg part of -M is the
// positive part of M), so both orientations are stored.
struct KNorms {
    double gradphi_sym_neg[2] = {0, 0};  // ||(grad(+/-phi))_{sym,-}||_inf
    double gradphi_sym_inf = 0;          // ||(grad phi)_sym||_inf (spectral norm)
    double gradphi_inf = 0;              // ||grad phi||_inf (Frobenius)
    double sigma_inf = 0;                // ||sigma||_inf (spectral norm)
    double sigma_neg[2] = {0, 0};        // ||(+/-sigma)_-||_inf
    double gradsigma_l3_sq = 0;          // ||grad sigma||_{L^3}^2
};

// Derivative fields + norms for one test-function shape.
struct TestFunctionData {
    TestFunction tf;
    MatField grad_phi;          // full layout
    MatField dsig_dx, dsig_dy;  // packed symmetric
    KNorms norms;
};

TestFunctionData prepare_test_function(const TestFunction& tf);

// Regularity weight along the ray c * Phi, c >= 0:
// K(c Phi) = k0 + a c + b c^2 (all coefficients nonnegative; k0 collects the
// Phi-independent constant, a the L^inf gradient terms, b the quadratic
// sigma terms).
struct KPoly {
    double k0 = 0, a = 0, b = 0;
    double eval(double c) const { return k0 + a * c + b * c * c; }
};

// ---------------------------------------------------------------------------
// Forcing: a time-indexed solenoidal velocity load, plus an optional
// matrix-valued source for the conformation equation used by manufactured
// solutions.  The dual norm feeding C_Psi(t) = ||f||_*^2 / (2 mu) is the
// discrete H^{-1} norm <f, (-Lap)^{-1} P f> computed spectrally.

struct Forcing {
    // null means zero forcing
    std::function<VectorField(const Grid&, double)> velocity;
    // null means no conformation source
    std::function<MatField(const Grid&, double)> conformation;
};

// One band-limited forcing mode: amplitude vector times cos(k.x + phase) *
// cos(omega t); the assembled field is Leray projected.
struct ForcingMode {
    int kx = 0, ky = 0;
    double ax = 0, ay = 0;
    double omega = 0, phase = 0;
};
Forcing make_mode_forcing(std::vector<ForcingMode> modes);

double dual_norm_sq(const Grid& g, const VectorField& f);

// Time-interval data consumed by one evaluation: the (possibly averaged)
// forcing field, optional conformation source, and the averaged C_Psi bound.
struct StepData {
    VectorField fbar;    // empty (g == nullptr) means zero
    MatField srcbar;     // empty means none
    double c_psi = 0.0;
    bool has_f = false;
    bool has_src = false;
};

// ---------------------------------------------------------------------------
// Flux form of the operator pairing.  For every model,
//   <A(t,U), (phi, sigma)> = int P : grad phi  +  R : sigma
//                           + Tx : d sigma/dx + Ty : d sigma/dy  -  fbar . phi,
// so one assembly serves any number of test functions.
struct AFlux {
    MatField P;        // pairs with grad phi (full layout)
    MatField R;        // pairs with sigma
    MatField Tx, Ty;   // pair with the sigma derivatives (transport)
    const VectorField* fbar = nullptr;  // borrowed from StepData
};

double flux_pairing(const AFlux& flux, const TestFunctionData& tfd);

// ---------------------------------------------------------------------------

class Model {
  public:
    explicit Model(const Grid& g, Forcing forcing) : grid_(&g), forcing_(std::move(forcing)) {}
    virtual ~Model() = default;

    const Grid& grid() const { return *grid_; }
    const Forcing& forcing() const { return forcing_; }

    virtual std::string name() const = 0;
    virtual bool full_c() const { return false; }  // conformation layout
    virtual double mu() const = 0;
    virtual State minimizer() const;

    // --- core functionals --------------------------------------------------
    // Energy; +infinity off the admissible cone (never throws for that).
    virtual double energy(const State& s) const = 0;
    // Dissipation Psi(t, .) with the time data already folded in.  Throws
    // OutsideDomain off the admissible cone.
    virtual double dissipation(const State& s, const StepData& sd) const = 0;
    virtual DualState subdiff_energy(const State& s) const = 0;
    virtual State subdiff_conjugate(const DualState& z) const = 0;
    virtual DualState hessian_apply(const State& s, const State& dir) const = 0;

    // Operator pairing pieces: full flux for the state, and the directional
    // derivative flux <DA(s)[dir], .> (forcing-free).
    virtual AFlux assemble_flux(const State& s, const StepData& sd) const = 0;
    virtual AFlux assemble_flux_dir(const State& s, const State& dir) const = 0;
    // <DPsi(s), dir>
    virtual double d_dissipation(const State& s, const State& dir, const StepData& sd) const = 0;

    // Regularity weight along a ray; orient selects the sign of the shape
    // (0: +Phi, 1: -Phi) for the orientation-dependent negative-part norms.
    virtual KPoly k_poly(const KNorms& norms, int orient) const = 0;
    double reg_weight_k(const TestFunctionData& tfd, double c = 1.0) const;

    // Forcing bound C_Psi(t) >= -inf Psi(t, .): model-specific combination of
    // the dual forcing norm and (if present) the conformation-source bound.
    virtual double c_psi(double t) const = 0;

    // Scalar relaxation rate r(b) per conformation eigenvalue, i.e. the
    // relaxation part of the conformation reaction as a matrix function of C.
    // Used by the semi-implicit baseline stepper; zero for quadratic models.
    virtual double relax_rate(double b) const = 0;

    // --- convenience evaluations at a point in time ------------------------
    StepData at_time(double t) const;               // pointwise data
    StepData time_average(double t0, double t1) const;  // 2-point Gauss
    double dissipation_at(double t, const State& s) const;
    double operator_a(double t, const State& s, const TestFunctionData& tfd) const;

    // <U, (phi, sigma)> against a prepared shape (no time coefficient).
    double pair_state(const State& u, const TestFunctionData& tfd) const;

  protected:
    double forcing_c_psi(double t) const;  // ||f(t)||_*^2 / (2 mu)

    const Grid* grid_;
    Forcing forcing_;
};

// ---------------------------------------------------------------------------
// Structural checkers.

struct CheckRecord {
    std::string check;
    std::string model;
    double residual = 0;
    double tolerance = 0;
    bool pass = false;
};

// Random state in the interior of dom E (SPD conformation for symmetric
// models, generic matrix for quadratic ones); solenoidal velocity.
State random_admissible_state(const Model& m, std::uint64_t seed, int k_max = 3,
                              double scale = 0.4);

// |E(s) + E*(DE(s)) - <DE(s), s>| / (1 + |E(s)|), with
// E*(z) evaluated as <z, DE*(z)> - E(DE*(z)).
double fenchel_young_gap(const Model& m, const State& s);
// || DE*(DE(s)) - s ||_inf over all nodes/components.
double fenchel_roundtrip_error(const Model& m, const State& s);

// |<A(t, DE*(Phi)), Phi> - Psi(t, DE*(Phi))| / (1 + |Psi|).
double check_adiss(const Model& m, double t, const TestFunction& tf);

// Worst signed midpoint-convexity violation of
// G(s) = Psi(t,s) - <A(t,s), Phi> + K(Phi) E(s) over random admissible pairs;
// violations are normalized by max(|G(s1)|, |G(s2)|, 1).
double check_convexity(const Model& m, double t, const TestFunction& tf, int trials,
                       std::uint64_t seed);

}  // namespace evf
