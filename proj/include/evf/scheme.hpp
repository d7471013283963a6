// Constrained min-max time stepping.  One step solves
//
//   U^n = argmin_{D^n} sup_Phi F^n(U | Phi),
//   F^n(U|Phi) = E(U) - E^{n-1} + (E(U) - E^{n-1} - tau C^n) tau K(Phi)
//                - <U - U^{n-1}, Phi> + tau Psi^n(U) - tau <A^n(U), Phi>,
//   D^n = { U : E(U) + tau Psi^n(U) <= E^{n-1} },
//
// with the sup restricted to nonnegative scalar rescalings of a finite test
// basis (both orientations).  The minimizer is found by a damped
// quasi-Newton solve of the basis-tested implicit equations
// g_j(U) = <U - U^{n-1}, Phi_j> + tau <A^n(U), Phi_j> = 0 in the span of the
// basis shapes, combined with the feasibility retraction U -> DE*(alpha
// DE(U)) along the conjugate path whenever the D^n constraint is violated;
// a projected-subgradient polish on the worst ray runs if the Newton phase
// leaves a positive sup.  Any feasible state with g_j = 0 has
// sup_c F^n(U | c Phi_j) <= 0, since F^n(U|0) <= 0 and the ray profile is
// concave, which is what makes the saddle tolerance attainable.
//
// A semi-implicit baseline stepper (viscosity and relaxation implicit,
// transport and stretching explicit with dealiasing) provides the warm-start
// candidate and manufactures quasi-strong comparison trajectories.
#pragma once

#include <utility>
#include <vector>

#include "evf/model.hpp"

namespace evf {

enum class SchemeMode { minmax, baseline };

struct SchemeConfig {
    double tau = 1.0 / 256.0;
    long n_steps = 256;
    SchemeMode mode = SchemeMode::minmax;
    std::vector<TestFunction> basis;  // spatial shapes; required in minmax mode
    int inner_iters = 30;
    int outer_iters = 8;
    double tol_saddle = 1e-8;  // relative: accepted when sup <= tol*(1+E_prev)
    double c_max = 4.0;        // ray rescaling range [0, c_max]
    std::uint64_t seed = 0;
    long start_step = 0;  // global index of the first step (restart support)
};

// Discrete trajectory with the auxiliary energy bookkeeping.  energy[i] is
// the slack variable E_i (equal to energy_of_state at step resolution);
// psi[i] and c_psi[i] are the per-step time averages entering the discrete
// energy inequality (index i refers to the step ending at times[i]).
struct AugmentedTrajectory {
    double tau = 0;
    long start_step = 0;
    std::vector<double> times;
    std::vector<State> states;
    std::vector<double> energy;
    std::vector<double> energy_of_state;
    std::vector<double> psi;
    std::vector<double> c_psi;
    std::vector<double> saddle_sup;  // accepted sup per step (0 at index 0)
};

// Bisection along the conjugate path: returns (alpha, DE*(alpha phi)) with
// E + tau Psi^n equal to min(target, value at alpha = 1) within 1e-10,
// always returning the feasible (lower) bisection endpoint so the accepted
// state satisfies the constraint with nonpositive slack.
std::pair<double, State> feasibility_alpha(const Model& m, const DualState& phi,
                                           double target_energy, const StepData& sd, double tau);

class Scheme {
  public:
    Scheme(const Model& m, SchemeConfig cfg);

    const SchemeConfig& config() const { return cfg_; }

    // One semi-implicit baseline step; n is the global 1-based step index.
    State baseline_step(const State& u_prev, long n) const;

    // One min-max step; returns (U_n, accepted sup).  E_n = energy(U_n).
    std::pair<State, double> minmax_step(const State& u_prev, double e_prev, long n) const;

    AugmentedTrajectory run(const State& u0) const;

  private:
    struct Ray;  // per-shape closed-form sup helper

    StepData step_data(long n) const;
    double sup_over_rays(double slack, double kmult, const std::vector<double>& g,
                         int* worst_shape, double* worst_c, int* worst_orient) const;

    const Model* model_;
    SchemeConfig cfg_;
    std::vector<TestFunctionData> tfds_;  // prepared basis shapes
    std::vector<State> dirs_;             // orthonormalized solve directions
    std::vector<std::vector<double>> pair0_;  // <D_k, Phi_j>, constant in time
};

void write_energy_csv(const std::string& path, const AugmentedTrajectory& traj);

}  // namespace evf
