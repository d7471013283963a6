// The three concrete models built on the generic contract of model.hpp:
//
//  * ModelQ   — regularized Oldroyd-B: SPD conformation B, energy density
//               (1-beta) tr(B - I - log B) + (beta/2)|B - I|^2.
//  * ModelS   — symmetrized Neo-Hookean: symmetric positive deformation F,
//               energy density (|F|^2 - |I|^2 - log det F^2)/2.
//  * ModelLLZ — quadratic Lin-Liu-Zhang model: general matrix F, energy
//               |F|^2/2, transport stretched by the full velocity gradient.
#pragma once

#include <memory>

#include "evf/model.hpp"

namespace evf {

struct ParamsQ {
    double mu = 1.0;     // > 0
    double alpha = 1.0;  // != 0
    double beta = 0.5;   // in (0,1)
    double delta = 1.0;  // > 0
};

struct ParamsS {
    double mu = 1.0;    // > 0
    double alpha = 1.0; // != 0
    double mu_p = 1.0;  // > 0
};

struct ParamsLLZ {
    double mu = 1.0;  // > 0
};

class ModelQ : public Model {
  public:
    ModelQ(const Grid& g, ParamsQ p, Forcing forcing = {});

    std::string name() const override { return "model_q"; }
    double mu() const override { return p_.mu; }
    const ParamsQ& params() const { return p_; }

    double energy(const State& s) const override;
    double dissipation(const State& s, const StepData& sd) const override;
    DualState subdiff_energy(const State& s) const override;
    State subdiff_conjugate(const DualState& z) const override;
    DualState hessian_apply(const State& s, const State& dir) const override;
    AFlux assemble_flux(const State& s, const StepData& sd) const override;
    AFlux assemble_flux_dir(const State& s, const State& dir) const override;
    double d_dissipation(const State& s, const State& dir, const StepData& sd) const override;
    KPoly k_poly(const KNorms& norms, int orient) const override;
    double c_psi(double t) const override;
    double relax_rate(double b) const override { return b - 1.0 + p_.delta * (b * b - b); }

  private:
    ParamsQ p_;
};

class ModelS : public Model {
  public:
    ModelS(const Grid& g, ParamsS p, Forcing forcing = {});

    std::string name() const override { return "model_s"; }
    double mu() const override { return p_.mu; }
    const ParamsS& params() const { return p_; }

    double energy(const State& s) const override;
    double dissipation(const State& s, const StepData& sd) const override;
    DualState subdiff_energy(const State& s) const override;
    State subdiff_conjugate(const DualState& z) const override;
    DualState hessian_apply(const State& s, const State& dir) const override;
    AFlux assemble_flux(const State& s, const StepData& sd) const override;
    AFlux assemble_flux_dir(const State& s, const State& dir) const override;
    double d_dissipation(const State& s, const State& dir, const StepData& sd) const override;
    KPoly k_poly(const KNorms& norms, int orient) const override;
    double c_psi(double t) const override;
    double relax_rate(double b) const override { return (b - 1.0 / b) / p_.mu_p; }

  private:
    ParamsS p_;
};

class ModelLLZ : public Model {
  public:
    ModelLLZ(const Grid& g, ParamsLLZ p, Forcing forcing = {});

    std::string name() const override { return "model_llz"; }
    bool full_c() const override { return true; }
    double mu() const override { return p_.mu; }
    const ParamsLLZ& params() const { return p_; }

    double energy(const State& s) const override;
    double dissipation(const State& s, const StepData& sd) const override;
    DualState subdiff_energy(const State& s) const override;
    State subdiff_conjugate(const DualState& z) const override;
    DualState hessian_apply(const State& s, const State& dir) const override;
    AFlux assemble_flux(const State& s, const StepData& sd) const override;
    AFlux assemble_flux_dir(const State& s, const State& dir) const override;
    double d_dissipation(const State& s, const State& dir, const StepData& sd) const override;
    KPoly k_poly(const KNorms& norms, int orient) const override;
    double c_psi(double t) const override;
    double relax_rate(double) const override { return 0.0; }

  private:
    ParamsLLZ p_;
};

}  // namespace evf
