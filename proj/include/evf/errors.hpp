// Error taxonomy shared by all layers.  Every failure mode named in the
// public API contracts maps to one of these types so callers (and the CLI
// exit-code logic) can distinguish configuration errors from numerical ones.
#pragma once

#include <stdexcept>
#include <string>

namespace evf {

// Base class: anything thrown by this library derives from Error.
struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// A matrix expected to be symmetric positive definite has an eigenvalue at or
// below the SPD floor.
struct NotPositiveDefinite : Error {
    explicit NotPositiveDefinite(const std::string& msg) : Error(msg) {}
};

// The angular-velocity solve is requested for a matrix whose invariant
// denominator is (numerically) singular.
struct DegenerateInvariants : Error {
    explicit DegenerateInvariants(const std::string& msg) : Error(msg) {}
};

// Two fields from different grids were combined.
struct GridMismatch : Error {
    explicit GridMismatch(const std::string& msg) : Error(msg) {}
};

// A state lies outside the domain of the energy / dissipation functional.
struct OutsideDomain : Error {
    explicit OutsideDomain(const std::string& msg) : Error(msg) {}
};

// A time stepper lost positive definiteness of the conformation field.
struct SpdLost : Error {
    SpdLost(const std::string& msg, int step_, int node_)
        : Error(msg), step(step_), node(node_) {}
    int step;
    int node;
};

// The min-max step exhausted its iteration budget with a positive sup.
struct SaddleNotConverged : Error {
    SaddleNotConverged(const std::string& msg, double sup_)
        : Error(msg), sup(sup_) {}
    double sup;
};

// Bad or inconsistent run configuration.
struct ConfigError : Error {
    explicit ConfigError(const std::string& msg) : Error(msg) {}
};

// Diagnostics asked to evaluate at times not on the stored grid.
struct Misaligned : Error {
    explicit Misaligned(const std::string& msg) : Error(msg) {}
};

// Strong-solution regularity gate violated (Gronwall report refused).
struct GateViolation : Error {
    explicit GateViolation(const std::string& msg) : Error(msg) {}
};

}  // namespace evf
