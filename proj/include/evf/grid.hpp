// Periodic uniform grid in two dimensions with spectral calculus:
// gradients, divergence, Laplacian, Leray projection, 2/3-rule dealiasing,
// rectangle-rule quadrature (exact for band-limited integrands), reproducible
// band-limited random fields, and binary/CSV snapshot IO.
//
// The domain is the periodic square [0, L)^2 sampled at n x n nodes,
// row-major (node index = iy * n + ix, x = ix * L / n).  Periodicity replaces
// the Dirichlet conditions of the continuous problem: all structural
// integration-by-parts identities used by the models hold exactly on
// band-limited fields, with no boundary terms.
#pragma once

#include <complex>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "evf/errors.hpp"
#include "evf/tensor.hpp"

namespace evf {

struct GridSpec {
    int n = 64;      // points per axis, power of two, >= 8
    double L = 6.283185307179586476925286766559;  // 2*pi default edge length
};

class Fft;  // FFTW wrapper, hidden in grid.cpp

// Shared immutable grid context: wavenumbers, FFT plans, dealias mask, and
// the estimated discrete Sobolev embedding constant used by the K weights.
class Grid {
  public:
    explicit Grid(GridSpec spec);
    ~Grid();
    Grid(const Grid&) = delete;
    Grid& operator=(const Grid&) = delete;

    const GridSpec& spec() const { return spec_; }
    int n() const { return spec_.n; }
    int nodes() const { return spec_.n * spec_.n; }
    double L() const { return spec_.L; }
    double cell_area() const { return (spec_.L / spec_.n) * (spec_.L / spec_.n); }

    // Discrete Sobolev embedding constant C with ||u||_{L^6} <= C ||grad u||_{L^2}
    // on mean-free band-limited scalar fields; estimated once by nonlinear
    // power iteration with a 5% safety factor (an overestimate is safe: C only
    // enlarges the regularity weight).
    double embedding_constant() const { return embedding_c_; }

    // --- plane-level spectral primitives (n*n real arrays) -----------------
    // Derivative of one scalar plane along axis (0 = x, 1 = y).
    void deriv(const std::vector<double>& in, std::vector<double>& out, int axis) const;
    // Remove all modes with max(|kx|,|ky|) > n/3 (2/3-rule) in place.
    void dealias_plane(std::vector<double>& inout) const;
    // Solve -Laplace u = f with zero mean (modes k = 0 dropped).
    void inv_neg_laplacian(const std::vector<double>& in, std::vector<double>& out) const;
    // Apply (1 + c |k|^2)^{-1} (implicit diffusion step) in place.
    void helmholtz_inverse(std::vector<double>& inout, double c) const;
    // Laplacian of a plane.
    void laplacian_plane(const std::vector<double>& in, std::vector<double>& out) const;
    // Leray projection of a velocity pair (vx, vy) in place.
    void leray_planes(std::vector<double>& vx, std::vector<double>& vy) const;
    // Max wavenumber kept by the dealias mask.
    int kmax_dealias() const { return spec_.n / 3; }

  private:
    GridSpec spec_;
    std::unique_ptr<Fft> fft_;
    double embedding_c_ = 0.0;
};

// ---------------------------------------------------------------------------
// Fields.  A field stores its component planes plus a pointer to the shared
// Grid; all combining operations check grid identity.

struct ScalarField {
    const Grid* g = nullptr;
    std::vector<double> v;

    ScalarField() = default;
    explicit ScalarField(const Grid& grid) : g(&grid), v(grid.nodes(), 0.0) {}
};

struct VectorField {
    const Grid* g = nullptr;
    std::vector<double> x, y;
    bool solenoidal = false;  // set only by leray_project / verified constructors

    VectorField() = default;
    explicit VectorField(const Grid& grid)
        : g(&grid), x(grid.nodes(), 0.0), y(grid.nodes(), 0.0) {}
};

// Matrix-valued field.  Layout is either packed-symmetric (xx, xy, yy) or
// full (xx, xy, yx, yy); the full variant backs models whose conformation
// variable carries no symmetry constraint.
struct MatField {
    const Grid* g = nullptr;
    bool full = false;
    bool spd = false;                // set only by verified constructors
    std::vector<double> c[4];        // sym: c[0]=xx c[1]=xy c[2]=yy; full: xx xy yx yy

    MatField() = default;
    MatField(const Grid& grid, bool full_layout) : g(&grid), full(full_layout) {
        for (int k = 0; k < ncomp(); ++k) c[k].assign(grid.nodes(), 0.0);
    }
    int ncomp() const { return full ? 4 : 3; }

    Mat2 at(std::size_t i) const {
        Mat2 m;
        if (full) {
            m(0, 0) = c[0][i]; m(0, 1) = c[1][i];
            m(1, 0) = c[2][i]; m(1, 1) = c[3][i];
        } else {
            m(0, 0) = c[0][i]; m(0, 1) = c[1][i];
            m(1, 0) = c[1][i]; m(1, 1) = c[2][i];
        }
        return m;
    }
    Sym2 sym_at(std::size_t i) const {
        Sym2 s;
        if (full) {
            s(0, 0) = c[0][i]; s(0, 1) = 0.5 * (c[1][i] + c[2][i]); s(1, 1) = c[3][i];
        } else {
            s(0, 0) = c[0][i]; s(0, 1) = c[1][i]; s(1, 1) = c[2][i];
        }
        return s;
    }
    void set(std::size_t i, const Mat2& m) {
        if (full) {
            c[0][i] = m(0, 0); c[1][i] = m(0, 1);
            c[2][i] = m(1, 0); c[3][i] = m(1, 1);
        } else {
            c[0][i] = m(0, 0); c[1][i] = 0.5 * (m(0, 1) + m(1, 0)); c[2][i] = m(1, 1);
        }
    }
    void set(std::size_t i, const Sym2& s) {
        if (full) {
            c[0][i] = s(0, 0); c[1][i] = s(0, 1); c[2][i] = s(0, 1); c[3][i] = s(1, 1);
        } else {
            c[0][i] = s(0, 0); c[1][i] = s(0, 1); c[2][i] = s(1, 1);
        }
    }
};

using SymMatField = MatField;  // packed-symmetric usage

void require_same_grid(const Grid* a, const Grid* b, const char* who);

// ---------------------------------------------------------------------------
// Discrete calculus (spectral; exact on band-limited fields).

VectorField grad(const ScalarField& f);
// (grad v)_{ij} = d v_i / d x_j, returned as a full MatField.
MatField grad_vec(const VectorField& v);
ScalarField div(const VectorField& v);
// (div T)_i = d T_{ij} / d x_j.
VectorField div_mat(const MatField& t);
VectorField laplacian(const VectorField& v);
VectorField leray_project(const VectorField& v);
void dealias(VectorField& v);
void dealias(MatField& t);

double integrate(const ScalarField& f);
// Rectangle-rule inner products (exact for band-limited products).
double inner(const VectorField& a, const VectorField& b);
double inner(const MatField& a, const MatField& b);  // promotes sym<->full
double norm_l2_sq(const VectorField& a);
double norm_l2_sq(const MatField& a);

// ---------------------------------------------------------------------------
// Reproducible band-limited random fields.
//
// Randomness comes from splitmix64 + Box-Muller (libstdc++'s distributions
// are not pinned across versions).  Field = sum over modes 0 < max(|kx|,|ky|)
// <= k_max of decayed Gaussian amplitudes on cos/sin(k.x); amplitude 'scale'.

enum class FieldKind : std::int32_t { scalar = 1, vector = 2, sym = 3, spd = 4, full = 5 };

ScalarField random_scalar_field(const Grid& g, std::uint64_t seed, int k_max, double scale = 1.0);
VectorField random_vector_field(const Grid& g, std::uint64_t seed, int k_max, double scale = 1.0);
MatField random_sym_field(const Grid& g, std::uint64_t seed, int k_max, double scale = 1.0);
MatField random_full_field(const Grid& g, std::uint64_t seed, int k_max, double scale = 1.0);
// identity + perturbation, rescaled so every nodal eigenvalue >= 0.1.
MatField random_spd_field(const Grid& g, std::uint64_t seed, int k_max, double scale = 0.5);

// ---------------------------------------------------------------------------
// Snapshot IO: header {magic "EVFLD1\0\0", i32 d=2, i32 n, f64 L, i32 kind,
// i32 ncomp} then component planes as little-endian float64, row-major.

void write_field(const std::string& path, const VectorField& v);
void write_field(const std::string& path, const MatField& t);
void write_field_csv(const std::string& path, const MatField& t);
void write_field_csv(const std::string& path, const VectorField& v);
// Reads a 2-component (vector) or 3/4-component (matrix) snapshot.
VectorField read_vector_field(const std::string& path, const Grid& g);
MatField read_mat_field(const std::string& path, const Grid& g);

// Deterministic scalar RNG used across the project.
struct SplitMix64 {
    std::uint64_t s;
    explicit SplitMix64(std::uint64_t seed) : s(seed) {}
    std::uint64_t next() {
        std::uint64_t z = (s += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }
    double uniform() {  // in (0,1)
        return (static_cast<double>(next() >> 11) + 0.5) * (1.0 / 9007199254740992.0);
    }
    double normal() {  // Box-Muller, one value per call (second discarded)
        const double u1 = uniform(), u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) *
               std::cos(2.0 * 3.14159265358979323846 * u2);
    }
};

}  // namespace evf
