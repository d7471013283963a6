#include "evf/grid.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>

namespace evf {

// ---------------------------------------------------------------------------
// FFT wrapper.  One shared pair of FFTW_ESTIMATE plans per grid (deterministic
// plan choice) operating on internal buffers; callers copy planes in and out.
// Access is serialized by the project's single-threaded execution model.

class Fft {
  public:
    explicit Fft(int n) : n_(n), nc_(n * (n / 2 + 1)) {
        real_ = fftw_alloc_real(static_cast<std::size_t>(n_) * n_);
        spec_ = fftw_alloc_complex(nc_);
        fwd_ = fftw_plan_dft_r2c_2d(n_, n_, real_, spec_, FFTW_ESTIMATE);
        bwd_ = fftw_plan_dft_c2r_2d(n_, n_, spec_, real_, FFTW_ESTIMATE);
    }
    ~Fft() {
        fftw_destroy_plan(fwd_);
        fftw_destroy_plan(bwd_);
        fftw_free(real_);
        fftw_free(spec_);
    }

    int n() const { return n_; }
    int nc() const { return nc_; }

    // real plane -> spec_ buffer (unnormalized)
    void forward(const std::vector<double>& in) {
        std::memcpy(real_, in.data(), sizeof(double) * in.size());
        fftw_execute(fwd_);
    }
    // spec_ buffer -> real plane (normalized by 1/n^2)
    void backward(std::vector<double>& out) {
        fftw_execute(bwd_);
        const double s = 1.0 / (static_cast<double>(n_) * n_);
        for (std::size_t i = 0; i < out.size(); ++i) out[i] = real_[i] * s;
    }
    fftw_complex* spec() { return spec_; }

  private:
    int n_, nc_;
    double* real_;
    fftw_complex* spec_;
    fftw_plan fwd_, bwd_;
};

namespace {

// Integer wavenumber along y for row index iy.
inline int wavenum(int i, int n) { return (i <= n / 2) ? i : i - n; }

}  // namespace

// ---------------------------------------------------------------------------

Grid::Grid(GridSpec spec) : spec_(spec) {
    if (spec_.n < 8 || (spec_.n & (spec_.n - 1)) != 0)
        throw ConfigError("grid: n must be a power of two >= 8");
    if (!(spec_.L > 0)) throw ConfigError("grid: L must be positive");
    fft_ = std::make_unique<Fft>(spec_.n);

    // Estimate the discrete Sobolev embedding constant sup ||u||_6 / ||grad u||_2
    // over mean-free fields band-limited to the dealias cutoff, by fixed-point
    // ascent: u <- (-Lap)^{-1} dealias(u^5), renormalized.  Deterministic start.
    ScalarField u(*this);
    {
        SplitMix64 rng(0x5eedc057e1b0ULL);
        const int n = spec_.n;
        for (int iy = 0; iy < n; ++iy)
            for (int ix = 0; ix < n; ++ix)
                u.v[static_cast<std::size_t>(iy) * n + ix] =
                    std::sin(2 * 3.14159265358979323846 * ix / n) +
                    0.3 * std::cos(2 * 3.14159265358979323846 * (ix + 2 * iy) / n) +
                    0.1 * rng.normal();
    }
    std::vector<double> w(nodes());
    double c_est = 0.0;
    for (int it = 0; it < 60; ++it) {
        // normalize ||grad u||_2 = 1
        VectorField gu = grad(u);
        double gn = std::sqrt(norm_l2_sq(gu));
        if (!(gn > 0)) break;
        for (auto& x : u.v) x /= gn;
        // current ratio
        ScalarField p6(*this);
        for (std::size_t i = 0; i < u.v.size(); ++i) p6.v[i] = std::pow(std::abs(u.v[i]), 6.0);
        c_est = std::pow(integrate(p6), 1.0 / 6.0);
        // ascent step: u <- (-Lap)^{-1}(u^5), dealiased, mean-free
        for (std::size_t i = 0; i < u.v.size(); ++i)
            w[i] = std::pow(std::abs(u.v[i]), 4.0) * u.v[i];
        dealias_plane(w);
        inv_neg_laplacian(w, u.v);
    }
    embedding_c_ = 1.05 * c_est;
}

Grid::~Grid() = default;

void Grid::deriv(const std::vector<double>& in, std::vector<double>& out, int axis) const {
    const int n = spec_.n;
    const double k0 = 2.0 * 3.14159265358979323846 / spec_.L;
    fft_->forward(in);
    fftw_complex* s = fft_->spec();
    for (int iy = 0; iy < n; ++iy) {
        const int ky = wavenum(iy, n);
        for (int ix = 0; ix <= n / 2; ++ix) {
            const int kx = ix;
            std::size_t idx = static_cast<std::size_t>(iy) * (n / 2 + 1) + ix;
            int kint = (axis == 0) ? kx : ky;
            // Nyquist derivative modes are dropped (odd symmetry).
            if ((axis == 0 && ix == n / 2) || (axis == 1 && iy == n / 2)) kint = 0;
            const double k = k0 * kint;
            const double re = s[idx][0], im = s[idx][1];
            s[idx][0] = -k * im;
            s[idx][1] = k * re;
        }
    }
    out.resize(in.size());
    fft_->backward(out);
}

void Grid::dealias_plane(std::vector<double>& inout) const {
    const int n = spec_.n;
    const int kcut = n / 3;
    fft_->forward(inout);
    fftw_complex* s = fft_->spec();
    for (int iy = 0; iy < n; ++iy) {
        const int ky = std::abs(wavenum(iy, n));
        for (int ix = 0; ix <= n / 2; ++ix) {
            if (ix > kcut || ky > kcut) {
                std::size_t idx = static_cast<std::size_t>(iy) * (n / 2 + 1) + ix;
                s[idx][0] = 0.0;
                s[idx][1] = 0.0;
            }
        }
    }
    fft_->backward(inout);
}

void Grid::inv_neg_laplacian(const std::vector<double>& in, std::vector<double>& out) const {
    const int n = spec_.n;
    const double k0 = 2.0 * 3.14159265358979323846 / spec_.L;
    fft_->forward(in);
    fftw_complex* s = fft_->spec();
    for (int iy = 0; iy < n; ++iy) {
        const int ky = wavenum(iy, n);
        for (int ix = 0; ix <= n / 2; ++ix) {
            std::size_t idx = static_cast<std::size_t>(iy) * (n / 2 + 1) + ix;
            const double k2 = k0 * k0 * (static_cast<double>(ix) * ix + static_cast<double>(ky) * ky);
            if (k2 == 0.0) {
                s[idx][0] = 0.0;
                s[idx][1] = 0.0;
            } else {
                s[idx][0] /= k2;
                s[idx][1] /= k2;
            }
        }
    }
    out.resize(in.size());
    fft_->backward(out);
}

void Grid::helmholtz_inverse(std::vector<double>& inout, double c) const {
    const int n = spec_.n;
    const double k0 = 2.0 * 3.14159265358979323846 / spec_.L;
    fft_->forward(inout);
    fftw_complex* s = fft_->spec();
    for (int iy = 0; iy < n; ++iy) {
        const int ky = wavenum(iy, n);
        for (int ix = 0; ix <= n / 2; ++ix) {
            std::size_t idx = static_cast<std::size_t>(iy) * (n / 2 + 1) + ix;
            const double k2 = k0 * k0 * (static_cast<double>(ix) * ix + static_cast<double>(ky) * ky);
            const double f = 1.0 / (1.0 + c * k2);
            s[idx][0] *= f;
            s[idx][1] *= f;
        }
    }
    fft_->backward(inout);
}

void Grid::laplacian_plane(const std::vector<double>& in, std::vector<double>& out) const {
    const int n = spec_.n;
    const double k0 = 2.0 * 3.14159265358979323846 / spec_.L;
    fft_->forward(in);
    fftw_complex* s = fft_->spec();
    for (int iy = 0; iy < n; ++iy) {
        const int ky = wavenum(iy, n);
        for (int ix = 0; ix <= n / 2; ++ix) {
            std::size_t idx = static_cast<std::size_t>(iy) * (n / 2 + 1) + ix;
            const double k2 = k0 * k0 * (static_cast<double>(ix) * ix + static_cast<double>(ky) * ky);
            s[idx][0] *= -k2;
            s[idx][1] *= -k2;
        }
    }
    out.resize(in.size());
    fft_->backward(out);
}

void Grid::leray_planes(std::vector<double>& vx, std::vector<double>& vy) const {
    const int n = spec_.n;
    // Two transforms share the single spec buffer, so stage the spectra.
    const int nc = fft_->nc();
    std::vector<std::complex<double>> sx(nc), sy(nc);
    fft_->forward(vx);
    for (int i = 0; i < nc; ++i) sx[i] = {fft_->spec()[i][0], fft_->spec()[i][1]};
    fft_->forward(vy);
    for (int i = 0; i < nc; ++i) sy[i] = {fft_->spec()[i][0], fft_->spec()[i][1]};
    for (int iy = 0; iy < n; ++iy) {
        const double ky = wavenum(iy, n);
        for (int ix = 0; ix <= n / 2; ++ix) {
            const double kx = ix;
            const double k2 = kx * kx + ky * ky;
            if (k2 == 0.0) continue;
            std::size_t idx = static_cast<std::size_t>(iy) * (n / 2 + 1) + ix;
            const std::complex<double> kv = (kx * sx[idx] + ky * sy[idx]) / k2;
            sx[idx] -= kx * kv;
            sy[idx] -= ky * kv;
        }
    }
    std::memcpy(fft_->spec(), sx.data(), sizeof(fftw_complex) * nc);
    fft_->backward(vx);
    std::memcpy(fft_->spec(), sy.data(), sizeof(fftw_complex) * nc);
    fft_->backward(vy);
}

// ---------------------------------------------------------------------------

void require_same_grid(const Grid* a, const Grid* b, const char* who) {
    if (a == nullptr || b == nullptr || a != b)
        throw GridMismatch(std::string(who) + ": fields live on different grids");
}

VectorField grad(const ScalarField& f) {
    VectorField r(*f.g);
    f.g->deriv(f.v, r.x, 0);
    f.g->deriv(f.v, r.y, 1);
    return r;
}

MatField grad_vec(const VectorField& v) {
    MatField r(*v.g, /*full=*/true);
    v.g->deriv(v.x, r.c[0], 0);  // d vx / dx
    v.g->deriv(v.x, r.c[1], 1);  // d vx / dy
    v.g->deriv(v.y, r.c[2], 0);  // d vy / dx
    v.g->deriv(v.y, r.c[3], 1);  // d vy / dy
    return r;
}

ScalarField div(const VectorField& v) {
    ScalarField r(*v.g);
    std::vector<double> t;
    v.g->deriv(v.x, r.v, 0);
    v.g->deriv(v.y, t, 1);
    for (std::size_t i = 0; i < r.v.size(); ++i) r.v[i] += t[i];
    return r;
}

VectorField div_mat(const MatField& t) {
    VectorField r(*t.g);
    std::vector<double> a, b;
    // row i of T contracted with the derivative index j: (div T)_i = d_j T_ij
    const int ixy = 1;                   // T_xy
    const int iyx = t.full ? 2 : 1;      // T_yx
    const int iyy = t.full ? 3 : 2;      // T_yy
    t.g->deriv(t.c[0], a, 0);
    t.g->deriv(t.c[ixy], b, 1);
    for (std::size_t i = 0; i < r.x.size(); ++i) r.x[i] = a[i] + b[i];
    t.g->deriv(t.c[iyx], a, 0);
    t.g->deriv(t.c[iyy], b, 1);
    for (std::size_t i = 0; i < r.y.size(); ++i) r.y[i] = a[i] + b[i];
    return r;
}

VectorField laplacian(const VectorField& v) {
    VectorField r(*v.g);
    v.g->laplacian_plane(v.x, r.x);
    v.g->laplacian_plane(v.y, r.y);
    return r;
}

VectorField leray_project(const VectorField& v) {
    VectorField r = v;
    r.g->leray_planes(r.x, r.y);
    r.solenoidal = true;
    return r;
}

void dealias(VectorField& v) {
    v.g->dealias_plane(v.x);
    v.g->dealias_plane(v.y);
}

void dealias(MatField& t) {
    for (int k = 0; k < t.ncomp(); ++k) t.g->dealias_plane(t.c[k]);
}

double integrate(const ScalarField& f) {
    double s = 0;
    for (double x : f.v) s += x;
    return s * f.g->cell_area();
}

double inner(const VectorField& a, const VectorField& b) {
    require_same_grid(a.g, b.g, "inner(vector)");
    double s = 0;
    for (std::size_t i = 0; i < a.x.size(); ++i) s += a.x[i] * b.x[i] + a.y[i] * b.y[i];
    return s * a.g->cell_area();
}

double inner(const MatField& a, const MatField& b) {
    require_same_grid(a.g, b.g, "inner(matrix)");
    double s = 0;
    const std::size_t nn = a.c[0].size();
    if (a.full == b.full) {
        if (a.full) {
            for (int k = 0; k < 4; ++k)
                for (std::size_t i = 0; i < nn; ++i) s += a.c[k][i] * b.c[k][i];
        } else {
            for (std::size_t i = 0; i < nn; ++i)
                s += a.c[0][i] * b.c[0][i] + 2.0 * a.c[1][i] * b.c[1][i] + a.c[2][i] * b.c[2][i];
        }
    } else {
        const MatField& f = a.full ? a : b;  // full layout
        const MatField& p = a.full ? b : a;  // packed symmetric
        for (std::size_t i = 0; i < nn; ++i)
            s += f.c[0][i] * p.c[0][i] + (f.c[1][i] + f.c[2][i]) * p.c[1][i] +
                 f.c[3][i] * p.c[2][i];
    }
    return s * a.g->cell_area();
}

double norm_l2_sq(const VectorField& a) { return inner(a, a); }
double norm_l2_sq(const MatField& a) { return inner(a, a); }

// ---------------------------------------------------------------------------
// Random band-limited fields.

namespace {

// Fills one plane with a sum of random cos modes, 0 < max(|kx|,|ky|) <= k_max.
void fill_random_plane(const Grid& g, SplitMix64& rng, int k_max, double scale,
                       std::vector<double>& plane) {
    const int n = g.n();
    const double twopi = 2.0 * 3.14159265358979323846;
    plane.assign(g.nodes(), 0.0);
    int nmodes = 0;
    for (int ky = 0; ky <= k_max; ++ky)
        for (int kx = -k_max; kx <= k_max; ++kx)
            if (ky > 0 || kx > 0) ++nmodes;
    const double amp0 = scale / std::sqrt(static_cast<double>(std::max(nmodes, 1)));
    for (int ky = 0; ky <= k_max; ++ky)
        for (int kx = -k_max; kx <= k_max; ++kx) {
            if (!(ky > 0 || kx > 0)) continue;
            const double k2 = static_cast<double>(kx) * kx + static_cast<double>(ky) * ky;
            const double amp = amp0 * rng.normal() * std::sqrt(2.0) / (1.0 + k2);
            const double phase = twopi * rng.uniform();
            for (int iy = 0; iy < n; ++iy) {
                const double py = twopi * ky * iy / n;
                std::size_t row = static_cast<std::size_t>(iy) * n;
                for (int ix = 0; ix < n; ++ix)
                    plane[row + ix] += amp * std::cos(twopi * kx * ix / n + py + phase);
            }
        }
}

}  // namespace

ScalarField random_scalar_field(const Grid& g, std::uint64_t seed, int k_max, double scale) {
    if (k_max >= g.n() / 3) throw ConfigError("random field: k_max must be < n/3");
    SplitMix64 rng(seed * 0x9e3779b97f4a7c15ULL + 1);
    ScalarField f(g);
    fill_random_plane(g, rng, k_max, scale, f.v);
    return f;
}

VectorField random_vector_field(const Grid& g, std::uint64_t seed, int k_max, double scale) {
    if (k_max >= g.n() / 3) throw ConfigError("random field: k_max must be < n/3");
    SplitMix64 rng(seed * 0x9e3779b97f4a7c15ULL + 2);
    VectorField f(g);
    fill_random_plane(g, rng, k_max, scale, f.x);
    fill_random_plane(g, rng, k_max, scale, f.y);
    return f;
}

MatField random_sym_field(const Grid& g, std::uint64_t seed, int k_max, double scale) {
    if (k_max >= g.n() / 3) throw ConfigError("random field: k_max must be < n/3");
    SplitMix64 rng(seed * 0x9e3779b97f4a7c15ULL + 3);
    MatField f(g, /*full=*/false);
    for (int k = 0; k < 3; ++k) fill_random_plane(g, rng, k_max, scale, f.c[k]);
    return f;
}

MatField random_full_field(const Grid& g, std::uint64_t seed, int k_max, double scale) {
    if (k_max >= g.n() / 3) throw ConfigError("random field: k_max must be < n/3");
    SplitMix64 rng(seed * 0x9e3779b97f4a7c15ULL + 4);
    MatField f(g, /*full=*/true);
    for (int k = 0; k < 4; ++k) fill_random_plane(g, rng, k_max, scale, f.c[k]);
    return f;
}

MatField random_spd_field(const Grid& g, std::uint64_t seed, int k_max, double scale) {
    MatField p = random_sym_field(g, seed, k_max, scale);
    // Worst (most negative) nodal eigenvalue of the perturbation.
    double worst = 0.0;
    for (std::size_t i = 0; i < p.c[0].size(); ++i)
        worst = std::min(worst, min_eigenvalue(p.sym_at(i)));
    // I + s*P has eigenvalues >= 1 - s*|worst|; pick s so that floor is 0.1.
    double s = 1.0;
    if (worst < 0.0 && 1.0 + worst < 0.1) s = 0.9 / (-worst);
    for (std::size_t i = 0; i < p.c[0].size(); ++i) {
        Sym2 m = p.sym_at(i);
        m = s * m;
        m(0, 0) += 1.0;
        m(1, 1) += 1.0;
        p.set(i, m);
    }
    p.spd = true;
    return p;
}

// ---------------------------------------------------------------------------
// Snapshot IO.

namespace {

constexpr char kMagic[8] = {'E', 'V', 'F', 'L', 'D', '1', 0, 0};

void write_header(std::ofstream& out, const Grid& g, FieldKind kind, std::int32_t ncomp) {
    out.write(kMagic, 8);
    const std::int32_t d = 2, n = g.n();
    const double L = g.L();
    const auto k = static_cast<std::int32_t>(kind);
    out.write(reinterpret_cast<const char*>(&d), 4);
    out.write(reinterpret_cast<const char*>(&n), 4);
    out.write(reinterpret_cast<const char*>(&L), 8);
    out.write(reinterpret_cast<const char*>(&k), 4);
    out.write(reinterpret_cast<const char*>(&ncomp), 4);
}

std::int32_t read_header(std::ifstream& in, const Grid& g) {
    char magic[8];
    std::int32_t d, n, kind, ncomp;
    double L;
    in.read(magic, 8);
    in.read(reinterpret_cast<char*>(&d), 4);
    in.read(reinterpret_cast<char*>(&n), 4);
    in.read(reinterpret_cast<char*>(&L), 8);
    in.read(reinterpret_cast<char*>(&kind), 4);
    in.read(reinterpret_cast<char*>(&ncomp), 4);
    if (!in || std::memcmp(magic, kMagic, 8) != 0)
        throw ConfigError("field snapshot: bad magic");
    if (d != 2 || n != g.n() || std::abs(L - g.L()) > 1e-14 * std::abs(g.L()))
        throw GridMismatch("field snapshot: grid header mismatch");
    return ncomp;
}

}  // namespace

void write_field(const std::string& path, const VectorField& v) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot open for writing: " + path);
    write_header(out, *v.g, FieldKind::vector, 2);
    out.write(reinterpret_cast<const char*>(v.x.data()), sizeof(double) * v.x.size());
    out.write(reinterpret_cast<const char*>(v.y.data()), sizeof(double) * v.y.size());
}

void write_field(const std::string& path, const MatField& t) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot open for writing: " + path);
    write_header(out, *t.g, t.full ? FieldKind::full : (t.spd ? FieldKind::spd : FieldKind::sym),
                 t.ncomp());
    for (int k = 0; k < t.ncomp(); ++k)
        out.write(reinterpret_cast<const char*>(t.c[k].data()), sizeof(double) * t.c[k].size());
}

VectorField read_vector_field(const std::string& path, const Grid& g) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open: " + path);
    const std::int32_t ncomp = read_header(in, g);
    if (ncomp != 2) throw ConfigError("field snapshot: expected 2 components");
    VectorField v(g);
    in.read(reinterpret_cast<char*>(v.x.data()), sizeof(double) * v.x.size());
    in.read(reinterpret_cast<char*>(v.y.data()), sizeof(double) * v.y.size());
    if (!in) throw ConfigError("field snapshot: truncated file");
    return v;
}

MatField read_mat_field(const std::string& path, const Grid& g) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open: " + path);
    const std::int32_t ncomp = read_header(in, g);
    if (ncomp != 3 && ncomp != 4) throw ConfigError("field snapshot: expected 3 or 4 components");
    MatField t(g, ncomp == 4);
    for (int k = 0; k < t.ncomp(); ++k) {
        in.read(reinterpret_cast<char*>(t.c[k].data()), sizeof(double) * t.c[k].size());
    }
    if (!in) throw ConfigError("field snapshot: truncated file");
    return t;
}

namespace {

void csv_planes(const std::string& path, const Grid& g,
                const std::vector<const std::vector<double>*>& planes,
                const std::vector<std::string>& names) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot open for writing: " + path);
    out << "ix,iy";
    for (const auto& nm : names) out << "," << nm;
    out << "\n";
    char buf[32];
    const int n = g.n();
    for (int iy = 0; iy < n; ++iy)
        for (int ix = 0; ix < n; ++ix) {
            out << ix << "," << iy;
            for (const auto* p : planes) {
                std::snprintf(buf, sizeof(buf), "%.17g", (*p)[static_cast<std::size_t>(iy) * n + ix]);
                out << "," << buf;
            }
            out << "\n";
        }
}

}  // namespace

void write_field_csv(const std::string& path, const VectorField& v) {
    csv_planes(path, *v.g, {&v.x, &v.y}, {"vx", "vy"});
}

void write_field_csv(const std::string& path, const MatField& t) {
    if (t.full)
        csv_planes(path, *t.g, {&t.c[0], &t.c[1], &t.c[2], &t.c[3]}, {"xx", "xy", "yx", "yy"});
    else
        csv_planes(path, *t.g, {&t.c[0], &t.c[1], &t.c[2]}, {"xx", "xy", "yy"});
}

}  // namespace evf
