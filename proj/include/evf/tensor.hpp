// Pointwise algebra of small d x d matrices (d = 2 or 3): symmetric/skew
// splits, eigendecompositions (closed form for d = 2, cyclic Jacobi for
// d = 3), SPD matrix functions evaluated per eigenvalue, the conjugate-root
// maps b_of_sigma / f_of_sigma, invariants, and the angular-velocity solver
// for SW + WS = H.
//
// Everything here is a pure function of its arguments; results are
// deterministic bit-for-bit.
#pragma once

#include <array>
#include <cmath>
#include <cstring>

#include "evf/errors.hpp"

namespace evf {

inline constexpr double kSpdFloor = 1e-12;    // eigenvalue floor for SPD classification
inline constexpr double kDenomFloor = 1e-10;  // angular-velocity denominator floor

// ---------------------------------------------------------------------------
// General (possibly non-symmetric) d x d matrix, row-major.
template <int d>
struct Mat {
    std::array<double, d * d> a{};

    double& operator()(int i, int j) { return a[i * d + j]; }
    double operator()(int i, int j) const { return a[i * d + j]; }

    static Mat identity() {
        Mat m;
        for (int i = 0; i < d; ++i) m(i, i) = 1.0;
        return m;
    }
};

// Symmetric d x d matrix in packed layout: 2-D (xx, xy, yy),
// 3-D (xx, xy, xz, yy, yz, zz).
template <int d>
struct Sym {
    static constexpr int np = d * (d + 1) / 2;
    std::array<double, np> p{};

    static constexpr int idx(int i, int j) {
        if (i > j) std::swap(i, j);
        if constexpr (d == 2) {
            return i + j;  // (0,0)->0 (0,1)->1 (1,1)->2
        } else {
            static_assert(d == 2 || d == 3);
            return (i == 0) ? j : (i == 1 ? 2 + j : 5);  // 0,1,2,3,4,5
        }
    }
    double& operator()(int i, int j) { return p[idx(i, j)]; }
    double operator()(int i, int j) const { return p[idx(i, j)]; }

    static Sym identity() {
        Sym s;
        for (int i = 0; i < d; ++i) s(i, i) = 1.0;
        return s;
    }

    Mat<d> full() const {
        Mat<d> m;
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < d; ++j) m(i, j) = (*this)(i, j);
        return m;
    }
};

using Mat2 = Mat<2>;
using Mat3 = Mat<3>;
using Sym2 = Sym<2>;
using Sym3 = Sym<3>;

// ---------------------------------------------------------------------------
// Elementary arithmetic.

template <int d>
inline Mat<d> operator+(const Mat<d>& x, const Mat<d>& y) {
    Mat<d> r;
    for (int i = 0; i < d * d; ++i) r.a[i] = x.a[i] + y.a[i];
    return r;
}
template <int d>
inline Mat<d> operator-(const Mat<d>& x, const Mat<d>& y) {
    Mat<d> r;
    for (int i = 0; i < d * d; ++i) r.a[i] = x.a[i] - y.a[i];
    return r;
}
template <int d>
inline Mat<d> operator*(double c, const Mat<d>& x) {
    Mat<d> r;
    for (int i = 0; i < d * d; ++i) r.a[i] = c * x.a[i];
    return r;
}
template <int d>
inline Sym<d> operator+(const Sym<d>& x, const Sym<d>& y) {
    Sym<d> r;
    for (int i = 0; i < Sym<d>::np; ++i) r.p[i] = x.p[i] + y.p[i];
    return r;
}
template <int d>
inline Sym<d> operator-(const Sym<d>& x, const Sym<d>& y) {
    Sym<d> r;
    for (int i = 0; i < Sym<d>::np; ++i) r.p[i] = x.p[i] - y.p[i];
    return r;
}
template <int d>
inline Sym<d> operator*(double c, const Sym<d>& x) {
    Sym<d> r;
    for (int i = 0; i < Sym<d>::np; ++i) r.p[i] = c * x.p[i];
    return r;
}

template <int d>
inline Mat<d> matmul(const Mat<d>& x, const Mat<d>& y) {
    Mat<d> r;
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) {
            double s = 0;
            for (int k = 0; k < d; ++k) s += x(i, k) * y(k, j);
            r(i, j) = s;
        }
    return r;
}

template <int d>
inline Mat<d> transpose(const Mat<d>& x) {
    Mat<d> r;
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) r(i, j) = x(j, i);
    return r;
}

template <int d>
inline double trace(const Mat<d>& x) {
    double s = 0;
    for (int i = 0; i < d; ++i) s += x(i, i);
    return s;
}
template <int d>
inline double trace(const Sym<d>& x) {
    double s = 0;
    for (int i = 0; i < d; ++i) s += x(i, i);
    return s;
}

// Frobenius inner product A : B; for Sym arguments off-diagonals count twice.
template <int d>
inline double ddot(const Mat<d>& x, const Mat<d>& y) {
    double s = 0;
    for (int i = 0; i < d * d; ++i) s += x.a[i] * y.a[i];
    return s;
}
template <int d>
inline double ddot(const Sym<d>& x, const Sym<d>& y) {
    double s = 0;
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) s += x(i, j) * y(i, j);
    return s;
}

template <int d>
inline double det(const Mat<d>& m) {
    if constexpr (d == 2) {
        return m(0, 0) * m(1, 1) - m(0, 1) * m(1, 0);
    } else {
        return m(0, 0) * (m(1, 1) * m(2, 2) - m(1, 2) * m(2, 1)) -
               m(0, 1) * (m(1, 0) * m(2, 2) - m(1, 2) * m(2, 0)) +
               m(0, 2) * (m(1, 0) * m(2, 1) - m(1, 1) * m(2, 0));
    }
}
template <int d>
inline double det(const Sym<d>& s) {
    return det(s.full());
}

// ---------------------------------------------------------------------------
// Symmetric / skew splits.

template <int d>
inline Sym<d> sym_part(const Mat<d>& m) {
    Sym<d> s;
    for (int i = 0; i < d; ++i)
        for (int j = i; j < d; ++j) s(i, j) = 0.5 * (m(i, j) + m(j, i));
    return s;
}

template <int d>
inline Mat<d> skw_part(const Mat<d>& m) {
    Mat<d> r;
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) r(i, j) = 0.5 * (m(i, j) - m(j, i));
    return r;
}

// Symmetrized product of a general matrix with a symmetric one: (M S)_sym.
template <int d>
inline Sym<d> sym_prod(const Mat<d>& m, const Sym<d>& s) {
    return sym_part(matmul(m, s.full()));
}

// Product of two symmetric matrices (in general not symmetric); S T as Mat.
template <int d>
inline Mat<d> mul_ss(const Sym<d>& s, const Sym<d>& t) {
    return matmul(s.full(), t.full());
}

// Square of a symmetric matrix (always symmetric).
template <int d>
inline Sym<d> square(const Sym<d>& s) {
    return sym_part(mul_ss(s, s));
}

// ---------------------------------------------------------------------------
// Eigendecomposition of symmetric matrices: S = Q diag(lam) Q^T with Q
// orthogonal (columns are eigenvectors).

template <int d>
struct Eig {
    std::array<double, d> lam{};
    Mat<d> q;  // column j is the eigenvector of lam[j]
};

inline Eig<2> eig_sym(const Sym2& s) {
    Eig<2> e;
    const double a = s(0, 0), b = s(0, 1), c = s(1, 1);
    const double tr2 = 0.5 * (a + c);
    const double disc = std::sqrt(std::max(0.0, 0.25 * (a - c) * (a - c) + b * b));
    e.lam[0] = tr2 - disc;
    e.lam[1] = tr2 + disc;
    // Eigenvector for lam[1]; stable branch selection avoids cancellation.
    double vx, vy;
    if (std::abs(b) > 1e-300) {
        vx = e.lam[1] - c;
        vy = b;
    } else if (a >= c) {
        vx = 1.0;
        vy = 0.0;
    } else {
        vx = 0.0;
        vy = 1.0;
    }
    const double nrm = std::sqrt(vx * vx + vy * vy);
    vx /= nrm;
    vy /= nrm;
    // q = [v_perp | v] so column order matches (lam0, lam1).
    e.q(0, 0) = -vy;
    e.q(1, 0) = vx;
    e.q(0, 1) = vx;
    e.q(1, 1) = vy;
    return e;
}

// Cyclic Jacobi for 3 x 3 symmetric matrices.  Deterministic sweep order,
// fixed convergence threshold; ~4 sweeps suffice at double precision.
inline Eig<3> eig_sym(const Sym3& s) {
    Mat3 a = s.full();
    Mat3 q = Mat3::identity();
    for (int sweep = 0; sweep < 32; ++sweep) {
        double off = 0;
        for (int i = 0; i < 3; ++i)
            for (int j = i + 1; j < 3; ++j) off += a(i, j) * a(i, j);
        if (off < 1e-34) break;
        for (int p = 0; p < 3; ++p)
            for (int qi = p + 1; qi < 3; ++qi) {
                const double apq = a(p, qi);
                if (std::abs(apq) < 1e-300) continue;
                const double theta = (a(qi, qi) - a(p, p)) / (2.0 * apq);
                const double t = (theta >= 0 ? 1.0 : -1.0) /
                                 (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double sn = t * c;
                for (int k = 0; k < 3; ++k) {
                    const double akp = a(k, p), akq = a(k, qi);
                    a(k, p) = c * akp - sn * akq;
                    a(k, qi) = sn * akp + c * akq;
                }
                for (int k = 0; k < 3; ++k) {
                    const double apk = a(p, k), aqk = a(qi, k);
                    a(p, k) = c * apk - sn * aqk;
                    a(qi, k) = sn * apk + c * aqk;
                }
                for (int k = 0; k < 3; ++k) {
                    const double qkp = q(k, p), qkq = q(k, qi);
                    q(k, p) = c * qkp - sn * qkq;
                    q(k, qi) = sn * qkp + c * qkq;
                }
            }
    }
    Eig<3> e;
    for (int i = 0; i < 3; ++i) e.lam[i] = a(i, i);
    e.q = q;
    // Sort ascending (insertion sort on 3 entries, swapping columns).
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2 - i; ++j)
            if (e.lam[j] > e.lam[j + 1]) {
                std::swap(e.lam[j], e.lam[j + 1]);
                for (int k = 0; k < 3; ++k) std::swap(e.q(k, j), e.q(k, j + 1));
            }
    return e;
}

// Rebuild Q diag(f(lam)) Q^T.
template <int d, class F>
inline Sym<d> apply_eig(const Eig<d>& e, F&& f) {
    std::array<double, d> fl;
    for (int i = 0; i < d; ++i) fl[i] = f(e.lam[i]);
    Sym<d> r;
    for (int i = 0; i < d; ++i)
        for (int j = i; j < d; ++j) {
            double s = 0;
            for (int k = 0; k < d; ++k) s += e.q(i, k) * fl[k] * e.q(j, k);
            r(i, j) = s;
        }
    return r;
}

template <int d, class F>
inline Sym<d> apply_fn(const Sym<d>& s, F&& f) {
    return apply_eig(eig_sym(s), std::forward<F>(f));
}

template <int d>
inline double min_eigenvalue(const Sym<d>& s) {
    return eig_sym(s).lam[0];
}

// Magnitude of the most negative eigenvalue, 0 if none (the (.)_- norm used
// by the regularity weights).
template <int d>
inline double neg_part_magnitude(const Sym<d>& s) {
    const double l0 = eig_sym(s).lam[0];
    return l0 < 0 ? -l0 : 0.0;
}

// ---------------------------------------------------------------------------
// SPD matrix functions.

template <int d>
inline void require_spd(const Sym<d>& s, const char* who) {
    if (min_eigenvalue(s) <= kSpdFloor)
        throw NotPositiveDefinite(std::string(who) + ": eigenvalue at or below SPD floor");
}

template <int d>
inline Sym<d> spd_sqrt(const Sym<d>& s) {
    require_spd(s, "spd_sqrt");
    return apply_fn(s, [](double l) { return std::sqrt(l); });
}

template <int d>
inline Sym<d> spd_inv(const Sym<d>& s) {
    // Direct cofactor inverse: exact up to roundoff, cheaper than eigen.
    const double dt = det(s);
    if (!(std::abs(dt) > 0)) throw NotPositiveDefinite("spd_inv: singular matrix");
    Sym<d> r;
    if constexpr (d == 2) {
        r(0, 0) = s(1, 1) / dt;
        r(1, 1) = s(0, 0) / dt;
        r(0, 1) = -s(0, 1) / dt;
    } else {
        const Mat3 m = s.full();
        r(0, 0) = (m(1, 1) * m(2, 2) - m(1, 2) * m(2, 1)) / dt;
        r(0, 1) = (m(0, 2) * m(2, 1) - m(0, 1) * m(2, 2)) / dt;
        r(0, 2) = (m(0, 1) * m(1, 2) - m(0, 2) * m(1, 1)) / dt;
        r(1, 1) = (m(0, 0) * m(2, 2) - m(0, 2) * m(2, 0)) / dt;
        r(1, 2) = (m(0, 2) * m(1, 0) - m(0, 0) * m(1, 2)) / dt;
        r(2, 2) = (m(0, 0) * m(1, 1) - m(0, 1) * m(1, 0)) / dt;
    }
    return r;
}

// tr(log S) = log det S for SPD S, evaluated per eigenvalue (avoids
// cancellation in det for ill-conditioned matrices).
template <int d>
inline double trace_log(const Sym<d>& s) {
    const Eig<d> e = eig_sym(s);
    double sum = 0;
    for (int i = 0; i < d; ++i) {
        if (e.lam[i] <= kSpdFloor)
            throw NotPositiveDefinite("trace_log: eigenvalue at or below SPD floor");
        sum += std::log(e.lam[i]);
    }
    return sum;
}

// ---------------------------------------------------------------------------
// Conjugate-root maps.  Both commute with sigma, so the per-eigenvalue scalar
// root in sigma's eigenbasis is exact.

// Plus-branch root of beta B^2 - (sigma - (1-2 beta) I) B - (1-beta) I = 0.
// Per eigenvalue s of sigma:  b = m/(2b) + sqrt(m^2/(4 beta^2) + (1-beta)/beta)
// with m = s - (1 - 2 beta); always positive for beta in (0,1).
template <int d>
inline Sym<d> b_of_sigma(const Sym<d>& sigma, double beta) {
    return apply_fn(sigma, [beta](double s) {
        const double m = (s - (1.0 - 2.0 * beta)) / (2.0 * beta);
        return m + std::sqrt(m * m + (1.0 - beta) / beta);
    });
}

// Plus-branch root of F^2 - sigma F - I = 0:  F = sigma/2 + sqrt(sigma^2/4+I).
template <int d>
inline Sym<d> f_of_sigma(const Sym<d>& sigma) {
    return apply_fn(sigma, [](double s) {
        return 0.5 * s + std::sqrt(0.25 * s * s + 1.0);
    });
}

// ---------------------------------------------------------------------------
// Invariants. For d = 3 returns (tr, (tr^2 - tr S^2)/2, det); the d = 2
// overload returns (tr, det) as the pair relevant to the planar solver.

inline std::array<double, 3> invariants(const Sym3& s) {
    const double i1 = trace(s);
    const double tr_s2 = ddot(s, s);  // tr(S^2) = S:S for symmetric S
    const double i2 = 0.5 * (i1 * i1 - tr_s2);
    return {i1, i2, det(s)};
}

inline std::array<double, 2> invariants(const Sym2& s) {
    return {trace(s), det(s)};
}

// ---------------------------------------------------------------------------
// Angular velocity solver: the unique skew W with S W + W S = H, where
// H := a (L S - S L^T) + b (L^T S - S L).
//
// d = 3: W = f(S) H - g(S) (S^2 H + H S^2) with
//   f = (I1^2 - I2) / (I1 I2 - I3),  g = 1 / (I1 I2 - I3).
// d = 2: every skew matrix is w J with J = [[0,1],[-1,0]] and
//   S (wJ) + (wJ) S = w tr(S) J, so W = H / tr(S).  (Two-dimensional
//   reduction of the same linear solve; the denominator tr S plays the role
//   of I1 I2 - I3 and is gated identically.)

template <int d>
inline Mat<d> angular_rhs_h(const Sym<d>& s, const Mat<d>& l, double a, double b) {
    const Mat<d> sf = s.full();
    const Mat<d> lt = transpose(l);
    const Mat<d> h = a * (matmul(l, sf) - matmul(sf, lt)) + b * (matmul(lt, sf) - matmul(sf, l));
    // h is skew by construction; return the exactly-antisymmetrized value.
    return skw_part(h);
}

inline Mat3 angular_velocity_w(const Sym3& s, const Mat3& l, double a, double b) {
    const auto inv = invariants(s);
    const double denom = inv[0] * inv[1] - inv[2];
    if (denom <= kDenomFloor)
        throw DegenerateInvariants("angular_velocity_w: I1*I2 - I3 at or below floor");
    const double f = (inv[0] * inv[0] - inv[1]) / denom;
    const double g = 1.0 / denom;
    const Mat3 h = angular_rhs_h(s, l, a, b);
    const Mat3 s2 = square(s).full();
    const Mat3 w = f * h - g * (matmul(s2, h) + matmul(h, s2));
    return skw_part(w);  // enforce exact antisymmetry
}

inline Mat2 angular_velocity_w(const Sym2& s, const Mat2& l, double a, double b) {
    const double denom = trace(s);
    if (denom <= kDenomFloor)
        throw DegenerateInvariants("angular_velocity_w: tr S at or below floor");
    const Mat2 h = angular_rhs_h(s, l, a, b);
    return (1.0 / denom) * h;
}

}  // namespace evf
