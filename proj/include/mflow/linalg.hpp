#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace mflow {

/// Symmetric m x m matrix value, m in {1,2}. Stored as the upper triangle
/// (xx) for m=1 and (xx, xy, yy) for m=2; unused slots are zero.
struct SymMat {
    int dim = 1;
    std::array<double, 3> a{0.0, 0.0, 0.0};

    static SymMat zero(int m) { return SymMat{m, {0.0, 0.0, 0.0}}; }
    static SymMat identity(int m) {
        return m == 1 ? SymMat{1, {1.0, 0.0, 0.0}} : SymMat{2, {1.0, 0.0, 1.0}};
    }
    static SymMat scalar(double v) { return SymMat{1, {v, 0.0, 0.0}}; }
    static SymMat diag2(double x, double y) { return SymMat{2, {x, 0.0, y}}; }

    int ncomp() const { return dim == 1 ? 1 : 3; }
};

inline SymMat operator+(const SymMat& x, const SymMat& y) {
    SymMat r = x;
    for (int i = 0; i < 3; ++i) r.a[static_cast<std::size_t>(i)] += y.a[static_cast<std::size_t>(i)];
    return r;
}

inline SymMat operator-(const SymMat& x, const SymMat& y) {
    SymMat r = x;
    for (int i = 0; i < 3; ++i) r.a[static_cast<std::size_t>(i)] -= y.a[static_cast<std::size_t>(i)];
    return r;
}

inline SymMat operator*(double s, const SymMat& x) {
    SymMat r = x;
    for (auto& v : r.a) v *= s;
    return r;
}

inline double trace(const SymMat& x) { return x.dim == 1 ? x.a[0] : x.a[0] + x.a[2]; }

/// Symmetrized product (XY + YX)/2; equals the matrix product when X and Y
/// commute (in particular for powers of one matrix).
inline SymMat sym_mul(const SymMat& x, const SymMat& y) {
    if (x.dim == 1) return SymMat{1, {x.a[0] * y.a[0], 0.0, 0.0}};
    SymMat r;
    r.dim = 2;
    r.a[0] = x.a[0] * y.a[0] + x.a[1] * y.a[1];
    r.a[2] = x.a[1] * y.a[1] + x.a[2] * y.a[2];
    r.a[1] = 0.5 * (x.a[0] * y.a[1] + x.a[1] * y.a[2] + x.a[1] * y.a[0] + x.a[2] * y.a[1]);
    return r;
}

inline double frobenius_sq(const SymMat& x) {
    if (x.dim == 1) return x.a[0] * x.a[0];
    return x.a[0] * x.a[0] + 2.0 * x.a[1] * x.a[1] + x.a[2] * x.a[2];
}

inline double frobenius_dot(const SymMat& x, const SymMat& y) {
    if (x.dim == 1) return x.a[0] * y.a[0];
    return x.a[0] * y.a[0] + 2.0 * x.a[1] * y.a[1] + x.a[2] * y.a[2];
}

/// Ascending eigenvalues; closed form (quadratic formula for m=2).
inline std::array<double, 2> sym_eigenvalues(const SymMat& x) {
    if (x.dim == 1) return {x.a[0], x.a[0]};
    const double mean = 0.5 * (x.a[0] + x.a[2]);
    const double half_diff = 0.5 * (x.a[0] - x.a[2]);
    const double r = std::sqrt(half_diff * half_diff + x.a[1] * x.a[1]);
    return {mean - r, mean + r};
}

/// General m x m matrix (m <= 2), row-major; used for gauge rotations.
struct Mat {
    int dim = 1;
    std::array<double, 4> e{1.0, 0.0, 0.0, 1.0};  // [a b; c d] for m=2, e[0] for m=1

    static Mat identity(int m) { return Mat{m, {1.0, 0.0, 0.0, 1.0}}; }
    static Mat rotation2(double angle) {
        const double c = std::cos(angle), s = std::sin(angle);
        return Mat{2, {c, -s, s, c}};
    }
    static Mat reflection1(double sign) { return Mat{1, {sign, 0.0, 0.0, 0.0}}; }
};

inline double orthogonality_defect(const Mat& r) {
    if (r.dim == 1) return std::abs(r.e[0] * r.e[0] - 1.0);
    // max-abs entry of R^T R - I
    const double g00 = r.e[0] * r.e[0] + r.e[2] * r.e[2] - 1.0;
    const double g01 = r.e[0] * r.e[1] + r.e[2] * r.e[3];
    const double g11 = r.e[1] * r.e[1] + r.e[3] * r.e[3] - 1.0;
    return std::max({std::abs(g00), std::abs(g01), std::abs(g11)});
}

/// R^T X R for symmetric X and general R (orthogonality checked by callers).
inline SymMat congruence(const Mat& r, const SymMat& x) {
    if (x.dim == 1) return SymMat{1, {r.e[0] * x.a[0] * r.e[0], 0.0, 0.0}};
    // Y = X R
    const double y00 = x.a[0] * r.e[0] + x.a[1] * r.e[2];
    const double y01 = x.a[0] * r.e[1] + x.a[1] * r.e[3];
    const double y10 = x.a[1] * r.e[0] + x.a[2] * r.e[2];
    const double y11 = x.a[1] * r.e[1] + x.a[2] * r.e[3];
    // Z = R^T Y
    SymMat z;
    z.dim = 2;
    z.a[0] = r.e[0] * y00 + r.e[2] * y10;
    z.a[1] = r.e[0] * y01 + r.e[2] * y11;
    z.a[2] = r.e[1] * y01 + r.e[3] * y11;
    return z;
}

/// Ascending eigenvalues of a symmetric 3x3 matrix (trigonometric closed
/// form). Used for the per-mode linearized symbols.
inline std::array<double, 3> sym3_eigenvalues(const std::array<std::array<double, 3>, 3>& s) {
    const double p1 = s[0][1] * s[0][1] + s[0][2] * s[0][2] + s[1][2] * s[1][2];
    if (p1 == 0.0) {
        std::array<double, 3> e{s[0][0], s[1][1], s[2][2]};
        std::sort(e.begin(), e.end());
        return e;
    }
    const double q = (s[0][0] + s[1][1] + s[2][2]) / 3.0;
    const double p2 = (s[0][0] - q) * (s[0][0] - q) + (s[1][1] - q) * (s[1][1] - q) +
                      (s[2][2] - q) * (s[2][2] - q) + 2.0 * p1;
    const double p = std::sqrt(p2 / 6.0);
    std::array<std::array<double, 3>, 3> b{};
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            b[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] =
                (s[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] - (i == j ? q : 0.0)) / p;
    const double detb = b[0][0] * (b[1][1] * b[2][2] - b[1][2] * b[2][1]) -
                        b[0][1] * (b[1][0] * b[2][2] - b[1][2] * b[2][0]) +
                        b[0][2] * (b[1][0] * b[2][1] - b[1][1] * b[2][0]);
    const double r = std::clamp(detb / 2.0, -1.0, 1.0);
    const double phi = std::acos(r) / 3.0;
    const double two_pi_3 = 2.0 * std::numbers::pi / 3.0;
    const double e_hi = q + 2.0 * p * std::cos(phi);
    const double e_lo = q + 2.0 * p * std::cos(phi + two_pi_3);
    const double e_mid = 3.0 * q - e_hi - e_lo;
    std::array<double, 3> e{e_lo, e_mid, e_hi};
    std::sort(e.begin(), e.end());
    return e;
}

}  // namespace mflow
