#pragma once

#include <algorithm>
#include <array>
#include <cmath>

namespace gradeflow {

/// Symmetric 2x2 tensor [[xx, xy], [xy, yy]]. Used for permeability C and
/// for its inverse, the Brinkman drag coefficient.
struct Sym2 {
    double xx = 0.0;
    double xy = 0.0;
    double yy = 0.0;

    static Sym2 diag(double a, double b) { return {a, 0.0, b}; }
    static Sym2 iso(double a) { return {a, 0.0, a}; }

    double trace() const { return xx + yy; }
    double det() const { return xx * yy - xy * xy; }

    Sym2 inverse() const {
        const double d = det();
        return {yy / d, -xy / d, xx / d};
    }

    /// Frobenius inner product <A, B> = sum_ij A_ij B_ij.
    double dot(const Sym2& o) const { return xx * o.xx + 2.0 * xy * o.xy + yy * o.yy; }

    Sym2& operator+=(const Sym2& o) {
        xx += o.xx;
        xy += o.xy;
        yy += o.yy;
        return *this;
    }
    friend Sym2 operator+(Sym2 a, const Sym2& b) { return a += b; }
    friend Sym2 operator*(double k, const Sym2& a) { return {k * a.xx, k * a.xy, k * a.yy}; }
    friend bool operator==(const Sym2&, const Sym2&) = default;
};

/// Product A B A for symmetric A, B (symmetric result).
inline Sym2 sandwich(const Sym2& a, const Sym2& b) {
    // (A B)
    const double m00 = a.xx * b.xx + a.xy * b.xy;
    const double m01 = a.xx * b.xy + a.xy * b.yy;
    const double m10 = a.xy * b.xx + a.yy * b.xy;
    const double m11 = a.xy * b.xy + a.yy * b.yy;
    return {m00 * a.xx + m01 * a.xy, m00 * a.xy + m01 * a.yy, m10 * a.xy + m11 * a.yy};
}

/// Eigen-decomposition of a symmetric 2x2 tensor: values ascending, vector of
/// the first eigenvalue is (c, s); the second is (-s, c).
struct Eig2 {
    double lo = 0.0;
    double hi = 0.0;
    double c = 1.0;
    double s = 0.0;
};

inline Eig2 eig(const Sym2& a) {
    const double mean = 0.5 * (a.xx + a.yy);
    const double half_diff = 0.5 * (a.xx - a.yy);
    const double rad = std::hypot(half_diff, a.xy);
    Eig2 out;
    out.lo = mean - rad;
    out.hi = mean + rad;
    if (rad == 0.0) return out;
    // Angle of the eigenvector for the smaller eigenvalue.
    const double phi = 0.5 * std::atan2(2.0 * a.xy, a.xx - a.yy) + 0.5 * 3.14159265358979323846;
    out.c = std::cos(phi);
    out.s = std::sin(phi);
    return out;
}

inline Sym2 compose(const Eig2& e, double lo, double hi) {
    // Q diag(lo, hi) Q^T with Q = [[c, -s], [s, c]]
    return {lo * e.c * e.c + hi * e.s * e.s, (lo - hi) * e.c * e.s, lo * e.s * e.s + hi * e.c * e.c};
}

}  // namespace gradeflow
