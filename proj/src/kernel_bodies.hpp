#pragma once

// Per-item work shared by the serial and OpenMP kernels.

#include <span>

#include "gradeflow/design_field.hpp"
#include "gradeflow/fea.hpp"
#include "gradeflow/geometry.hpp"
#include "gradeflow/surrogate.hpp"

namespace gradeflow::kernels::detail {

inline double dissipation_item(const SaddleSystem& system, const Eigen::VectorXd& velocity, const Sym2& k, int e) {
    const ElementTemplates& t = system.templates();
    const ElemVel u = system.gather_velocity(velocity, e);
    const auto ux = u.head<kVelNodes>();
    const auto uy = u.tail<kVelNodes>();
    const auto mx = t.mass * ux;
    const auto my = t.mass * uy;
    const double visc = u.dot(t.viscous * u);
    const double drag = k.xx * ux.dot(mx) + 2.0 * k.xy * ux.dot(my) + k.yy * uy.dot(my);
    return 0.5 * (visc + drag);
}

inline Sym2 drag_gradient_item(const SaddleSystem& system, const Eigen::VectorXd& velocity,
                               const Eigen::VectorXd& adjoint, int e) {
    const ElementTemplates& t = system.templates();
    const ElemVel u = system.gather_velocity(velocity, e);
    const ElemVel w = system.gather_velocity(adjoint, e);
    const Eigen::Matrix<double, kVelNodes, 1> mx = t.mass * u.head<kVelNodes>();
    const Eigen::Matrix<double, kVelNodes, 1> my = t.mass * u.tail<kVelNodes>();
    const auto ux = u.head<kVelNodes>();
    const auto uy = u.tail<kVelNodes>();
    const auto wx = w.head<kVelNodes>();
    const auto wy = w.tail<kVelNodes>();
    // G_ab = 1/2 u_a^T M u_b - w_a^T M u_b, symmetrized.
    return {0.5 * ux.dot(mx) - wx.dot(mx), 0.5 * ux.dot(my) - 0.5 * (wx.dot(my) + wy.dot(mx)),
            0.5 * uy.dot(my) - wy.dot(my)};
}

inline void raster_row(ShapeId id, double s, int n, int k, int j, std::span<double> occupancy) {
    // Centered sample coordinate = (2 m + 1 - n k) / (2 n k) with integer m, so
    // mirrored samples are exact negations of each other.
    const double denom = 2.0 * n * k;
    const double inv_count = 1.0 / (k * k);
    for (int i = 0; i < n; ++i) {
        int hits = 0;
        for (int b = 0; b < k; ++b) {
            const double y = static_cast<double>(2 * (j * k + b) + 1 - n * k) / denom;
            for (int a = 0; a < k; ++a) {
                const double x = static_cast<double>(2 * (i * k + a) + 1 - n * k) / denom;
                if (geometry::level(id, s, x, y) < 0.0) ++hits;
            }
        }
        occupancy[static_cast<std::size_t>(j) * n + i] = hits * inv_count;
    }
}

inline void effective_drag_item(std::span<const ShapeSurrogate> shapes, const DesignSnapshot& d, double p, int e,
                                Sym2& drag, char& clamped) {
    const MixedPermeability mix = mix_permeability(shapes, d.fractions(e), d.s[e], d.theta[e], p);
    drag = mix.c.inverse();
    clamped = mix.clamped ? 1 : 0;
}

inline void drag_pullback_item(std::span<const ShapeSurrogate> shapes, const DesignSnapshot& d, double p, int e,
                               const Sym2& drag, const Sym2& dj_ddrag, DesignGradient& out) {
    const Sym2 dj_dc = inverse_pullback(drag, dj_ddrag);
    const std::size_t m = static_cast<std::size_t>(d.num_shapes);
    mix_permeability_pullback(shapes, d.fractions(e), d.s[e], d.theta[e], p, dj_dc,
                              std::span<double>(out.rho.data() + e * m, m), out.s[e], out.theta[e]);
}

}  // namespace gradeflow::kernels::detail
