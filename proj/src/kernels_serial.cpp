#include <algorithm>

#include "gradeflow/kernels.hpp"

#include "kernel_bodies.hpp"

namespace gradeflow::kernels::serial {

void elemental_dissipation(const SaddleSystem& system, const Eigen::VectorXd& velocity, std::span<const Sym2> drag,
                           std::span<double> out) {
    const int ne = static_cast<int>(system.element_dofs().size());
    for (int e = 0; e < ne; ++e) out[e] = detail::dissipation_item(system, velocity, drag[e], e);
}

void drag_gradient(const SaddleSystem& system, const Eigen::VectorXd& velocity, const Eigen::VectorXd& adjoint,
                   std::span<Sym2> out) {
    const int ne = static_cast<int>(system.element_dofs().size());
    for (int e = 0; e < ne; ++e) out[e] = detail::drag_gradient_item(system, velocity, adjoint, e);
}

void rasterize(ShapeId id, double s, int n, int subsamples, std::span<double> occupancy) {
    for (int j = 0; j < n; ++j) detail::raster_row(id, s, n, subsamples, j, occupancy);
}

void mlp_forward(const DesignField& field, std::span<const Point2> points, DesignSnapshot& out) {
    const int np = static_cast<int>(points.size());
    const int m = field.num_shapes();
    for (int i = 0; i < np; ++i) field.evaluate(points[i], out.rho.data() + i * m, out.s[i], out.theta[i]);
}

void mlp_backward(const DesignField& field, std::span<const Point2> points, const DesignGradient& upstream,
                  Eigen::VectorXd& grad) {
    const int np = static_cast<int>(points.size());
    const int m = field.num_shapes();
    const int chunks = (np + kMlpChunk - 1) / kMlpChunk;
    grad = Eigen::VectorXd::Zero(field.num_weights());
    Eigen::VectorXd partial(field.num_weights());
    for (int c = 0; c < chunks; ++c) {
        partial.setZero();
        const int end = std::min(np, (c + 1) * kMlpChunk);
        for (int i = c * kMlpChunk; i < end; ++i) {
            field.accumulate_gradient(points[i], upstream.rho.data() + i * m, upstream.s[i], upstream.theta[i],
                                      partial.data());
        }
        grad += partial;
    }
}

void effective_drag(std::span<const ShapeSurrogate> shapes, const DesignSnapshot& design, double p,
                    std::span<Sym2> drag, std::span<char> clamped) {
    const int ne = static_cast<int>(design.size());
    for (int e = 0; e < ne; ++e) detail::effective_drag_item(shapes, design, p, e, drag[e], clamped[e]);
}

void drag_pullback(std::span<const ShapeSurrogate> shapes, const DesignSnapshot& design, double p,
                   std::span<const Sym2> drag, std::span<const Sym2> dj_ddrag, DesignGradient& out) {
    const int ne = static_cast<int>(design.size());
    for (int e = 0; e < ne; ++e) detail::drag_pullback_item(shapes, design, p, e, drag[e], dj_ddrag[e], out);
}

}  // namespace gradeflow::kernels::serial
