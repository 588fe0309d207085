#pragma once

#include <span>

#include <Eigen/Core>

#include "gradeflow/design_field.hpp"
#include "gradeflow/fea.hpp"
#include "gradeflow/geometry.hpp"
#include "gradeflow/surrogate.hpp"
#include "gradeflow/tensor.hpp"

// Data-parallel loops over elements, raster rows or sample points. `serial`
// is the reference implementation; `omp` distributes the same per-item work
// over OpenMP threads. Kernels write per-item outputs only and any summation
// happens afterwards in a fixed order, so both give bitwise identical results.
namespace gradeflow::kernels {

inline constexpr int kMlpChunk = 64;

namespace serial {

/// 1/2 U_e^T (A + K_e (x) M) U_e per element.
void elemental_dissipation(const SaddleSystem& system, const Eigen::VectorXd& velocity, std::span<const Sym2> drag,
                           std::span<double> out);
/// dJ/dK_e per element from state and adjoint velocities (full numbering).
void drag_gradient(const SaddleSystem& system, const Eigen::VectorXd& velocity, const Eigen::VectorXd& adjoint,
                   std::span<Sym2> out);
/// Sub-sampled occupancy of an n x n raster, row-major.
void rasterize(ShapeId id, double s, int n, int subsamples, std::span<double> occupancy);
/// Network outputs at every point; `out` must already be sized.
void mlp_forward(const DesignField& field, std::span<const Point2> points, DesignSnapshot& out);
/// dL/dw. Points are processed in chunks of kMlpChunk whose partial sums are
/// added in chunk order.
void mlp_backward(const DesignField& field, std::span<const Point2> points, const DesignGradient& upstream,
                  Eigen::VectorXd& grad);
/// Per-element drag K_e = C_e^{-1}; `clamped` flags eigenvalue clamping.
void effective_drag(std::span<const ShapeSurrogate> shapes, const DesignSnapshot& design, double p,
                    std::span<Sym2> drag, std::span<char> clamped);
/// Pulls dJ/dK_e back to (rho, s, theta); `out` must already be sized.
void drag_pullback(std::span<const ShapeSurrogate> shapes, const DesignSnapshot& design, double p,
                   std::span<const Sym2> drag, std::span<const Sym2> dj_ddrag, DesignGradient& out);

}  // namespace serial

namespace omp {

void elemental_dissipation(const SaddleSystem& system, const Eigen::VectorXd& velocity, std::span<const Sym2> drag,
                           std::span<double> out);
void drag_gradient(const SaddleSystem& system, const Eigen::VectorXd& velocity, const Eigen::VectorXd& adjoint,
                   std::span<Sym2> out);
void rasterize(ShapeId id, double s, int n, int subsamples, std::span<double> occupancy);
void mlp_forward(const DesignField& field, std::span<const Point2> points, DesignSnapshot& out);
void mlp_backward(const DesignField& field, std::span<const Point2> points, const DesignGradient& upstream,
                  Eigen::VectorXd& grad);
void effective_drag(std::span<const ShapeSurrogate> shapes, const DesignSnapshot& design, double p,
                    std::span<Sym2> drag, std::span<char> clamped);
void drag_pullback(std::span<const ShapeSurrogate> shapes, const DesignSnapshot& design, double p,
                   std::span<const Sym2> drag, std::span<const Sym2> dj_ddrag, DesignGradient& out);

}  // namespace omp

}  // namespace gradeflow::kernels
