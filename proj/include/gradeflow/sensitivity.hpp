#pragma once

#include <optional>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "gradeflow/design_field.hpp"
#include "gradeflow/fea.hpp"
#include "gradeflow/surrogate.hpp"

namespace gradeflow {

enum class ConstraintMode { ContactArea, Volume };

/// Contact area: g = 1 - (sum_e sum_m rho s gamma_m * length_scale) / target.
/// Volume:       g = (sum_e V_fluid,e) / (V_total * target) - 1.
struct Constraint {
    ConstraintMode mode = ConstraintMode::Volume;
    double target = 0.5;
    /// Multiplies per-cell perimeters; 1 measures interface length in unit
    /// cells, the element size h measures it in domain units.
    double length_scale = 1.0;
    friend bool operator==(const Constraint&, const Constraint&) = default;
};

struct LossBreakdown {
    double J = 0.0;
    double g = 0.0;
    double L = 0.0;
    double J0 = 1.0;
};

/// L = J / J0 + alpha g^2 + lambda g. Throws ContractError unless J0 > 0.
LossBreakdown loss(double J, double g, double alpha, double lambda, double J0);

/// Constraint value over a snapshot aligned with `mesh` elements.
double constraint_value(const DesignSnapshot& design, std::span<const ShapeSurrogate> shapes,
                        const Constraint& constraint, const Mesh& mesh);

/// Adds scale * dg/d(rho, s) to `out` (theta does not enter either constraint).
void constraint_gradient(const DesignSnapshot& design, std::span<const ShapeSurrogate> shapes,
                         const Constraint& constraint, const Mesh& mesh, double scale, DesignGradient& out);

/// Overrides applied to the network output before it reaches the physics.
struct DesignOptions {
    std::optional<double> fixed_size;  // s pinned everywhere
    bool orientation_enabled = true;   // false pins theta = 0
};

/// Augmented-Lagrangian and continuation parameters of one evaluation.
struct LossParams {
    double alpha = 0.0;
    double lambda = 0.0;
    double p = 1.0;
    double J0 = 0.0;  // <= 0: use this evaluation's J
    double objective_weight = 1.0;
};

struct Evaluation {
    LossBreakdown loss;
    DesignSnapshot design;
    std::vector<Sym2> drag;
    FlowSolution flow;
    std::vector<double> elemental_j;
    int clamped_elements = 0;
    Eigen::VectorXd gradient;  // dL/dw; empty unless requested
};

/// Forward map from network weights to loss, and its adjoint.
class DesignEvaluator {
public:
    DesignEvaluator(FlowProblem& problem, std::vector<ShapeSurrogate> shapes, Constraint constraint,
                    DesignOptions options = {});

    const std::vector<ShapeSurrogate>& shapes() const { return shapes_; }
    const Constraint& constraint() const { return constraint_; }
    const DesignOptions& options() const { return options_; }
    const std::vector<Point2>& centers() const { return centers_; }
    FlowProblem& problem() { return problem_; }

    /// Network output at element centers with the fixed-size / orientation
    /// overrides applied.
    DesignSnapshot design(const DesignField& field) const;

    Evaluation evaluate(const DesignField& field, const LossParams& params, bool with_gradient);

    /// Evaluation of an explicit snapshot (no network); the gradient is
    /// returned with respect to (rho, s, theta).
    Evaluation evaluate_snapshot(const DesignSnapshot& design, const LossParams& params, bool with_gradient,
                                 DesignGradient* design_gradient);

private:
    FlowProblem& problem_;
    std::vector<ShapeSurrogate> shapes_;
    Constraint constraint_;
    DesignOptions options_;
    std::vector<Point2> centers_;
};

}  // namespace gradeflow
