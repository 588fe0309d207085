#include "gradeflow/sensitivity.hpp"

#include <cmath>
#include <sstream>

#include "gradeflow/error.hpp"
#include "gradeflow/kernels.hpp"

namespace gradeflow {

LossBreakdown loss(double J, double g, double alpha, double lambda, double J0) {
    if (!(J0 > 0.0)) throw ContractError("loss: normalizer J0 must be positive");
    return {J, g, J / J0 + alpha * g * g + lambda * g, J0};
}

namespace {

void check_design(const DesignSnapshot& design, std::span<const ShapeSurrogate> shapes, const Mesh& mesh) {
    if (design.num_shapes != static_cast<int>(shapes.size())) {
        throw ContractError("design has " + std::to_string(design.num_shapes) + " shapes, surrogate has " +
                            std::to_string(shapes.size()));
    }
    if (static_cast<int>(design.size()) != mesh.num_elements()) {
        throw ContractError("design has " + std::to_string(design.size()) + " elements, mesh has " +
                            std::to_string(mesh.num_elements()));
    }
}

void check_constraint(const Constraint& c) {
    if (c.mode == ConstraintMode::ContactArea && !(c.target > 0.0)) {
        throw ContractError("contact-area target must be positive");
    }
    if (c.mode == ConstraintMode::Volume && !(c.target > 0.0 && c.target <= 1.0)) {
        throw ContractError("volume target must lie in (0, 1]");
    }
}

}  // namespace

double constraint_value(const DesignSnapshot& design, std::span<const ShapeSurrogate> shapes,
                        const Constraint& constraint, const Mesh& mesh) {
    check_design(design, shapes, mesh);
    check_constraint(constraint);
    const std::size_t m = shapes.size();
    std::vector<double> gamma(m), vmax(m);
    for (std::size_t k = 0; k < m; ++k) {
        gamma[k] = shapes[k].gamma_max;
        vmax[k] = shapes[k].v_max;
    }
    double total = 0.0;
    if (constraint.mode == ConstraintMode::ContactArea) {
        for (std::size_t e = 0; e < design.size(); ++e)
            total += contact_area(design.fractions(e), design.s[e], gamma, constraint.length_scale);
        return 1.0 - total / constraint.target;
    }
    const double ve = mesh.element_area();
    for (std::size_t e = 0; e < design.size(); ++e) total += fluid_volume(design.fractions(e), design.s[e], vmax, ve);
    return total / (mesh.lx * mesh.ly * constraint.target) - 1.0;
}

void constraint_gradient(const DesignSnapshot& design, std::span<const ShapeSurrogate> shapes,
                         const Constraint& constraint, const Mesh& mesh, double scale, DesignGradient& out) {
    check_design(design, shapes, mesh);
    check_constraint(constraint);
    const std::size_t m = shapes.size();
    const bool contact = constraint.mode == ConstraintMode::ContactArea;
    const double k = contact ? -constraint.length_scale / constraint.target
                             : -(mesh.element_area()) / (mesh.lx * mesh.ly * constraint.target);
    for (std::size_t e = 0; e < design.size(); ++e) {
        const double s = design.s[e];
        double weighted = 0.0;
        for (std::size_t j = 0; j < m; ++j) {
            const double per_shape = contact ? shapes[j].gamma_max : shapes[j].v_max;
            const double rho = design.rho[e * m + j];
            weighted += rho * per_shape;
            // contact: d/drho (rho s gamma); volume: d/drho (-s^2 rho v)
            out.rho[e * m + j] += scale * k * per_shape * (contact ? s : s * s);
        }
        out.s[e] += scale * k * weighted * (contact ? 1.0 : 2.0 * s);
    }
}

DesignEvaluator::DesignEvaluator(FlowProblem& problem, std::vector<ShapeSurrogate> shapes, Constraint constraint,
                                 DesignOptions options)
    : problem_(problem),
      shapes_(std::move(shapes)),
      constraint_(constraint),
      options_(options),
      centers_(problem.mesh().element_centers()) {
    if (shapes_.empty()) throw ContractError("DesignEvaluator: at least one shape is required");
    check_constraint(constraint_);
    if (options_.fixed_size && !(*options_.fixed_size >= 0.0 && *options_.fixed_size <= 1.0)) {
        throw ContractError("DesignEvaluator: fixed size must lie in [0, 1]");
    }
}

DesignSnapshot DesignEvaluator::design(const DesignField& field) const {
    if (field.num_shapes() != static_cast<int>(shapes_.size())) {
        throw ContractError("design field outputs " + std::to_string(field.num_shapes()) + " shapes, problem uses " +
                            std::to_string(shapes_.size()));
    }
    DesignSnapshot d = field.forward(centers_);
    if (options_.fixed_size) std::fill(d.s.begin(), d.s.end(), *options_.fixed_size);
    if (!options_.orientation_enabled) std::fill(d.theta.begin(), d.theta.end(), 0.0);
    return d;
}

Evaluation DesignEvaluator::evaluate_snapshot(const DesignSnapshot& design, const LossParams& params,
                                              bool with_gradient, DesignGradient* design_gradient) {
    const Mesh& mesh = problem_.mesh();
    check_design(design, shapes_, mesh);
    const int ne = mesh.num_elements();
    Evaluation ev;
    ev.design = design;
    ev.drag.resize(ne);
    std::vector<char> clamped(ne, 0);
    kernels::omp::effective_drag(shapes_, design, params.p, ev.drag, clamped);
    for (char c : clamped) ev.clamped_elements += c;

    ev.flow = problem_.solve(ev.drag);
    SaddleSystem& system = problem_.system();
    ev.elemental_j = elemental_dissipation(system, ev.flow.velocity, ev.drag);
    double J = 0.0;
    for (double t : ev.elemental_j) J += t;
    const double g = constraint_value(design, shapes_, constraint_, mesh);
    const double J0 = params.J0 > 0.0 ? params.J0 : J;
    ev.loss = loss(J, g, params.alpha, params.lambda, J0);
    ev.loss.L = params.objective_weight * J / J0 + params.alpha * g * g + params.lambda * g;
    if (!with_gradient) return ev;

    // dJ/dU = (A + K (x) M) U over the velocity dofs.
    const ElementTemplates& t = system.templates();
    Eigen::VectorXd dj_du = Eigen::VectorXd::Zero(system.num_vel_dofs());
    for (int e = 0; e < ne; ++e) {
        const ElemVel ue = system.gather_velocity(ev.flow.velocity, e);
        const ElemVel r = t.viscous * ue + t.brinkman(ev.drag[e]) * ue;
        const ElementDofs& dofs = system.element_dofs()[e];
        for (int k = 0; k < kVelDofs; ++k) dj_du(dofs[k]) += r(k);
    }
    Eigen::VectorXd adjoint = system.solve_adjoint(dj_du);
    std::vector<Sym2> dj_ddrag(ne);
    kernels::omp::drag_gradient(system, ev.flow.velocity, adjoint, dj_ddrag);

    const double dl_dj = params.objective_weight / J0;
    const double dl_dg = 2.0 * params.alpha * g + params.lambda;
    for (Sym2& gk : dj_ddrag) gk = dl_dj * gk;

    DesignGradient grad;
    grad.rho.assign(design.rho.size(), 0.0);
    grad.s.assign(design.s.size(), 0.0);
    grad.theta.assign(design.theta.size(), 0.0);
    kernels::omp::drag_pullback(shapes_, design, params.p, ev.drag, dj_ddrag, grad);
    constraint_gradient(design, shapes_, constraint_, mesh, dl_dg, grad);
    if (options_.fixed_size) std::fill(grad.s.begin(), grad.s.end(), 0.0);
    if (!options_.orientation_enabled) std::fill(grad.theta.begin(), grad.theta.end(), 0.0);
    if (design_gradient) *design_gradient = std::move(grad);
    return ev;
}

Evaluation DesignEvaluator::evaluate(const DesignField& field, const LossParams& params, bool with_gradient) {
    DesignGradient grad;
    Evaluation ev = evaluate_snapshot(design(field), params, with_gradient, &grad);
    if (with_gradient) ev.gradient = field.backward(centers_, grad);
    return ev;
}

}  // namespace gradeflow
