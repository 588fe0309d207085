#include <doctest.h>

#include <chrono>
#include <cmath>
#include <random>

#include "gradeflow/error.hpp"
#include "gradeflow/sensitivity.hpp"
#include "support.hpp"

using namespace gradeflow;

namespace {

// Inflow on the left, outflow on the top: no mirror symmetry to hide errors.
BoundaryConditions corner_flow() {
    return {{FlowSegment{Side::Left, 0.3, 0.4, 1.0, true}, FlowSegment{Side::Top, 0.6, 0.4, 1.0, false}}};
}

DesignSnapshot uniform_design(int elements, std::vector<double> rho, double s, double theta) {
    DesignSnapshot d;
    d.num_shapes = static_cast<int>(rho.size());
    for (int e = 0; e < elements; ++e) {
        d.rho.insert(d.rho.end(), rho.begin(), rho.end());
        d.s.push_back(s);
        d.theta.push_back(theta);
    }
    return d;
}

double directional_fd(DesignEvaluator& ev, const DesignField& f, const Eigen::VectorXd& dir, const LossParams& lp,
                      double h) {
    DesignField a = f, b = f;
    a.set_weights(f.weights() + h * dir);
    b.set_weights(f.weights() - h * dir);
    return (ev.evaluate(a, lp, false).loss.L - ev.evaluate(b, lp, false).loss.L) / (2 * h);
}

}  // namespace

TEST_CASE("loss examples") {
    CHECK(loss(3.0, 0.0, 0.7, 0.2, 3.0).L == 1.0);
    CHECK(loss(3.0, 0.4, 0.0, 0.0, 2.0).L == 1.5);
    CHECK(loss(2.0, 0.5, 0.05, 0.1, 1.0).L == doctest::Approx(2.0625).epsilon(1e-15));
    CHECK_THROWS_AS(loss(1.0, 0.0, 0.0, 0.0, 0.0), ContractError);
}

TEST_CASE("constraint values") {
    const Mesh mesh = build_mesh(4, 4, 1.0, 1.0);
    const auto shapes = testing::synthetic_surrogate().select(std::vector<ShapeId>{ShapeId::Circle, ShapeId::Square});

    SUBCASE("fluid design meets a full volume target") {
        const DesignSnapshot d = uniform_design(16, {0.5, 0.5}, 0.0, 1.0);
        CHECK(constraint_value(d, shapes, Constraint{ConstraintMode::Volume, 1.0}, mesh) == doctest::Approx(0.0));
    }
    SUBCASE("contact area equal to its target") {
        const DesignSnapshot d = uniform_design(16, {0.3, 0.7}, 0.5, 1.0);
        const double total = 16 * 0.5 * (0.3 * shapes[0].gamma_max + 0.7 * shapes[1].gamma_max);
        CHECK(constraint_value(d, shapes, Constraint{ConstraintMode::ContactArea, total}, mesh) ==
              doctest::Approx(0.0).scale(1.0));
    }
    SUBCASE("brute-force summation over a varied design") {
        DesignSnapshot d;
        d.num_shapes = 2;
        for (int e = 0; e < 16; ++e) {
            const double r = 0.05 * e;
            d.rho.push_back(r);
            d.rho.push_back(1 - r);
            d.s.push_back(0.06 * e);
            d.theta.push_back(0.0);
        }
        double area = 0.0, fluid = 0.0;
        for (int e = 0; e < 16; ++e) {
            area += d.s[e] * (d.rho[2 * e] * shapes[0].gamma_max + d.rho[2 * e + 1] * shapes[1].gamma_max);
            fluid += mesh.element_area() *
                     (1 - d.s[e] * d.s[e] * (d.rho[2 * e] * shapes[0].v_max + d.rho[2 * e + 1] * shapes[1].v_max));
        }
        CHECK(constraint_value(d, shapes, Constraint{ConstraintMode::ContactArea, 60.0}, mesh) ==
              doctest::Approx(1 - area / 60.0).epsilon(1e-14));
        CHECK(constraint_value(d, shapes, Constraint{ConstraintMode::ContactArea, 60.0, 0.25}, mesh) ==
              doctest::Approx(1 - 0.25 * area / 60.0).epsilon(1e-14));
        CHECK(constraint_value(d, shapes, Constraint{ConstraintMode::Volume, 0.4}, mesh) ==
              doctest::Approx(fluid / 0.4 - 1).epsilon(1e-14));
    }
    SUBCASE("mismatched inputs") {
        const DesignSnapshot d = uniform_design(15, {0.5, 0.5}, 0.5, 1.0);
        CHECK_THROWS_AS(constraint_value(d, shapes, Constraint{}, mesh), ContractError);
        const DesignSnapshot ok = uniform_design(16, {0.5, 0.5}, 0.5, 1.0);
        CHECK_THROWS_AS(constraint_value(ok, shapes, Constraint{ConstraintMode::Volume, 1.5}, mesh), ContractError);
        CHECK_THROWS_AS(constraint_value(ok, shapes, Constraint{ConstraintMode::ContactArea, 0.0}, mesh),
                        ContractError);
    }
}

TEST_CASE("constraint-only gradient matches the hand derivative") {
    const Mesh mesh = build_mesh(3, 3, 1.0, 1.0);
    FlowProblem problem(mesh, corner_flow());
    const auto shapes = testing::synthetic_surrogate().select(std::vector<ShapeId>{ShapeId::Ellipse, ShapeId::Mucosa10});
    const double target = 20.0;
    DesignEvaluator ev(problem, shapes, Constraint{ConstraintMode::ContactArea, target});
    const DesignSnapshot d = uniform_design(9, {0.4, 0.6}, 0.3, 0.5);
    LossParams lp;
    lp.alpha = 0.7;
    lp.lambda = 0.2;
    lp.J0 = 1.0;
    lp.objective_weight = 0.0;
    DesignGradient grad;
    const Evaluation out = ev.evaluate_snapshot(d, lp, true, &grad);
    const double g = out.loss.g;
    const double dl_dg = 2 * lp.alpha * g + lp.lambda;
    // g = 1 - sum s (rho_1 G_1 + rho_2 G_2) / target
    const double weighted = 0.4 * shapes[0].gamma_max + 0.6 * shapes[1].gamma_max;
    for (int e = 0; e < 9; ++e) {
        CHECK(grad.s[e] == doctest::Approx(-dl_dg * weighted / target).epsilon(1e-12));
        CHECK(grad.rho[2 * e] == doctest::Approx(-dl_dg * 0.3 * shapes[0].gamma_max / target).epsilon(1e-12));
        CHECK(grad.rho[2 * e + 1] == doctest::Approx(-dl_dg * 0.3 * shapes[1].gamma_max / target).epsilon(1e-12));
        CHECK(grad.theta[e] == 0.0);
    }
}

TEST_CASE("end-to-end gradient agrees with central differences") {
    const Mesh mesh = build_mesh(5, 5, 1.0, 1.0);
    FlowProblem problem(mesh, corner_flow());
    const auto shapes = testing::synthetic_surrogate().select(std::vector<ShapeId>{ShapeId::Ellipse, ShapeId::FishBody2});
    std::mt19937_64 rng(2024);
    for (ConstraintMode mode : {ConstraintMode::Volume, ConstraintMode::ContactArea}) {
        const Constraint con{mode, mode == ConstraintMode::Volume ? 0.5 : 10.0};
        DesignEvaluator ev(problem, shapes, con);
        const DesignField f = testing::random_field(2, Box{0, 0, 1, 1}, {8, 8}, 99);
        LossParams lp;
        lp.alpha = 0.35;
        lp.lambda = 0.1;
        lp.p = 3.0;
        lp.J0 = 2.0;
        const Evaluation out = ev.evaluate(f, lp, true);
        REQUIRE(out.gradient.size() == f.num_weights());
        double worst = 0.0;
        for (int k = 0; k < 20; ++k) {
            const Eigen::VectorXd dir = testing::random_direction(f.num_weights(), rng);
            const double fd = directional_fd(ev, f, dir, lp, 1e-6);
            const double ad = out.gradient.dot(dir);
            worst = std::max(worst, std::abs(fd - ad) / std::max(std::abs(fd), 1e-8));
        }
        CAPTURE(static_cast<int>(mode));
        CHECK(worst < 1e-4);
    }
}

TEST_CASE("gradient with respect to the design snapshot") {
    const Mesh mesh = build_mesh(4, 4, 1.0, 1.0);
    FlowProblem problem(mesh, corner_flow());
    const auto shapes = testing::synthetic_surrogate().select(std::vector<ShapeId>{ShapeId::Circle, ShapeId::Ellipse});
    DesignEvaluator ev(problem, shapes, Constraint{ConstraintMode::Volume, 0.6});
    const DesignField f = testing::random_field(2, Box{0, 0, 1, 1}, {6}, 5);
    const DesignSnapshot d = ev.design(f);
    LossParams lp;
    lp.alpha = 0.2;
    lp.p = 2.0;
    lp.J0 = 1.0;
    DesignGradient grad;
    ev.evaluate_snapshot(d, lp, true, &grad);
    const double h = 1e-6;
    for (int e : {0, 7, 15}) {
        DesignSnapshot a = d, b = d;
        a.s[e] += h;
        b.s[e] -= h;
        const double fd_s = (ev.evaluate_snapshot(a, lp, false, nullptr).loss.L -
                             ev.evaluate_snapshot(b, lp, false, nullptr).loss.L) / (2 * h);
        CHECK(grad.s[e] == doctest::Approx(fd_s).epsilon(1e-5));
        a = d;
        b = d;
        a.theta[e] += h;
        b.theta[e] -= h;
        const double fd_t = (ev.evaluate_snapshot(a, lp, false, nullptr).loss.L -
                             ev.evaluate_snapshot(b, lp, false, nullptr).loss.L) / (2 * h);
        CHECK(grad.theta[e] == doctest::Approx(fd_t).epsilon(1e-5).scale(1e-6));
    }
}

TEST_CASE("symmetry-breaking direction has zero derivative at a symmetric design") {
    // Straight channel, isotropic uniform design: mirroring y is a symmetry, so
    // an antisymmetric perturbation of s has zero first-order effect.
    const Mesh mesh = build_mesh(4, 4, 1.0, 1.0);
    const BoundaryConditions bcs{
        {FlowSegment{Side::Left, 0.5, 1.0, 1.0, true}, FlowSegment{Side::Right, 0.5, 1.0, 1.0, false}}};
    FlowProblem problem(mesh, bcs);
    const auto shapes = testing::synthetic_surrogate().select(std::vector<ShapeId>{ShapeId::Circle});
    DesignEvaluator ev(problem, shapes, Constraint{ConstraintMode::Volume, 0.7});
    const DesignSnapshot d = uniform_design(16, {1.0}, 0.5, 0.0);
    LossParams lp;
    lp.alpha = 0.5;
    lp.J0 = 1.0;
    DesignGradient grad;
    ev.evaluate_snapshot(d, lp, true, &grad);
    double along = 0.0, scale = 0.0;
    for (int e = 0; e < 16; ++e) {
        const int row = e / 4;
        const double sign = row < 2 ? 1.0 : -1.0;
        along += sign * grad.s[e];
        scale += std::abs(grad.s[e]);
    }
    CHECK(std::abs(along) < 1e-10 * scale);
}

TEST_CASE("design overrides") {
    const Mesh mesh = build_mesh(3, 3, 1.0, 1.0);
    FlowProblem problem(mesh, corner_flow());
    const auto shapes = testing::synthetic_surrogate().select(std::vector<ShapeId>{ShapeId::FishBody2});
    DesignOptions opt;
    opt.fixed_size = 0.4;
    opt.orientation_enabled = false;
    DesignEvaluator ev(problem, shapes, Constraint{ConstraintMode::Volume, 0.9}, opt);
    const DesignSnapshot d = ev.design(testing::random_field(1, Box{}, {4}, 3));
    for (std::size_t e = 0; e < d.size(); ++e) {
        CHECK(d.s[e] == 0.4);
        CHECK(d.theta[e] == 0.0);
    }
    DesignOptions bad;
    bad.fixed_size = 1.5;
    CHECK_THROWS_AS(DesignEvaluator(problem, shapes, Constraint{}, bad), ContractError);
    CHECK_THROWS_AS(DesignEvaluator(problem, {}, Constraint{}), ContractError);
}

TEST_CASE("gradient costs at most a few forward solves") {
    const Mesh mesh = build_mesh(15, 15, 1.0, 1.0);
    const BoundaryConditions bcs{{FlowSegment{Side::Left, 0.5, 1.0, 1.0, true},
                                  FlowSegment{Side::Right, 0.5, 1.0 / 3.0, 3.0, false}}};
    FlowProblem problem(mesh, bcs);
    const auto shapes = testing::synthetic_surrogate().select(std::vector<ShapeId>{ShapeId::Square});
    DesignEvaluator ev(problem, shapes, Constraint{ConstraintMode::Volume, 0.5});
    const DesignField f = DesignField::xavier(1, Box{}, 77);
    LossParams lp;
    lp.J0 = 1.0;
    auto time = [&](bool grad) {
        double best = 1e30;
        for (int rep = 0; rep < 5; ++rep) {
            const auto t0 = std::chrono::steady_clock::now();
            ev.evaluate(f, lp, grad);
            best = std::min(best, std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
        }
        return best;
    };
    const double forward = time(false);
    const double both = time(true);
    CHECK(both / forward < 3.0);
}
