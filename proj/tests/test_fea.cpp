#include <doctest.h>

#include <cmath>
#include <vector>

#include <Eigen/Dense>

#include "gradeflow/error.hpp"
#include "gradeflow/fea.hpp"

using namespace gradeflow;

namespace {

BoundaryConditions channel(double ly, double peak = 1.0) {
    return {{FlowSegment{Side::Left, 0.5 * ly, ly, peak, true}, FlowSegment{Side::Right, 0.5 * ly, ly, peak, false}}};
}

std::vector<Sym2> uniform_drag(const Mesh& mesh, double k) {
    return std::vector<Sym2>(static_cast<std::size_t>(mesh.num_elements()), Sym2::iso(k));
}

}  // namespace

TEST_CASE("mesh counts") {
    const Mesh m = build_mesh(15, 15, 1.0, 1.0);
    CHECK(m.num_vel_nodes() == 961);
    CHECK(m.num_pres_nodes() == 256);
    CHECK(m.num_elements() == 225);
    CHECK(m.num_dofs() == 2 * 961 + 256 + 1);
    const Mesh bent = build_mesh(20, 60, 1.0, 3.0);
    CHECK(bent.num_elements() == 1200);
    CHECK_THROWS_AS(build_mesh(1, 1, 1.0, 1.0), ContractError);
    CHECK_THROWS_AS(build_mesh(10, 10, 1.0, 2.0), ContractError);
}

TEST_CASE("element dof maps cover every dof") {
    const Mesh m = build_mesh(4, 3, 4.0, 3.0);
    std::vector<int> hits(static_cast<std::size_t>(m.num_dofs()), 0);
    for (int e = 0; e < m.num_elements(); ++e) {
        const Point2 c = m.element_center(e);
        CHECK(c.x > 0.0);
        CHECK(c.x < m.lx);
        CHECK(c.y > 0.0);
        CHECK(c.y < m.ly);
        for (int d : m.element_dofs(e)) {
            REQUIRE(d >= 0);
            REQUIRE(d < m.num_dofs());
            hits[static_cast<std::size_t>(d)] = 1;
        }
    }
    for (int h : hits) CHECK(h == 1);
}

TEST_CASE("element matrices") {
    const double h = 0.2;
    const ElementTemplates t = element_matrices(h, h, 1.0);
    ElemVel ux = ElemVel::Zero();
    ux.head<kVelNodes>().setConstant(1.0);
    ElemVel uy = ElemVel::Zero();
    uy.tail<kVelNodes>().setConstant(1.0);

    SUBCASE("viscous block is symmetric and ignores translations") {
        CHECK((t.viscous - t.viscous.transpose()).norm() < 1e-12);
        CHECK(std::abs(ux.dot(t.viscous * ux)) < 1e-12);
        CHECK(std::abs(uy.dot(t.viscous * uy)) < 1e-12);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(t.viscous);
        CHECK(es.eigenvalues().minCoeff() > -1e-12);
    }
    SUBCASE("mass integrates constants to the element area") {
        const Eigen::Matrix<double, kVelNodes, 1> one = Eigen::Matrix<double, kVelNodes, 1>::Ones();
        CHECK(one.dot(t.mass * one) == doctest::Approx(h * h).epsilon(1e-12));
        CHECK(ux.dot(t.brinkman_mass() * ux) == doctest::Approx(h * h).epsilon(1e-12));
        CHECK(t.load.sum() == doctest::Approx(h * h).epsilon(1e-12));
        CHECK(t.pmean.sum() == doctest::Approx(h * h).epsilon(1e-12));
    }
    SUBCASE("constant velocity is divergence free") {
        CHECK((t.div.transpose() * ux).norm() < 1e-12);
        CHECK((t.div.transpose() * uy).norm() < 1e-12);
    }
    SUBCASE("isotropic Brinkman block is a scaled mass") {
        CHECK((t.brinkman(Sym2::iso(3.5)) - 3.5 * t.brinkman_mass()).norm() < 1e-12);
    }
    SUBCASE("anisotropic Brinkman block couples the components") {
        const Sym2 k{2.0, 0.5, 1.0};
        const auto b = t.brinkman(k);
        CHECK((b - b.transpose()).norm() < 1e-12);
        CHECK(ux.dot(b * uy) == doctest::Approx(0.5 * h * h).epsilon(1e-12));
    }
}

TEST_CASE("single-element system matches a hand-assembled block matrix") {
    const Mesh m = build_mesh(2, 2, 2.0, 2.0);
    FlowProblem problem(m, channel(2.0));
    const std::vector<Sym2> drag = {Sym2{1.0, 0.2, 2.0}, Sym2::iso(0.0), Sym2::iso(3.0), Sym2{0.5, -0.1, 0.4}};
    const Eigen::SparseMatrix<double> full = problem.system().full_matrix(drag);
    const ElementTemplates& t = problem.templates();
    Eigen::MatrixXd oracle = Eigen::MatrixXd::Zero(m.num_dofs(), m.num_dofs());
    for (int e = 0; e < m.num_elements(); ++e) {
        Eigen::Matrix<double, kElemDofs, kElemDofs> ke = Eigen::Matrix<double, kElemDofs, kElemDofs>::Zero();
        ke.topLeftCorner<kVelDofs, kVelDofs>() = t.viscous + t.brinkman(drag[static_cast<std::size_t>(e)]);
        ke.block<kVelDofs, kPresDofs>(0, kVelDofs) = t.div;
        ke.block<kPresDofs, kVelDofs>(kVelDofs, 0) = t.div.transpose();
        ke.block<kPresDofs, 1>(kVelDofs, kVelDofs + kPresDofs) = t.pmean;
        ke.block<1, kPresDofs>(kVelDofs + kPresDofs, kVelDofs) = t.pmean.transpose();
        const ElementDofs dofs = m.element_dofs(e);
        for (int a = 0; a < kElemDofs; ++a)
            for (int b = 0; b < kElemDofs; ++b) oracle(dofs[a], dofs[b]) += ke(a, b);
    }
    CHECK((Eigen::MatrixXd(full) - oracle).norm() < 1e-12 * oracle.norm());
    CHECK((Eigen::MatrixXd(full) - Eigen::MatrixXd(full).transpose()).norm() == 0.0);
}

TEST_CASE("reduced matrix is exactly symmetric") {
    const Mesh m = build_mesh(6, 6, 1.0, 1.0);
    FlowProblem problem(m, channel(1.0));
    std::vector<Sym2> drag;
    for (int e = 0; e < m.num_elements(); ++e) drag.push_back(Sym2{1.0 + e, 0.1 * (e % 3), 2.0 + 0.5 * e});
    problem.system().assemble(drag);
    const Eigen::SparseMatrix<double>& k = problem.system().matrix();
    const Eigen::SparseMatrix<double> kt = k.transpose();
    CHECK((k - kt).norm() == 0.0);
}

TEST_CASE("no-slip walls with no load give rest") {
    const Mesh m = build_mesh(5, 5, 1.0, 1.0);
    FlowProblem problem(m, BoundaryConditions{});
    const FlowSolution sol = problem.solve(uniform_drag(m, 1e7));
    CHECK(sol.velocity.norm() < 1e-14);
    CHECK(sol.pressure.norm() < 1e-12);
    CHECK(dissipated_power(problem.system(), sol.velocity, uniform_drag(m, 1e7)) == 0.0);
}

TEST_CASE("Poiseuille channel") {
    const double lx = 2.0, ly = 1.0, umax = 1.0, mu = 1.0;
    const Mesh m = build_mesh(8, 4, lx, ly);
    FlowProblem problem(m, channel(ly, umax), mu);
    const std::vector<Sym2> drag = uniform_drag(m, 0.0);
    const FlowSolution sol = problem.solve(drag);
    const int nodes = m.num_vel_nodes();

    double err = 0.0;
    for (int k = 0; k < nodes; ++k) {
        const Point2 p = m.vel_node_position(k);
        const double exact = 4.0 * umax * p.y * (ly - p.y) / (ly * ly);
        err = std::max(err, std::abs(sol.velocity[k] - exact));
        err = std::max(err, std::abs(sol.velocity[nodes + k]));
    }
    CHECK(err < 1e-8);

    // Linear pressure with slope -8 mu umax / H^2.
    const double slope = -8.0 * mu * umax / (ly * ly);
    double mean = 0.0;
    for (int k = 0; k < m.num_pres_nodes(); ++k) mean += sol.pressure[k];
    mean /= m.num_pres_nodes();
    for (int k = 0; k < m.num_pres_nodes(); ++k) {
        const Point2 p = m.pres_node_position(k);
        CHECK(sol.pressure[k] == doctest::Approx(slope * (p.x - 0.5 * lx) + mean).epsilon(1e-8).scale(1.0));
    }
    CHECK(std::abs(mean) < 1e-8);

    // Half the viscous dissipation of the parabola: 8 mu umax^2 L / (3 H).
    const double j_exact = 8.0 * mu * umax * umax * lx / (3.0 * ly);
    const double j = dissipated_power(problem.system(), sol.velocity, drag);
    CHECK(std::abs(j - j_exact) / j_exact < 1e-6);

    double sum = 0.0;
    for (double je : elemental_dissipation(problem.system(), sol.velocity, drag)) {
        CHECK(je >= 0.0);
        sum += je;
    }
    CHECK(sum == doctest::Approx(j).epsilon(1e-12));
}

TEST_CASE("mass is conserved for obstructed flow") {
    const Mesh m = build_mesh(10, 10, 1.0, 1.0);
    const BoundaryConditions bcs{{FlowSegment{Side::Left, 0.3, 0.2, 1.0, true},
                                  FlowSegment{Side::Top, 0.7, 0.4, 0.5, false}}};
    FlowProblem problem(m, bcs);
    std::vector<Sym2> drag;
    for (int e = 0; e < m.num_elements(); ++e) drag.push_back(Sym2{(e % 7) * 50.0 + 20.0, 10.0 * (e % 3), (e % 5) * 40.0 + 30.0});
    const FlowSolution sol = problem.solve(drag);
    const double inflow = bcs.segments[0].nominal_flux();
    CHECK(std::abs(boundary_outflux(m, sol.velocity)) < 1e-8 * inflow);
    CHECK(sol.residual < 1e-10);
}

TEST_CASE("Dirichlet values are imposed exactly") {
    const Mesh m = build_mesh(6, 6, 1.0, 1.0);
    const BoundaryConditions bcs = channel(1.0);
    FlowProblem problem(m, bcs);
    const DirichletData dd = dirichlet_data(m, bcs);
    const FlowSolution sol = problem.solve(uniform_drag(m, 5.0));
    for (int d = 0; d < 2 * m.num_vel_nodes(); ++d)
        if (dd.mask[static_cast<std::size_t>(d)]) REQUIRE(sol.velocity[d] == dd.values[d]);
}

TEST_CASE("energy identity against the unreduced system") {
    const Mesh m = build_mesh(6, 6, 1.0, 1.0);
    FlowProblem problem(m, channel(1.0));
    std::vector<Sym2> drag;
    for (int e = 0; e < m.num_elements(); ++e) drag.push_back(Sym2{(e % 4) * 30.0, 5.0 * (e % 2), 20.0});
    const FlowSolution sol = problem.solve(drag);
    const Eigen::SparseMatrix<double> full = problem.system().full_matrix(drag);
    const int nv = 2 * m.num_vel_nodes();
    const Eigen::VectorXd u = sol.velocity;
    const Eigen::SparseMatrix<double> a = full.topLeftCorner(nv, nv);
    const double quad = 0.5 * u.dot(a * u);
    CHECK(dissipated_power(problem.system(), u, drag) == doctest::Approx(quad).epsilon(1e-8));
}

TEST_CASE("boundary condition validation") {
    CHECK_NOTHROW(validate(channel(1.0), 2.0, 1.0));
    const BoundaryConditions unbalanced{
        {FlowSegment{Side::Left, 0.5, 0.4, 1.0, true}, FlowSegment{Side::Right, 0.5, 0.2, 1.0, false}}};
    CHECK_THROWS_AS(validate(unbalanced, 1.0, 1.0), ConfigError);
    const BoundaryConditions outside{
        {FlowSegment{Side::Left, 0.9, 0.4, 1.0, true}, FlowSegment{Side::Right, 0.5, 0.4, 1.0, false}}};
    CHECK_THROWS_AS(validate(outside, 1.0, 1.0), ConfigError);
    const BoundaryConditions overlap{{FlowSegment{Side::Left, 0.3, 0.4, 1.0, true},
                                      FlowSegment{Side::Left, 0.5, 0.4, 1.0, false}}};
    CHECK_THROWS_AS(validate(overlap, 1.0, 1.0), ConfigError);
}

TEST_CASE("assembly rejects invalid drag tensors") {
    const Mesh m = build_mesh(3, 3, 1.0, 1.0);
    FlowProblem problem(m, channel(1.0));
    std::vector<Sym2> drag = uniform_drag(m, 1.0);
    drag[4] = Sym2{1.0, 2.0, 1.0};
    CHECK_THROWS_AS(problem.solve(drag), ContractError);
    drag[4] = Sym2::iso(std::nan(""));
    CHECK_THROWS_AS(problem.solve(drag), ContractError);
    drag.pop_back();
    CHECK_THROWS_AS(problem.solve(drag), ContractError);
}

TEST_CASE("mesh refinement changes J only slightly for a fixed design") {
    // Diffuser inlet/outlet with a smooth central obstacle given in physical space.
    auto solve_j = [](int n) {
        const Mesh m = build_mesh(n, n, 1.0, 1.0);
        const BoundaryConditions bcs{{FlowSegment{Side::Left, 0.5, 1.0, 1.0, true},
                                      FlowSegment{Side::Right, 0.5, 1.0 / 3.0, 3.0, false}}};
        FlowProblem problem(m, bcs);
        std::vector<Sym2> drag;
        for (int e = 0; e < m.num_elements(); ++e) {
            const Point2 c = m.element_center(e);
            const double r = std::hypot(c.x - 0.5, c.y - 0.5);
            drag.push_back(Sym2::iso(100.0 * std::exp(-r * r / 0.02)));
        }
        const FlowSolution sol = problem.solve(drag);
        return dissipated_power(problem.system(), sol.velocity, drag);
    };
    const double coarse = solve_j(15);
    const double fine = solve_j(30);
    CHECK(std::abs(coarse - fine) / fine < 0.02);
}
