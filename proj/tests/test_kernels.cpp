#include <doctest.h>

#include <random>

#include "gradeflow/kernels.hpp"
#include "support.hpp"

using namespace gradeflow;

TEST_CASE("serial and OpenMP kernels agree bitwise") {
    const Mesh mesh = build_mesh(6, 12, 1.0, 2.0);
    const BoundaryConditions bcs{
        {FlowSegment{Side::Left, 1.0, 0.5, 1.0, true}, FlowSegment{Side::Top, 0.5, 0.5, 1.0, false}}};
    FlowProblem problem(mesh, bcs);
    const PermeabilitySurrogate sur = testing::synthetic_surrogate();
    const std::vector<ShapeId> ids(all_shapes().begin(), all_shapes().end());
    const auto shapes = sur.select(ids);
    const DesignField field = testing::random_field(8, Box{0, 0, 1, 2}, {20, 20}, 3);
    const auto centers = mesh.element_centers();
    const std::size_t n = centers.size();

    DesignSnapshot ds, dp;
    for (DesignSnapshot* d : {&ds, &dp}) {
        d->num_shapes = 8;
        d->rho.resize(n * 8);
        d->s.resize(n);
        d->theta.resize(n);
    }
    kernels::serial::mlp_forward(field, centers, ds);
    kernels::omp::mlp_forward(field, centers, dp);
    CHECK(ds.rho == dp.rho);
    CHECK(ds.s == dp.s);
    CHECK(ds.theta == dp.theta);

    std::vector<Sym2> drag_s(n), drag_p(n);
    std::vector<char> cl_s(n), cl_p(n);
    kernels::serial::effective_drag(shapes, ds, 3.0, drag_s, cl_s);
    kernels::omp::effective_drag(shapes, ds, 3.0, drag_p, cl_p);
    CHECK(drag_s == drag_p);
    CHECK(cl_s == cl_p);

    const FlowSolution sol = problem.solve(drag_s);
    std::vector<double> je_s(n), je_p(n);
    kernels::serial::elemental_dissipation(problem.system(), sol.velocity, drag_s, je_s);
    kernels::omp::elemental_dissipation(problem.system(), sol.velocity, drag_s, je_p);
    CHECK(je_s == je_p);

    std::mt19937_64 rng(1);
    std::normal_distribution<double> normal;
    Eigen::VectorXd adj(sol.velocity.size());
    for (Eigen::Index i = 0; i < adj.size(); ++i) adj[i] = normal(rng);
    std::vector<Sym2> dk_s(n), dk_p(n);
    kernels::serial::drag_gradient(problem.system(), sol.velocity, adj, dk_s);
    kernels::omp::drag_gradient(problem.system(), sol.velocity, adj, dk_p);
    CHECK(dk_s == dk_p);

    DesignGradient gs, gp;
    for (DesignGradient* g : {&gs, &gp}) {
        g->rho.assign(n * 8, 0.0);
        g->s.assign(n, 0.0);
        g->theta.assign(n, 0.0);
    }
    kernels::serial::drag_pullback(shapes, ds, 3.0, drag_s, dk_s, gs);
    kernels::omp::drag_pullback(shapes, ds, 3.0, drag_s, dk_s, gp);
    CHECK(gs.rho == gp.rho);
    CHECK(gs.s == gp.s);
    CHECK(gs.theta == gp.theta);

    Eigen::VectorXd ws = Eigen::VectorXd::Zero(field.num_weights()), wp = ws;
    kernels::serial::mlp_backward(field, centers, gs, ws);
    kernels::omp::mlp_backward(field, centers, gs, wp);
    CHECK(ws == wp);

    std::vector<double> rs(64 * 64), rp(64 * 64);
    kernels::serial::rasterize(ShapeId::Mucosa20, 0.8, 64, 4, rs);
    kernels::omp::rasterize(ShapeId::Mucosa20, 0.8, 64, 4, rp);
    CHECK(rs == rp);
}
