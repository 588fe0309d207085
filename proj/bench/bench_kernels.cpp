// Serial reference kernels against their OpenMP counterparts on a
// bent-pipe-sized problem with all eight shapes.
#include <chrono>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include <omp.h>

#include "gradeflow/design_field.hpp"
#include "gradeflow/fea.hpp"
#include "gradeflow/homogenize.hpp"
#include "gradeflow/kernels.hpp"
#include "gradeflow/surrogate.hpp"

using namespace gradeflow;

namespace {

// Smooth, positive, decreasing samples; the kernels only need a valid fit.
PermeabilitySurrogate synthetic_surrogate() {
    HomogenizationDataset d;
    d.sizes = default_sizes();
    for (ShapeId id : all_shapes()) {
        ShapeRecord r{id, geometry::perimeter_max(id), geometry::volume_fraction_max(id), {}};
        const double aniso = 1.0 + 0.1 * static_cast<int>(id);
        for (double s : d.sizes) {
            PermeabilitySample p;
            p.shape = id;
            p.s = s;
            p.c00 = 0.12 * (1.05 - s) * (1.05 - s) * aniso;
            p.c11 = 0.12 * (1.05 - s) * (1.05 - s);
            r.samples.push_back(p);
        }
        d.shapes.push_back(r);
    }
    return fit_polynomials(d);
}

double time_ms(const std::function<void()>& fn, int repeats) {
    fn();  // warm-up
    const auto start = std::chrono::steady_clock::now();
    for (int i = 0; i < repeats; ++i) fn();
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count() / repeats;
}

void report(const char* name, double serial_ms, double omp_ms, bool identical) {
    std::printf("%-22s %10.3f %10.3f %8.2fx  %s\n", name, serial_ms, omp_ms, serial_ms / omp_ms,
                identical ? "identical" : "MISMATCH");
}

}  // namespace

int main(int argc, char** argv) {
    const int repeats = argc > 1 ? std::stoi(argv[1]) : 20;
    std::printf("threads: %d, repeats: %d\n", omp_get_max_threads(), repeats);
    std::printf("%-22s %10s %10s %9s\n", "kernel", "serial ms", "omp ms", "speedup");

    const Mesh mesh = build_mesh(20, 60, 1.0, 3.0);
    BoundaryConditions bcs;
    bcs.segments = {{Side::Left, 0.5, 0.5, 1.0, true}, {Side::Top, 0.5, 0.5, 1.0, false}};
    FlowProblem problem(mesh, bcs);
    const PermeabilitySurrogate surrogate = synthetic_surrogate();
    const std::vector<ShapeSurrogate> shapes = surrogate.select(all_shapes());
    DesignField field = DesignField::xavier(kShapeCount, {0.0, 0.0, 1.0, 3.0}, 77);
    const std::vector<Point2> centers = mesh.element_centers();
    const std::size_t ne = centers.size();

    DesignSnapshot a, b;
    for (DesignSnapshot* s : {&a, &b}) {
        s->num_shapes = kShapeCount;
        s->rho.resize(ne * kShapeCount);
        s->s.resize(ne);
        s->theta.resize(ne);
    }
    report("mlp_forward", time_ms([&] { kernels::serial::mlp_forward(field, centers, a); }, repeats),
           time_ms([&] { kernels::omp::mlp_forward(field, centers, b); }, repeats),
           a.rho == b.rho && a.s == b.s && a.theta == b.theta);

    std::vector<Sym2> drag_a(ne), drag_b(ne);
    std::vector<char> cl_a(ne), cl_b(ne);
    report("effective_drag", time_ms([&] { kernels::serial::effective_drag(shapes, a, 3.0, drag_a, cl_a); }, repeats),
           time_ms([&] { kernels::omp::effective_drag(shapes, a, 3.0, drag_b, cl_b); }, repeats),
           std::equal(drag_a.begin(), drag_a.end(), drag_b.begin(),
                      [](const Sym2& x, const Sym2& y) { return x.xx == y.xx && x.xy == y.xy && x.yy == y.yy; }));

    const FlowSolution flow = problem.solve(drag_a);
    std::vector<double> ja(ne), jb(ne);
    report("elemental_dissipation",
           time_ms([&] { kernels::serial::elemental_dissipation(problem.system(), flow.velocity, drag_a, ja); },
                   repeats),
           time_ms([&] { kernels::omp::elemental_dissipation(problem.system(), flow.velocity, drag_a, jb); }, repeats),
           ja == jb);

    std::mt19937_64 rng(7);
    std::normal_distribution<double> normal;
    Eigen::VectorXd adjoint(flow.velocity.size());
    for (Eigen::Index i = 0; i < adjoint.size(); ++i) adjoint[i] = normal(rng);
    Eigen::VectorXd state = Eigen::VectorXd::Zero(problem.system().num_dofs());
    state.head(flow.velocity.size()) = flow.velocity;
    Eigen::VectorXd adj_full = Eigen::VectorXd::Zero(state.size());
    adj_full.head(adjoint.size()) = adjoint;
    std::vector<Sym2> ga(ne), gb(ne);
    report("drag_gradient",
           time_ms([&] { kernels::serial::drag_gradient(problem.system(), state, adj_full, ga); }, repeats),
           time_ms([&] { kernels::omp::drag_gradient(problem.system(), state, adj_full, gb); }, repeats),
           std::equal(ga.begin(), ga.end(), gb.begin(),
                      [](const Sym2& x, const Sym2& y) { return x.xx == y.xx && x.xy == y.xy && x.yy == y.yy; }));

    DesignGradient up_a, up_b;
    for (DesignGradient* g : {&up_a, &up_b}) {
        g->rho.assign(ne * kShapeCount, 0.0);
        g->s.assign(ne, 0.0);
        g->theta.assign(ne, 0.0);
    }
    report("drag_pullback",
           time_ms([&] { kernels::serial::drag_pullback(shapes, a, 3.0, drag_a, ga, up_a); }, repeats),
           time_ms([&] { kernels::omp::drag_pullback(shapes, a, 3.0, drag_a, ga, up_b); }, repeats),
           up_a.rho == up_b.rho && up_a.s == up_b.s && up_a.theta == up_b.theta);

    Eigen::VectorXd wa, wb;
    report("mlp_backward", time_ms([&] { kernels::serial::mlp_backward(field, centers, up_a, wa); }, repeats),
           time_ms([&] { kernels::omp::mlp_backward(field, centers, up_a, wb); }, repeats), wa == wb);

    const int n = 100;
    std::vector<double> ra(n * n), rb(n * n);
    report("rasterize", time_ms([&] { kernels::serial::rasterize(ShapeId::Mucosa20, 0.8, n, 4, ra); }, repeats),
           time_ms([&] { kernels::omp::rasterize(ShapeId::Mucosa20, 0.8, n, 4, rb); }, repeats), ra == rb);
    return 0;
}
