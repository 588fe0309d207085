#include "gradeflow/homogenize.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <sstream>

#include "gradeflow/error.hpp"

namespace gradeflow {

namespace {

SaddleSystem make_periodic_system(int n, const UnitCellOptions& opt) {
    if (n < 2) throw ContractError("unit cell raster needs n >= 2");
    const int m = 2 * n;  // periodic velocity nodes per direction
    const int nv = m * m;
    const int np = n * n;
    const int num_dofs = 2 * nv + np + 1;
    std::vector<ElementDofs> dofs(static_cast<std::size_t>(n) * n);
    for (int ey = 0; ey < n; ++ey) {
        for (int ex = 0; ex < n; ++ex) {
            ElementDofs d{};
            for (int b = 0; b < 3; ++b) {
                for (int a = 0; a < 3; ++a) {
                    const int node = ((2 * ey + b) % m) * m + (2 * ex + a) % m;
                    d[b * 3 + a] = node;
                    d[kVelNodes + b * 3 + a] = nv + node;
                }
            }
            for (int b = 0; b < 2; ++b)
                for (int a = 0; a < 2; ++a) d[kVelDofs + b * 2 + a] = 2 * nv + ((ey + b) % n) * n + (ex + a) % n;
            d[kElemDofs - 1] = num_dofs - 1;
            dofs[static_cast<std::size_t>(ey) * n + ex] = d;
        }
    }
    return SaddleSystem(std::move(dofs), num_dofs, 2 * nv, element_matrices(1.0 / n, 1.0 / n, opt.mu), {}, {}, {});
}

}  // namespace

UnitCellSolver::UnitCellSolver(int n, const UnitCellOptions& options)
    : n_(n), options_(options), system_(make_periodic_system(n, options)) {}

UnitCellSolver::UnitCellSolver(const UnitCellGrid& grid, const UnitCellOptions& options)
    : UnitCellSolver(grid.n, options) {
    set_geometry(grid);
}

void UnitCellSolver::set_geometry(const UnitCellGrid& grid) {
    if (grid.n != n_) throw ContractError("UnitCellSolver: raster resolution does not match the solver");
    ready_ = false;
    std::vector<Sym2> drag(static_cast<std::size_t>(n_) * n_);
    double max_drag = 0.0;
    for (std::size_t e = 0; e < drag.size(); ++e) {
        const double a = options_.alpha_fluid + options_.alpha_solid * grid.occupancy[e];
        drag[e] = Sym2::iso(a);
        max_drag = std::max(max_drag, a);
    }
    if (!(max_drag > 0.0)) {
        throw DegenerateCellError("unit cell has no drag anywhere; periodic flow under body force is unbounded");
    }
    system_.assemble(drag);
    ready_ = true;
}

UnitCellFlow UnitCellSolver::solve(Axis force_axis) {
    if (!ready_) throw ContractError("UnitCellSolver: no geometry set");
    const int m = 2 * n_;
    const int nv = m * m;
    const auto& t = system_.templates();
    Eigen::VectorXd load = Eigen::VectorXd::Zero(system_.num_dofs());
    const int offset = force_axis == Axis::X ? 0 : kVelNodes;
    for (const ElementDofs& d : system_.element_dofs()) {
        for (int k = 0; k < kVelNodes; ++k) load(d[offset + k]) += t.load(k);
    }
    FlowSolution sol;
    try {
        sol = system_.solve_load(load);
    } catch (const SingularSystemError& err) {
        throw DegenerateCellError(std::string("degenerate unit cell: ") + err.what());
    }

    UnitCellFlow out;
    out.n = n_;
    out.u = sol.velocity.head(nv);
    out.v = sol.velocity.tail(nv);
    out.pressure = sol.pressure;
    double su = 0.0, sv = 0.0, sp = 0.0;
    for (const ElementDofs& d : system_.element_dofs()) {
        for (int k = 0; k < kVelNodes; ++k) {
            su += t.load(k) * sol.velocity(d[k]);
            sv += t.load(k) * sol.velocity(d[kVelNodes + k]);
        }
        for (int k = 0; k < kPresDofs; ++k) sp += t.pmean(k) * sol.pressure(d[kVelDofs + k] - 2 * nv);
    }
    out.mean_u = su;  // cell area is 1
    out.mean_v = sv;
    out.mean_pressure = sp;

    Eigen::VectorXd div = Eigen::VectorXd::Zero(sol.pressure.size());
    for (const ElementDofs& d : system_.element_dofs()) {
        ElemVel ue;
        for (int k = 0; k < kVelDofs; ++k) ue(k) = sol.velocity(d[k]);
        const Eigen::Matrix<double, kPresDofs, 1> r = t.div.transpose() * ue;
        for (int k = 0; k < kPresDofs; ++k) div(d[kVelDofs + k] - 2 * nv) += r(k);
    }
    out.divergence_residual = div.cwiseAbs().maxCoeff() / (t.hx * t.hy);
    return out;
}

UnitCellFlow solve_unit_cell(const UnitCellGrid& grid, Axis force_axis, const UnitCellOptions& options) {
    UnitCellSolver solver(grid, options);
    return solver.solve(force_axis);
}

PermeabilitySample permeability_tensor(UnitCellSolver& solver, ShapeId id, double s) {
    PermeabilitySample out;
    out.shape = id;
    out.s = s;
    try {
        solver.set_geometry(geometry::rasterize(id, s, solver.n()));
        const UnitCellFlow fx = solver.solve(Axis::X);
        const UnitCellFlow fy = solver.solve(Axis::Y);
        out.c00 = fx.mean_u;
        out.c01 = fx.mean_v;
        out.c10 = fy.mean_u;
        out.c11 = fy.mean_v;
    } catch (const DegenerateCellError&) {
        out.c00 = out.c11 = kPermeabilityFloor;
        out.floored = true;
        return out;
    }
    if (out.c00 < kPermeabilityFloor) {
        out.c00 = kPermeabilityFloor;
        out.floored = true;
    }
    if (out.c11 < kPermeabilityFloor) {
        out.c11 = kPermeabilityFloor;
        out.floored = true;
    }
    return out;
}

PermeabilitySample permeability_tensor(ShapeId id, double s, int n, const UnitCellOptions& options) {
    UnitCellSolver solver(n, options);
    return permeability_tensor(solver, id, s);
}

const ShapeRecord& HomogenizationDataset::record(ShapeId id) const {
    for (const ShapeRecord& r : shapes)
        if (r.shape == id) return r;
    throw ContractError("dataset has no record for shape '" + std::string(shape_name(id)) + "'");
}

std::vector<double> default_sizes(int count) {
    std::vector<double> out(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i) out[i] = static_cast<double>(i + 1) / count;
    return out;
}

HomogenizationDataset build_dataset(std::span<const ShapeId> shapes, std::span<const double> sizes, int n,
                                    const UnitCellOptions& options) {
    for (std::size_t i = 1; i < sizes.size(); ++i) {
        if (!(sizes[i] > sizes[i - 1])) throw ContractError("build_dataset: sizes must be strictly increasing");
    }
    const auto start = std::chrono::steady_clock::now();
    HomogenizationDataset ds;
    ds.sizes.assign(sizes.begin(), sizes.end());
    ds.resolution = n;
    ds.options = options;
    const int ns = static_cast<int>(sizes.size());
    const int total = static_cast<int>(shapes.size()) * ns;
    std::vector<PermeabilitySample> samples(static_cast<std::size_t>(total));
    // One solver per thread so the symbolic analysis is reused; each pair
    // writes only its own slot.
#pragma omp parallel
    {
        UnitCellSolver solver(n, options);
#pragma omp for schedule(dynamic, 1)
        for (int k = 0; k < total; ++k) samples[k] = permeability_tensor(solver, shapes[k / ns], sizes[k % ns]);
    }
    for (std::size_t m = 0; m < shapes.size(); ++m) {
        ShapeRecord rec{shapes[m], geometry::perimeter_max(shapes[m]), geometry::volume_fraction_max(shapes[m]), {}};
        rec.samples.assign(samples.begin() + m * ns, samples.begin() + (m + 1) * ns);
        ds.shapes.push_back(std::move(rec));
    }
    ds.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return ds;
}

}  // namespace gradeflow
