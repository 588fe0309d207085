#pragma once

#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "gradeflow/fea.hpp"
#include "gradeflow/geometry.hpp"

namespace gradeflow {

inline constexpr double kPermeabilityFloor = 1e-7;

struct UnitCellOptions {
    double alpha_solid = 1e7;  // drag in fully solid raster cells
    double alpha_fluid = 0.0;  // drag floor added everywhere
    double mu = 1.0;
};

enum class Axis { X, Y };

/// Periodic unit-cell flow for a unit body force along one axis. Velocities
/// are given per periodic velocity node ((2n)^2 of them, row-major).
struct UnitCellFlow {
    int n = 0;
    Eigen::VectorXd u;
    Eigen::VectorXd v;
    Eigen::VectorXd pressure;  // per periodic pressure node (n^2)
    double mean_u = 0.0;
    double mean_v = 0.0;
    double mean_pressure = 0.0;
    double divergence_residual = 0.0;  // max |(B^T U)_j| / h^2
};

/// Periodic Stokes-Brinkman operator on an n x n cell. Each geometry is
/// factorized once and solved for either forcing direction; the symbolic
/// analysis is shared by every geometry set on the same solver.
class UnitCellSolver {
public:
    explicit UnitCellSolver(int n, const UnitCellOptions& options = {});
    UnitCellSolver(const UnitCellGrid& grid, const UnitCellOptions& options = {});

    /// Throws DegenerateCellError if the raster has no drag anywhere.
    void set_geometry(const UnitCellGrid& grid);
    UnitCellFlow solve(Axis force_axis);

    int n() const { return n_; }
    int num_dofs() const { return system_.num_dofs(); }
    const SaddleSystem& system() const { return system_; }

private:
    int n_;
    UnitCellOptions options_;
    SaddleSystem system_;
    bool ready_ = false;
};

UnitCellFlow solve_unit_cell(const UnitCellGrid& grid, Axis force_axis, const UnitCellOptions& options = {});

/// Permeability tensor of one shape at one size from the two periodic solves.
struct PermeabilitySample {
    ShapeId shape = ShapeId::Circle;
    double s = 0.0;
    double c00 = 0.0;
    double c11 = 0.0;
    double c01 = 0.0;  // mean v under x forcing
    double c10 = 0.0;  // mean u under y forcing
    bool floored = false;
};

PermeabilitySample permeability_tensor(ShapeId id, double s, int n = 100, const UnitCellOptions& options = {});
PermeabilitySample permeability_tensor(UnitCellSolver& solver, ShapeId id, double s);

struct ShapeRecord {
    ShapeId shape;
    double gamma_max;
    double v_max;
    std::vector<PermeabilitySample> samples;  // aligned with dataset sizes
};

struct HomogenizationDataset {
    std::vector<double> sizes;
    int resolution = 100;
    int subsamples = 4;
    UnitCellOptions options;
    std::vector<ShapeRecord> shapes;
    double wall_seconds = 0.0;

    const ShapeRecord& record(ShapeId id) const;
};

/// S uniformly spaced sizes on [1/S, 1].
std::vector<double> default_sizes(int count = 6);

/// Solves every shape x size pair (two forcings each). Pairs are independent
/// and are distributed over OpenMP threads; results do not depend on the
/// thread count.
HomogenizationDataset build_dataset(std::span<const ShapeId> shapes, std::span<const double> sizes, int n = 100,
                                    const UnitCellOptions& options = {});

}  // namespace gradeflow
