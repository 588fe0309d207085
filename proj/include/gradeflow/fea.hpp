#pragma once

#include <array>
#include <span>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include "gradeflow/geometry.hpp"
#include "gradeflow/linear_solver.hpp"
#include "gradeflow/tensor.hpp"

namespace gradeflow {

// Element-local unknowns: 9 x-velocities, 9 y-velocities, 4 pressures and the
// shared pressure-mean multiplier.
inline constexpr int kVelNodes = 9;
inline constexpr int kVelDofs = 18;
inline constexpr int kPresDofs = 4;
inline constexpr int kElemDofs = kVelDofs + kPresDofs + 1;

using ElementDofs = std::array<int, kElemDofs>;
using ElemVel = Eigen::Matrix<double, kVelDofs, 1>;

/// Structured grid of square Q2-Q1 elements on [0, lx] x [0, ly].
///
/// Velocity nodes form a (2nx+1) x (2ny+1) lattice, pressure nodes an
/// (nx+1) x (ny+1) lattice, both numbered row by row from the bottom-left.
/// Global unknowns are ordered [u_x(all nodes), u_y(all nodes), p, multiplier].
/// Element e = ey * nx + ex.
struct Mesh {
    int nx = 0;
    int ny = 0;
    double lx = 0.0;
    double ly = 0.0;
    double hx = 0.0;
    double hy = 0.0;

    double element_area() const { return hx * hy; }
    int num_elements() const { return nx * ny; }
    int vel_cols() const { return 2 * nx + 1; }
    int vel_rows() const { return 2 * ny + 1; }
    int num_vel_nodes() const { return vel_cols() * vel_rows(); }
    int num_pres_nodes() const { return (nx + 1) * (ny + 1); }
    int num_dofs() const { return 2 * num_vel_nodes() + num_pres_nodes() + 1; }
    int multiplier_dof() const { return num_dofs() - 1; }

    int vel_node(int i, int j) const { return j * vel_cols() + i; }
    int pres_node(int i, int j) const { return j * (nx + 1) + i; }
    Point2 vel_node_position(int node) const;
    Point2 pres_node_position(int node) const;
    Point2 element_center(int e) const;
    std::vector<Point2> element_centers() const;
    std::array<int, kVelNodes> element_vel_nodes(int e) const;
    std::array<int, kPresDofs> element_pres_nodes(int e) const;
    ElementDofs element_dofs(int e) const;
    bool on_boundary(int vel_node) const;
};

/// Throws ContractError unless nx, ny >= 2 and lx / nx == ly / ny.
Mesh build_mesh(int nx, int ny, double lx, double ly);

/// Reference-element integrals on an hx x hy rectangle.
struct ElementTemplates {
    double hx = 0.0;
    double hy = 0.0;
    double mu = 1.0;
    Eigen::Matrix<double, kVelDofs, kVelDofs> viscous;  // 2 mu eps(N_i) : eps(N_j)
    Eigen::Matrix<double, kVelNodes, kVelNodes> mass;   // N_i N_j (scalar)
    Eigen::Matrix<double, kVelDofs, kPresDofs> div;     // -L_j div N_i
    Eigen::Matrix<double, kPresDofs, 1> pmean;          // L_j
    Eigen::Matrix<double, kVelNodes, 1> load;           // N_i

    /// Brinkman block for drag tensor k: [[k.xx M, k.xy M], [k.xy M, k.yy M]].
    Eigen::Matrix<double, kVelDofs, kVelDofs> brinkman(const Sym2& k) const;
    /// Vector Brinkman mass blockdiag(M, M), i.e. brinkman(identity).
    Eigen::Matrix<double, kVelDofs, kVelDofs> brinkman_mass() const { return brinkman(Sym2::iso(1.0)); }
    /// Full 23 x 23 element matrix for drag tensor k.
    Eigen::Matrix<double, kElemDofs, kElemDofs> element_matrix(const Sym2& k) const;
};

/// Exact 3x3 Gauss integration of the Q2-Q1 element integrals.
ElementTemplates element_matrices(double hx, double hy, double mu);

enum class Side { Left, Right, Bottom, Top };

/// Parabolic normal-velocity profile on part of one side of the domain.
struct FlowSegment {
    Side side = Side::Left;
    double center = 0.0;  // coordinate along the side
    double span = 0.0;
    double peak = 1.0;
    bool inflow = true;

    /// Signed volumetric flux, positive into the domain: 2/3 * peak * span.
    double nominal_flux() const { return (inflow ? 1.0 : -1.0) * 2.0 * peak * span / 3.0; }
    friend bool operator==(const FlowSegment&, const FlowSegment&) = default;
};

/// Boundary velocity data; every boundary velocity not covered by a segment is
/// no-slip.
struct BoundaryConditions {
    std::vector<FlowSegment> segments;
    friend bool operator==(const BoundaryConditions&, const BoundaryConditions&) = default;
};

/// Checks that segments lie on their side, do not overlap, and that the
/// prescribed fluxes balance. Throws ConfigError.
void validate(const BoundaryConditions& bcs, double lx, double ly);

/// Dirichlet data on the full velocity numbering. Outflow values are rescaled
/// so that the discrete boundary flux of the Q2 interpolant is exactly zero;
/// the applied factor is reported through `outflow_scale`.
struct DirichletData {
    std::vector<char> mask;  // per global dof
    Eigen::VectorXd values;  // per global dof (zero off the mask)
    double outflow_scale = 1.0;
};
DirichletData dirichlet_data(const Mesh& mesh, const BoundaryConditions& bcs);

/// Net outward flux of a full velocity vector through the domain boundary,
/// integrated exactly for the Q2 trace.
double boundary_outflux(const Mesh& mesh, const Eigen::VectorXd& velocity);

struct FlowSolution {
    Eigen::VectorXd velocity;  // [u_x(nodes), u_y(nodes)]
    Eigen::VectorXd pressure;
    double multiplier = 0.0;
    double residual = 0.0;  // relative residual of the reduced solve

    /// Concatenation [velocity, pressure, multiplier].
    Eigen::VectorXd state() const;
};

/// Stokes-Brinkman saddle-point system over an arbitrary element-to-dof map.
///
/// The sparsity pattern and scatter plan are computed once; each call to
/// assemble() refills values for a new set of per-element drag tensors.
/// Dirichlet dofs are eliminated and their contributions moved to the
/// right-hand side. The two velocity dofs of each element's center node are
/// statically condensed before factorization and recovered afterwards.
class SaddleSystem {
public:
    SaddleSystem(std::vector<ElementDofs> element_dofs, int num_dofs, int num_vel_dofs,
                 ElementTemplates templates, std::vector<char> dirichlet_mask, Eigen::VectorXd dirichlet_values,
                 Eigen::VectorXd load);

    /// Throws ContractError if a tensor is non-finite or has a negative
    /// eigenvalue (zero drag is allowed: pure fluid).
    void assemble(std::span<const Sym2> drag);

    /// Factorizes the assembled matrix and solves. Throws SingularSystemError.
    FlowSolution solve();

    /// Solves the assembled operator for a different body load (full
    /// numbering), factorizing only if needed.
    FlowSolution solve_load(const Eigen::VectorXd& load_full);

    /// Solves K mu = rhs on the non-Dirichlet dofs with the last
    /// factorization; returns mu on the full numbering, zero on Dirichlet dofs.
    Eigen::VectorXd solve_adjoint(const Eigen::VectorXd& rhs_full) const;

    /// Reduced (condensed, Dirichlet-eliminated) matrix and right-hand side.
    const Eigen::SparseMatrix<double>& matrix() const { return matrix_; }
    const Eigen::VectorXd& rhs() const { return rhs_; }
    /// Unreduced matrix (no elimination or condensation) for the given drag.
    Eigen::SparseMatrix<double> full_matrix(std::span<const Sym2> drag) const;

    const ElementTemplates& templates() const { return templates_; }
    const std::vector<ElementDofs>& element_dofs() const { return element_dofs_; }
    int num_dofs() const { return num_dofs_; }
    int num_vel_dofs() const { return num_vel_dofs_; }
    int num_reduced() const { return num_free_; }
    const Eigen::VectorXd& dirichlet_values() const { return dirichlet_values_; }
    const std::vector<char>& dirichlet_mask() const { return dirichlet_mask_; }
    double last_residual() const { return lu_.last_residual(); }

    ElemVel gather_velocity(const Eigen::VectorXd& full, int e) const;

private:
    // Local indices of the center-node velocity dofs and of the other 21.
    static constexpr int kInterior = 2;
    static constexpr int kOuter = kElemDofs - kInterior;

    Eigen::VectorXd reduce_rhs(const Eigen::VectorXd& load_full) const;
    Eigen::VectorXd expand(const Eigen::VectorXd& x, const Eigen::VectorXd& load_full, bool homogeneous) const;

    std::vector<ElementDofs> element_dofs_;
    int num_dofs_;
    int num_vel_dofs_;
    ElementTemplates templates_;
    std::vector<char> dirichlet_mask_;
    Eigen::VectorXd dirichlet_values_;
    Eigen::VectorXd load_;
    std::vector<int> reduced_index_;  // per global dof; -1 if Dirichlet or condensed
    int num_free_ = 0;
    Eigen::SparseMatrix<double> matrix_;
    std::vector<int> scatter_;  // per element, kOuter^2 entries; -1 if eliminated
    // Per element: inverse of the interior block and interior-to-outer coupling
    // W = K_II^{-1} K_IO.
    std::vector<Eigen::Matrix2d> interior_inv_;
    std::vector<Eigen::Matrix<double, kInterior, kOuter>> coupling_;
    Eigen::VectorXd lift_;  // Dirichlet lifting on the reduced numbering
    Eigen::VectorXd rhs_;
    SparseLu lu_;
    bool factorized_ = false;
};

/// Global flow problem on a mesh with Dirichlet boundary velocities.
class FlowProblem {
public:
    FlowProblem(const Mesh& mesh, const BoundaryConditions& bcs, double mu = 1.0);

    const Mesh& mesh() const { return mesh_; }
    const ElementTemplates& templates() const { return system_.templates(); }
    SaddleSystem& system() { return system_; }
    const SaddleSystem& system() const { return system_; }
    double outflow_scale() const { return outflow_scale_; }

    /// Assemble with per-element drag tensors C_e^{-1} and solve.
    FlowSolution solve(std::span<const Sym2> drag);

private:
    Mesh mesh_;
    double outflow_scale_ = 1.0;
    SaddleSystem system_;
};

/// Dissipated power J = sum_e 1/2 U_e^T (A^mu + C_e^{-1} (x) M) U_e.
double dissipated_power(const SaddleSystem& system, const Eigen::VectorXd& velocity, std::span<const Sym2> drag);

/// Per-element terms of dissipated_power().
std::vector<double> elemental_dissipation(const SaddleSystem& system, const Eigen::VectorXd& velocity,
                                          std::span<const Sym2> drag);

}  // namespace gradeflow
