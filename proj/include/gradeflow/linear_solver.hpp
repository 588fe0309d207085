#pragma once

#include <memory>

#include <Eigen/Core>
#include <Eigen/SparseCore>

namespace gradeflow {

/// Direct sparse LU (UMFPACK) with a reusable symbolic analysis. The matrices
/// assembled here are symmetric, so one factorization serves both the forward
/// and the adjoint solve.
class SparseLu {
public:
    SparseLu();
    ~SparseLu();
    SparseLu(SparseLu&&) noexcept;
    SparseLu& operator=(SparseLu&&) noexcept;

    /// Factorizes A, reusing the symbolic analysis when the pattern is unchanged.
    void factorize(const Eigen::SparseMatrix<double>& a);

    /// Solves A x = b with the factorization of A; applies iterative
    /// refinement until the relative residual is below `tolerance` or throws
    /// SingularSystemError.
    Eigen::VectorXd solve(const Eigen::SparseMatrix<double>& a, const Eigen::VectorXd& b,
                          double tolerance = 1e-9) const;

    double last_residual() const { return last_residual_; }

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
    mutable double last_residual_ = 0.0;
};

}  // namespace gradeflow
