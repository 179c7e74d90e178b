#pragma once

#include <memory>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>

#include "ospde/elliptic_operator.hpp"

namespace ospde {

/// LDL^T factorisation of a symmetric tridiagonal matrix (Thomas algorithm).
class TridiagonalLdlt {
public:
    TridiagonalLdlt() = default;
    /// `diagonal` has n entries, `off_diagonal` n - 1.
    TridiagonalLdlt(std::vector<double> diagonal, std::vector<double> off_diagonal);

    std::size_t size() const { return d_.size(); }
    void solve_in_place(std::span<double> rhs) const;

private:
    std::vector<double> d_;  // pivots
    std::vector<double> l_;  // unit lower factor, sub-diagonal
};

/// The per-step system matrix B = I + dt A(t) together with a factorisation.
///
/// 1D operators are tridiagonal and use TridiagonalLdlt; 2D operators use a sparse LDL^T.
class ImplicitSystem {
public:
    ImplicitSystem(const StiffnessOperator& stiffness, double dt);

    std::size_t size() const { return static_cast<std::size_t>(matrix_.rows()); }
    const Eigen::SparseMatrix<double, Eigen::RowMajor>& matrix() const { return matrix_; }
    double dt() const { return dt_; }

    Eigen::VectorXd solve(const Eigen::VectorXd& rhs) const;
    /// B x - rhs, computed the same way everywhere so residuals from different callers agree bitwise.
    Eigen::VectorXd residual(const Eigen::VectorXd& x, const Eigen::VectorXd& rhs) const;

    /// Solves (B + diag(shift)) x = rhs. Used by the implicit penalisation.
    Eigen::VectorXd solve_shifted(const Eigen::VectorXd& shift, const Eigen::VectorXd& rhs) const;

private:
    Eigen::SparseMatrix<double, Eigen::RowMajor> matrix_;
    double dt_;
    bool tridiagonal_;
    std::optional<TridiagonalLdlt> tri_;
    std::shared_ptr<Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>>> ldlt_;
};

struct LcpOptions {
    double tolerance = 1e-12;
    std::size_t max_sweeps = 10000;
    double relaxation = 1.5;
};

struct LcpResult {
    Eigen::VectorXd solution;
    /// r = B x - rhs, unclipped.
    Eigen::VectorXd residual;
    std::size_t sweeps = 0;
    /// max_i |min(x_i - lower_i, r_i)|.
    double complementarity = 0.0;
};

/// Projected SOR for: x >= lower, B x - rhs >= 0, (x - lower)^T (B x - rhs) = 0.
/// The tolerance is relative to max(1, |rhs|_inf). Throws SolverFailure on non-convergence.
LcpResult solve_lcp_psor(const ImplicitSystem& system, const Eigen::VectorXd& rhs,
                         const Eigen::VectorXd& lower, const Eigen::VectorXd& initial,
                         const LcpOptions& options = {});

struct PenalizedResult {
    Eigen::VectorXd solution;
    /// Per-node penalty force c (obstacle - x)^+.
    Eigen::VectorXd force;
    std::size_t iterations = 0;
};

/// Solves B x = rhs + c (obstacle - x)^+ by primal-dual active-set iteration.
/// Entries of `obstacle` equal to -infinity are inactive. Finite termination holds for M-matrices.
PenalizedResult solve_penalized(const ImplicitSystem& system, const Eigen::VectorXd& rhs,
                                const Eigen::VectorXd& obstacle, double c,
                                std::size_t max_iterations = 200);

}  // namespace ospde
