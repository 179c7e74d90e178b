#include "ospde/linear_solvers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace ospde {

TridiagonalLdlt::TridiagonalLdlt(std::vector<double> diagonal, std::vector<double> off_diagonal)
    : d_(std::move(diagonal)), l_(std::move(off_diagonal)) {
    const std::size_t n = d_.size();
    if (n == 0) return;
    if (l_.size() + 1 != n) throw ShapeMismatch("tridiagonal: off-diagonal must have n - 1 entries");
    for (std::size_t i = 0; i + 1 < n; ++i) {
        if (!(d_[i] > 0.0)) throw SolverFailure("tridiagonal matrix is not positive definite", d_[i]);
        const double e = l_[i];
        l_[i] = e / d_[i];
        d_[i + 1] -= l_[i] * e;
    }
    if (!(d_[n - 1] > 0.0)) throw SolverFailure("tridiagonal matrix is not positive definite", d_[n - 1]);
}

void TridiagonalLdlt::solve_in_place(std::span<double> x) const {
    const std::size_t n = d_.size();
    for (std::size_t i = 1; i < n; ++i) x[i] -= l_[i - 1] * x[i - 1];
    for (std::size_t i = 0; i < n; ++i) x[i] /= d_[i];
    for (std::size_t i = n - 1; i-- > 0;) x[i] -= l_[i] * x[i + 1];
}

namespace {

bool is_tridiagonal(const Eigen::SparseMatrix<double, Eigen::RowMajor>& m) {
    for (Eigen::Index r = 0; r < m.outerSize(); ++r) {
        for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(m, r); it; ++it) {
            if (std::abs(it.col() - r) > 1 && it.value() != 0.0) return false;
        }
    }
    return true;
}

std::pair<std::vector<double>, std::vector<double>> tridiagonal_bands(
    const Eigen::SparseMatrix<double, Eigen::RowMajor>& m) {
    const auto n = static_cast<std::size_t>(m.rows());
    std::vector<double> diag(n, 0.0), off(n > 0 ? n - 1 : 0, 0.0);
    for (Eigen::Index r = 0; r < m.outerSize(); ++r) {
        for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(m, r); it; ++it) {
            if (it.col() == r) diag[static_cast<std::size_t>(r)] = it.value();
            if (it.col() == r + 1) off[static_cast<std::size_t>(r)] = it.value();
        }
    }
    return {diag, off};
}

}  // namespace

ImplicitSystem::ImplicitSystem(const StiffnessOperator& stiffness, double dt) : dt_(dt) {
    const auto n = stiffness.matrix.rows();
    Eigen::SparseMatrix<double, Eigen::RowMajor> identity(n, n);
    identity.setIdentity();
    matrix_ = identity + dt * stiffness.matrix;
    matrix_.makeCompressed();
    tridiagonal_ = is_tridiagonal(matrix_);
    if (tridiagonal_) {
        auto [diag, off] = tridiagonal_bands(matrix_);
        tri_.emplace(std::move(diag), std::move(off));
    } else {
        ldlt_ = std::make_shared<Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>>>();
        Eigen::SparseMatrix<double> col = matrix_;
        ldlt_->compute(col);
        if (ldlt_->info() != Eigen::Success) {
            throw SolverFailure("LDL^T factorisation of I + dt A failed", 0.0);
        }
    }
}

Eigen::VectorXd ImplicitSystem::solve(const Eigen::VectorXd& rhs) const {
    if (tridiagonal_) {
        Eigen::VectorXd x = rhs;
        tri_->solve_in_place(std::span<double>(x.data(), static_cast<std::size_t>(x.size())));
        return x;
    }
    Eigen::VectorXd x = ldlt_->solve(rhs);
    if (ldlt_->info() != Eigen::Success) throw SolverFailure("sparse solve failed", 0.0);
    return x;
}

Eigen::VectorXd ImplicitSystem::residual(const Eigen::VectorXd& x, const Eigen::VectorXd& rhs) const {
    Eigen::VectorXd r(x.size());
    for (Eigen::Index row = 0; row < matrix_.outerSize(); ++row) {
        double s = 0.0;
        for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(matrix_, row); it; ++it) {
            s += it.value() * x[it.col()];
        }
        r[row] = s - rhs[row];
    }
    return r;
}

Eigen::VectorXd ImplicitSystem::solve_shifted(const Eigen::VectorXd& shift, const Eigen::VectorXd& rhs) const {
    if (tridiagonal_) {
        auto [diag, off] = tridiagonal_bands(matrix_);
        for (std::size_t i = 0; i < diag.size(); ++i) diag[i] += shift[static_cast<Eigen::Index>(i)];
        TridiagonalLdlt f(std::move(diag), std::move(off));
        Eigen::VectorXd x = rhs;
        f.solve_in_place(std::span<double>(x.data(), static_cast<std::size_t>(x.size())));
        return x;
    }
    Eigen::SparseMatrix<double> m = matrix_;
    for (Eigen::Index i = 0; i < m.rows(); ++i) m.coeffRef(i, i) += shift[i];
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> f(m);
    if (f.info() != Eigen::Success) throw SolverFailure("shifted factorisation failed", 0.0);
    return f.solve(rhs);
}

LcpResult solve_lcp_psor(const ImplicitSystem& system, const Eigen::VectorXd& rhs,
                         const Eigen::VectorXd& lower, const Eigen::VectorXd& initial,
                         const LcpOptions& options) {
    const auto& B = system.matrix();
    const Eigen::Index n = B.rows();
    LcpResult out;
    out.solution = initial.cwiseMax(lower);
    Eigen::VectorXd& x = out.solution;

    std::vector<double> diag(static_cast<std::size_t>(n), 0.0);
    for (Eigen::Index r = 0; r < n; ++r) diag[static_cast<std::size_t>(r)] = B.coeff(r, r);

    const double scale = std::max(1.0, rhs.cwiseAbs().maxCoeff());
    const double tol = options.tolerance * scale;
    auto complementarity = [&](const Eigen::VectorXd& r) {
        double worst = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) {
            worst = std::max(worst, std::abs(std::min(x[i] - lower[i], r[i])));
        }
        return worst;
    };

    out.residual = system.residual(x, rhs);
    out.complementarity = complementarity(out.residual);
    while (out.complementarity > tol) {
        if (out.sweeps >= options.max_sweeps) {
            throw SolverFailure("projected Gauss-Seidel did not converge", out.complementarity);
        }
        for (Eigen::Index r = 0; r < n; ++r) {
            double s = 0.0;
            for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(B, r); it; ++it) {
                s += it.value() * x[it.col()];
            }
            const double gs = x[r] - (s - rhs[r]) / diag[static_cast<std::size_t>(r)];
            x[r] = std::max(lower[r], x[r] + options.relaxation * (gs - x[r]));
        }
        ++out.sweeps;
        out.residual = system.residual(x, rhs);
        out.complementarity = complementarity(out.residual);
    }
    return out;
}

PenalizedResult solve_penalized(const ImplicitSystem& system, const Eigen::VectorXd& rhs,
                                const Eigen::VectorXd& obstacle, double c, std::size_t max_iterations) {
    const Eigen::Index n = rhs.size();
    auto active_set = [&](const Eigen::VectorXd& x) {
        std::vector<bool> a(static_cast<std::size_t>(n), false);
        for (Eigen::Index i = 0; i < n; ++i) a[static_cast<std::size_t>(i)] = std::isfinite(obstacle[i]) && x[i] < obstacle[i];
        return a;
    };

    PenalizedResult out;
    Eigen::VectorXd x = system.solve(rhs);
    std::vector<bool> active = active_set(x);
    const bool any = std::any_of(active.begin(), active.end(), [](bool b) { return b; });
    while (any) {
        if (out.iterations >= max_iterations) {
            throw SolverFailure("active-set penalisation did not converge", 0.0);
        }
        Eigen::VectorXd shift = Eigen::VectorXd::Zero(n);
        Eigen::VectorXd b = rhs;
        for (Eigen::Index i = 0; i < n; ++i) {
            if (active[static_cast<std::size_t>(i)]) {
                shift[i] = c;
                b[i] += c * obstacle[i];
            }
        }
        x = system.solve_shifted(shift, b);
        ++out.iterations;
        auto next = active_set(x);
        if (next == active) break;
        active = std::move(next);
    }
    out.force = Eigen::VectorXd::Zero(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        if (std::isfinite(obstacle[i]) && x[i] < obstacle[i]) out.force[i] = c * (obstacle[i] - x[i]);
    }
    out.solution = std::move(x);
    return out;
}

}  // namespace ospde
