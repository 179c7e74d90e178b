#pragma once

#include <array>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/SparseCore>

#include "ospde/grid.hpp"

namespace ospde {

/// Symmetric 2x2 matrix, row-major. In 1D only entry (0,0) is used.
using CoefficientMatrix = std::array<double, 4>;

/// Time-dependent symmetric coefficient matrix a(t, x) with its declared bounds
/// lambda |eta|^2 <= eta^T a eta <= Lambda |eta|^2 and |a_ij| <= M.
struct CoefficientField {
    std::string name;
    std::size_t dim = 1;
    std::function<CoefficientMatrix(double t, const Point& x)> evaluate;
    double lambda = 1.0;
    double Lambda = 1.0;
    double bound = 1.0;
    bool time_dependent = false;

    CoefficientMatrix operator()(double t, const Point& x) const { return evaluate(t, x); }
};

CoefficientField identity_coefficients(std::size_t dim);
/// (1 + 0.5 sin(2 pi t) sin(pi x_1 / L_1)) I, with lambda = 0.5 and Lambda = 1.5.
CoefficientField scalar_sin_coefficients(std::size_t dim, double length = 1.0);
/// Constant symmetric matrix [[a11, a12], [a12, a22]]; bounds are its eigenvalues.
CoefficientField anisotropic_constant_coefficients(std::size_t dim, double a11, double a22,
                                                   double a12 = 0.0);

/// One row of a tabulated coefficient: time, position and the upper triangle (a11[, a12, a22]).
struct CoefficientSample {
    double t = 0.0;
    Point x{0.0, 0.0};
    CoefficientMatrix a{1.0, 0.0, 0.0, 1.0};
};

/// Nearest-sample lookup in (t, x); bounds are taken from the table itself.
CoefficientField tabulated_coefficients(std::size_t dim, std::vector<CoefficientSample> table);

struct EllipticityBounds {
    double lower = 0.0;
    double upper = 0.0;
};

/// Min/max Rayleigh quotient over cell midpoints and the given times, probing random unit
/// vectors, the coordinate axes and the exact eigenvectors. Throws EllipticityViolation when a
/// sample leaves [lambda, Lambda] by more than 1e-12, breaks symmetry or the entry bound, or is
/// degenerate.
EllipticityBounds check_ellipticity(const CoefficientField& a, const SpatialGrid& grid,
                                    std::span<const double> times, unsigned random_directions = 8);

/// Mass-scaled stiffness A(t) = M^{-1} K(t) on interior nodes, where
/// K(t) is the forward-difference Dirichlet form sum_cells |cell| grad u . a grad v
/// with a sampled at cell midpoints.
struct StiffnessOperator {
    Eigen::SparseMatrix<double, Eigen::RowMajor> matrix;
    double time = 0.0;

    std::size_t size() const { return static_cast<std::size_t>(matrix.rows()); }
};

StiffnessOperator assemble_stiffness(const CoefficientField& a, double t, const SpatialGrid& grid,
                                     bool check = true);

/// sum_cells |cell| grad u . a(t, mid) grad v.
double dirichlet_form(const CoefficientField& a, double t, const SpatialGrid& grid,
                      const GridField& u, const GridField& v);

/// Weak divergence D(g): (D(g), phi) = -sum_i (g_i, d_i phi) for every phi vanishing on the
/// boundary. Boundary entries of the result are zero.
GridField divergence_term(const CellField& g, const SpatialGrid& grid);

/// Interior restriction and its inverse (boundary entries set to `boundary_value`).
Eigen::VectorXd restrict_interior(const GridField& u, const SpatialGrid& grid);
GridField extend_interior(const Eigen::VectorXd& v, const SpatialGrid& grid, double boundary_value = 0.0);

}  // namespace ospde
