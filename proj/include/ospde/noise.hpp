#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "ospde/grid.hpp"

namespace ospde {

/// Counter-based standard normal draw keyed by (seed, path, step, mode).
///
/// Every draw is a pure function of its coordinates, so paths can be generated in any order,
/// on any thread, and two problems driven by the same coordinates see the same noise.
double counter_normal(std::uint64_t seed, std::uint64_t path, std::uint64_t step, std::uint64_t mode);
/// Uniform in (0, 1] keyed the same way, with an extra stream tag.
double counter_uniform(std::uint64_t seed, std::uint64_t path, std::uint64_t step, std::uint64_t tag);

struct StreamCoordinates {
    std::uint64_t seed = 0;
    std::uint64_t path = 0;
};

/// Symmetric covariance kernel k(x, y).
struct Kernel {
    std::string name;
    std::function<double(const Point&, const Point&)> evaluate;
    /// Trace of the continuous operator, NaN when unknown.
    double exact_trace = std::numeric_limits<double>::quiet_NaN();
    /// Largest N eigenvalues of the continuous operator in closed form, when known.
    std::function<std::vector<double>(std::size_t n)> exact_spectrum;
};

/// phi(x) phi(y).
Kernel rank_one_kernel(std::function<double(const Point&)> phi);
/// Built-in rank-one kernel with phi = prod_i sqrt(2 / L_i) sin(pi x_i / L_i).
Kernel rank_one_sine_kernel(const SpatialGrid& grid);
/// min(x, y) - x y / L on (0, L); tensor product of the 1D kernels in 2D.
Kernel brownian_bridge_kernel(const SpatialGrid& grid);
/// exp(-|x - y| / length).
Kernel exponential_kernel(double length);
/// Kernel matrix given on the interior nodes (row-major, interior ordering of the grid).
Kernel tabulated_kernel(const SpatialGrid& grid, std::vector<double> matrix);

/// Truncated Karhunen-Loeve eigensystem of the discretised covariance operator.
struct CovarianceModel {
    std::string kernel;
    std::vector<double> eigenvalues;     // descending
    std::vector<GridField> eigenfunctions;  // orthonormal in the grid l2 product, zero on the boundary
    /// Quadrature trace sum_j w_j k(x_j, x_j) over interior nodes.
    double trace = 0.0;
    /// trace - sum_{i <= N} lambda_i.
    double discarded_mass = 0.0;
    /// Tail of the closed-form spectrum beyond N when the kernel provides one (else NaN).
    double exact_tail = std::numeric_limits<double>::quiet_NaN();

    std::size_t modes() const { return eigenvalues.size(); }
};

/// Top-N eigenpairs of (kernel matrix) x (cell volume) on interior nodes.
/// Throws InvalidArgument for N = 0 or N > interior count and KernelNotPsd for an eigenvalue below -1e-10.
CovarianceModel kl_build(const Kernel& kernel, const SpatialGrid& grid, std::size_t modes);

/// Model from explicit eigenpairs (no diagonalisation).
CovarianceModel covariance_from_eigenpairs(std::string name, std::vector<double> eigenvalues,
                                           std::vector<GridField> eigenfunctions);

/// Per-mode Brownian increments and the assembled field sum_i sqrt(lambda_i) e_i dB_i.
struct NoiseIncrement {
    std::vector<double> draws;
    GridField field;
};

/// Draws dB_i ~ N(0, dt) for every mode of the model at the given step.
std::vector<double> sample_draws(std::size_t modes, double dt, const StreamCoordinates& stream,
                                 std::uint64_t step);
NoiseIncrement sample_increment(const CovarianceModel& model, double dt, const StreamCoordinates& stream,
                                 std::uint64_t step);

struct SupCondition {
    /// sum_{i <= N} lambda_i |e_i|_inf^2
    double value = 0.0;
    /// Last term exceeds 1% of the sum: the partial sums have not settled.
    bool still_growing = false;
};

SupCondition check_sup_condition(const CovarianceModel& model);

/// Grid-l2 Gram matrix of the eigenfunctions, row-major N x N.
std::vector<double> eigenfunction_gram(const CovarianceModel& model, const SpatialGrid& grid);

}  // namespace ospde
