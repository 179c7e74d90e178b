#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <vector>

#include "ospde/errors.hpp"

namespace ospde {

using Point = std::array<double, 2>;
using Gradient = std::array<double, 2>;

/// Uniform tensor grid on the box (0, L_1) x (0, L_2), d in {1, 2}.
///
/// Nodes are numbered lexicographically with the first axis running fastest.
/// Boundary nodes carry the Dirichlet flag. Cells are the (n_1 - 1)(n_2 - 1)
/// boxes spanned by neighbouring nodes and are numbered the same way.
class SpatialGrid {
public:
    SpatialGrid() = default;

    std::size_t dim() const { return dim_; }
    double extent(std::size_t axis) const { return extent_[axis]; }
    std::size_t nodes_along(std::size_t axis) const { return nodes_[axis]; }
    double spacing(std::size_t axis) const { return spacing_[axis]; }

    std::size_t node_count() const { return nodes_[0] * nodes_[1]; }
    std::size_t cell_count() const;
    std::size_t interior_count() const { return interior_.size(); }

    /// Product of the spacings.
    double cell_volume() const { return cell_volume_; }

    /// Trapezoidal (mass-lumped) weight of a node; equals cell_volume() at interior nodes.
    double node_weight(std::size_t node) const { return weights_[node]; }
    std::span<const double> node_weights() const { return weights_; }

    Point coordinates(std::size_t node) const;
    Point cell_midpoint(std::size_t cell) const;
    bool is_boundary(std::size_t node) const { return boundary_[node]; }

    /// Node ids of interior nodes in increasing order.
    std::span<const std::size_t> interior_nodes() const { return interior_; }
    /// Position of a node in interior_nodes(), or npos for boundary nodes.
    std::size_t interior_index(std::size_t node) const { return interior_index_[node]; }

    /// Lower-left node of a cell.
    std::size_t cell_origin(std::size_t cell) const;
    /// Neighbour of a node along an axis (+1 direction).
    std::size_t step(std::size_t node, std::size_t axis) const { return node + stride(axis); }
    std::size_t stride(std::size_t axis) const { return axis == 0 ? 1 : nodes_[0]; }
    std::array<std::size_t, 2> multi_index(std::size_t node) const;

    bool same_shape(const SpatialGrid& other) const;

    static constexpr std::size_t npos = static_cast<std::size_t>(-1);

    friend SpatialGrid build_grid(std::size_t dim, std::span<const double> extents,
                                  std::span<const std::size_t> nodes_per_axis);

private:
    std::size_t dim_ = 0;
    std::array<double, 2> extent_{1.0, 1.0};
    std::array<std::size_t, 2> nodes_{1, 1};
    std::array<double, 2> spacing_{1.0, 1.0};
    double cell_volume_ = 1.0;
    std::vector<double> weights_;
    std::vector<bool> boundary_;
    std::vector<std::size_t> interior_;
    std::vector<std::size_t> interior_index_;
};

/// Builds a uniform grid. Requires dim in {1, 2}, positive extents and at least 3 nodes per axis.
SpatialGrid build_grid(std::size_t dim, std::span<const double> extents,
                       std::span<const std::size_t> nodes_per_axis);

struct TimeGrid {
    TimeGrid() = default;
    TimeGrid(double horizon, std::size_t steps);

    double horizon = 1.0;
    std::size_t steps = 1;

    double dt() const { return steps == 0 ? 0.0 : horizon / static_cast<double>(steps); }
    double time(std::size_t k) const;
    /// Number of left-endpoint intervals fully contained in [0, t].
    std::size_t intervals_until(double t) const;
};

/// Grid function on all nodes of one time slice.
class GridField {
public:
    GridField() = default;
    explicit GridField(std::size_t size, double value = 0.0) : values_(size, value) {}
    explicit GridField(std::vector<double> values) : values_(std::move(values)) {}

    std::size_t size() const { return values_.size(); }
    double& operator[](std::size_t i) { return values_[i]; }
    double operator[](std::size_t i) const { return values_[i]; }
    std::span<double> values() { return values_; }
    std::span<const double> values() const { return values_; }
    std::vector<double>& data() { return values_; }
    const std::vector<double>& data() const { return values_; }

    bool operator==(const GridField&) const = default;

private:
    std::vector<double> values_;
};

/// Time-indexed sequence of fields u_0, ..., u_K.
using FieldPath = std::vector<GridField>;

/// d-vector per cell, stored as [cell * 2 + axis] (second slot unused in 1D).
class CellField {
public:
    CellField() = default;
    explicit CellField(std::size_t cells) : values_(2 * cells, 0.0) {}

    std::size_t cells() const { return values_.size() / 2; }
    Gradient at(std::size_t cell) const { return {values_[2 * cell], values_[2 * cell + 1]}; }
    void set(std::size_t cell, const Gradient& g) {
        values_[2 * cell] = g[0];
        values_[2 * cell + 1] = g[1];
    }
    double& component(std::size_t cell, std::size_t axis) { return values_[2 * cell + axis]; }
    double component(std::size_t cell, std::size_t axis) const { return values_[2 * cell + axis]; }

private:
    std::vector<double> values_;
};

GridField sample_field(const SpatialGrid& grid, const auto& function) {
    GridField out(grid.node_count());
    for (std::size_t n = 0; n < grid.node_count(); ++n) {
        out[n] = function(grid.coordinates(n));
    }
    return out;
}

/// Forward-difference gradient on each cell, taken at the cell's lower-left node.
CellField cell_gradient(const GridField& u, const SpatialGrid& grid);
Gradient cell_gradient_at(const GridField& u, const SpatialGrid& grid, std::size_t cell);
/// Mean of the corner values of a cell.
double cell_average_at(const GridField& u, const SpatialGrid& grid, std::size_t cell);
/// Central differences at interior nodes, one-sided at the boundary.
Gradient node_gradient_at(const GridField& u, const SpatialGrid& grid, std::size_t node);

/// Nodal quadrature of u v.
double l2_inner(const GridField& u, const GridField& v, const SpatialGrid& grid);
double l2_norm(const GridField& u, const SpatialGrid& grid);
/// Nodal quadrature of |u|^p to the power 1/p; p = infinity gives the max norm.
double lp_norm(const GridField& u, const SpatialGrid& grid, double p);
/// Squared L2 norm of the forward-difference gradient.
double gradient_norm_squared(const GridField& u, const SpatialGrid& grid);
/// (|u|^2 + |grad u|^2)^(1/2); throws if u does not vanish on the boundary.
double h1_norm(const GridField& u, const SpatialGrid& grid);

/// Sobolev exponent used by the interpolation norm: infinity for d = 1, 6 for d = 2.
double sobolev_exponent(std::size_t dim);
/// Hoelder conjugate of p (1 for p = infinity).
double conjugate_exponent(double p);

/// (int_0^t (int |u|^p dx)^(q/p) ds)^(1/q), left-endpoint rule in time, sup when q = infinity.
double lpq_norm(std::span<const GridField> path, const SpatialGrid& grid, const TimeGrid& time,
                double p, double q, double t);
/// max(|u|_{2,inf;t}, |u|_{2*,2;t}).
double sharp_norm(std::span<const GridField> path, const SpatialGrid& grid,
                  const TimeGrid& time, double t);
/// min(|v|_{2,1;t}, |v|_{(2*)',2;t}); each branch bounds the pairing against one branch of sharp_norm.
double sharp_dual_surrogate(std::span<const GridField> path, const SpatialGrid& grid,
                            const TimeGrid& time, double t);
/// Left-endpoint quadrature of int_0^t (u_s, v_s) ds.
double space_time_inner(std::span<const GridField> u, std::span<const GridField> v,
                        const SpatialGrid& grid, const TimeGrid& time, double t);

}  // namespace ospde
