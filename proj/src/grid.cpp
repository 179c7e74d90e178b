#include "ospde/grid.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace ospde {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void require_same_size(const GridField& u, const SpatialGrid& grid) {
    if (u.size() != grid.node_count()) {
        std::ostringstream msg;
        msg << "field has " << u.size() << " entries, grid has " << grid.node_count() << " nodes";
        throw ShapeMismatch(msg.str());
    }
}

// (int |u|^p dx)^(1/p) for one slice, raised to q afterwards by the caller.
double slice_norm(const GridField& u, const SpatialGrid& grid, double p) {
    return lp_norm(u, grid, p);
}

}  // namespace

ConfigError::ConfigError(std::vector<std::string> messages)
    : Error([&] {
          std::string joined = "invalid configuration:";
          for (const auto& m : messages) joined += "\n  - " + m;
          return joined;
      }()),
      messages_(std::move(messages)) {}

SpatialGrid build_grid(std::size_t dim, std::span<const double> extents,
                       std::span<const std::size_t> nodes_per_axis) {
    if (dim == 0 || dim > 2) {
        throw InvalidArgument("grid dimension must be 1 or 2, got " + std::to_string(dim));
    }
    if (extents.size() < dim || nodes_per_axis.size() < dim) {
        throw InvalidArgument("need one extent and one node count per axis");
    }
    SpatialGrid g;
    g.dim_ = dim;
    g.cell_volume_ = 1.0;
    for (std::size_t a = 0; a < dim; ++a) {
        if (!(extents[a] > 0.0) || !std::isfinite(extents[a])) {
            throw InvalidArgument("grid extents must be positive and finite");
        }
        if (nodes_per_axis[a] < 3) {
            throw InvalidArgument("at least 3 nodes per axis are required");
        }
        g.extent_[a] = extents[a];
        g.nodes_[a] = nodes_per_axis[a];
        g.spacing_[a] = extents[a] / static_cast<double>(nodes_per_axis[a] - 1);
        g.cell_volume_ *= g.spacing_[a];
    }
    if (dim == 1) {
        g.extent_[1] = 1.0;
        g.nodes_[1] = 1;
        g.spacing_[1] = 1.0;
    }

    const std::size_t count = g.node_count();
    g.weights_.assign(count, 0.0);
    g.boundary_.assign(count, false);
    g.interior_index_.assign(count, SpatialGrid::npos);
    for (std::size_t n = 0; n < count; ++n) {
        const auto idx = g.multi_index(n);
        double w = 1.0;
        bool boundary = false;
        for (std::size_t a = 0; a < dim; ++a) {
            const bool edge = idx[a] == 0 || idx[a] + 1 == g.nodes_[a];
            boundary = boundary || edge;
            w *= edge ? 0.5 * g.spacing_[a] : g.spacing_[a];
        }
        g.weights_[n] = w;
        g.boundary_[n] = boundary;
        if (!boundary) {
            g.interior_index_[n] = g.interior_.size();
            g.interior_.push_back(n);
        }
    }
    return g;
}

std::size_t SpatialGrid::cell_count() const {
    std::size_t c = nodes_[0] - 1;
    if (dim_ == 2) c *= nodes_[1] - 1;
    return c;
}

std::array<std::size_t, 2> SpatialGrid::multi_index(std::size_t node) const {
    return {node % nodes_[0], node / nodes_[0]};
}

Point SpatialGrid::coordinates(std::size_t node) const {
    const auto idx = multi_index(node);
    Point p{static_cast<double>(idx[0]) * spacing_[0], 0.0};
    if (dim_ == 2) p[1] = static_cast<double>(idx[1]) * spacing_[1];
    return p;
}

std::size_t SpatialGrid::cell_origin(std::size_t cell) const {
    const std::size_t cx = nodes_[0] - 1;
    return (cell % cx) + (cell / cx) * nodes_[0];
}

Point SpatialGrid::cell_midpoint(std::size_t cell) const {
    Point p = coordinates(cell_origin(cell));
    p[0] += 0.5 * spacing_[0];
    if (dim_ == 2) p[1] += 0.5 * spacing_[1];
    return p;
}

bool SpatialGrid::same_shape(const SpatialGrid& other) const {
    return dim_ == other.dim_ && nodes_ == other.nodes_ && extent_ == other.extent_;
}

TimeGrid::TimeGrid(double horizon_, std::size_t steps_) : horizon(horizon_), steps(steps_) {
    if (!(horizon_ > 0.0) || !std::isfinite(horizon_)) {
        throw InvalidArgument("time horizon must be positive");
    }
}

double TimeGrid::time(std::size_t k) const {
    if (k >= steps) return horizon;
    return static_cast<double>(k) * dt();
}

std::size_t TimeGrid::intervals_until(double t) const {
    if (steps == 0) return 0;
    if (t >= horizon) return steps;
    const double ratio = t / dt();
    return std::min(steps, static_cast<std::size_t>(std::floor(ratio + 1e-9)));
}

Gradient cell_gradient_at(const GridField& u, const SpatialGrid& grid, std::size_t cell) {
    const std::size_t o = grid.cell_origin(cell);
    Gradient g{(u[grid.step(o, 0)] - u[o]) / grid.spacing(0), 0.0};
    if (grid.dim() == 2) g[1] = (u[grid.step(o, 1)] - u[o]) / grid.spacing(1);
    return g;
}

CellField cell_gradient(const GridField& u, const SpatialGrid& grid) {
    require_same_size(u, grid);
    CellField out(grid.cell_count());
    for (std::size_t c = 0; c < grid.cell_count(); ++c) out.set(c, cell_gradient_at(u, grid, c));
    return out;
}

double cell_average_at(const GridField& u, const SpatialGrid& grid, std::size_t cell) {
    const std::size_t o = grid.cell_origin(cell);
    const std::size_t ox = grid.step(o, 0);
    if (grid.dim() == 1) return 0.5 * (u[o] + u[ox]);
    const std::size_t oy = grid.step(o, 1);
    return 0.25 * (u[o] + u[ox] + u[oy] + u[grid.step(oy, 0)]);
}

Gradient node_gradient_at(const GridField& u, const SpatialGrid& grid, std::size_t node) {
    Gradient g{0.0, 0.0};
    const auto idx = grid.multi_index(node);
    for (std::size_t a = 0; a < grid.dim(); ++a) {
        const std::size_t s = grid.stride(a);
        const double h = grid.spacing(a);
        if (idx[a] == 0) {
            g[a] = (u[node + s] - u[node]) / h;
        } else if (idx[a] + 1 == grid.nodes_along(a)) {
            g[a] = (u[node] - u[node - s]) / h;
        } else {
            g[a] = (u[node + s] - u[node - s]) / (2.0 * h);
        }
    }
    return g;
}

double l2_inner(const GridField& u, const GridField& v, const SpatialGrid& grid) {
    require_same_size(u, grid);
    require_same_size(v, grid);
    double s = 0.0;
    for (std::size_t n = 0; n < u.size(); ++n) s += grid.node_weight(n) * u[n] * v[n];
    return s;
}

double l2_norm(const GridField& u, const SpatialGrid& grid) {
    return std::sqrt(l2_inner(u, u, grid));
}

double lp_norm(const GridField& u, const SpatialGrid& grid, double p) {
    require_same_size(u, grid);
    if (p < 1.0) throw InvalidArgument("lp_norm requires p >= 1");
    if (std::isinf(p)) {
        double m = 0.0;
        for (double x : u.values()) m = std::max(m, std::abs(x));
        return m;
    }
    double s = 0.0;
    for (std::size_t n = 0; n < u.size(); ++n) s += grid.node_weight(n) * std::pow(std::abs(u[n]), p);
    return std::pow(s, 1.0 / p);
}

double gradient_norm_squared(const GridField& u, const SpatialGrid& grid) {
    require_same_size(u, grid);
    double s = 0.0;
    for (std::size_t c = 0; c < grid.cell_count(); ++c) {
        const Gradient g = cell_gradient_at(u, grid, c);
        s += grid.cell_volume() * (g[0] * g[0] + g[1] * g[1]);
    }
    return s;
}

double h1_norm(const GridField& u, const SpatialGrid& grid) {
    require_same_size(u, grid);
    double scale = 0.0;
    for (double v : u.values()) scale = std::max(scale, std::abs(v));
    for (std::size_t n = 0; n < u.size(); ++n) {
        if (grid.is_boundary(n) && std::abs(u[n]) > 1e-12 * std::max(1.0, scale)) {
            throw InvalidArgument("h1_norm: field does not vanish on the boundary");
        }
    }
    const double l2 = l2_inner(u, u, grid);
    return std::sqrt(l2 + gradient_norm_squared(u, grid));
}

double sobolev_exponent(std::size_t dim) {
    if (dim == 1) return kInf;
    if (dim == 2) return 6.0;
    throw InvalidArgument("sobolev_exponent: unsupported dimension");
}

double conjugate_exponent(double p) {
    if (std::isinf(p)) return 1.0;
    if (p <= 1.0) return kInf;
    return p / (p - 1.0);
}

double lpq_norm(std::span<const GridField> path, const SpatialGrid& grid, const TimeGrid& time,
                double p, double q, double t) {
    if (p < 1.0 || q < 1.0) throw InvalidArgument("lpq_norm requires p, q >= 1");
    if (t > time.horizon * (1.0 + 1e-12)) throw InvalidArgument("lpq_norm: t exceeds the horizon");
    if (path.size() != time.steps + 1) throw ShapeMismatch("lpq_norm: path length must be steps + 1");
    const std::size_t m = time.intervals_until(t);
    if (std::isinf(q)) {
        double s = 0.0;
        for (std::size_t k = 0; k <= m; ++k) s = std::max(s, slice_norm(path[k], grid, p));
        return s;
    }
    double s = 0.0;
    for (std::size_t k = 0; k < m; ++k) s += time.dt() * std::pow(slice_norm(path[k], grid, p), q);
    return std::pow(s, 1.0 / q);
}

double sharp_norm(std::span<const GridField> path, const SpatialGrid& grid, const TimeGrid& time,
                  double t) {
    const double a = lpq_norm(path, grid, time, 2.0, kInf, t);
    const double b = lpq_norm(path, grid, time, sobolev_exponent(grid.dim()), 2.0, t);
    return std::max(a, b);
}

double sharp_dual_surrogate(std::span<const GridField> path, const SpatialGrid& grid,
                            const TimeGrid& time, double t) {
    const double a = lpq_norm(path, grid, time, 2.0, 1.0, t);
    const double b = lpq_norm(path, grid, time, conjugate_exponent(sobolev_exponent(grid.dim())), 2.0, t);
    return std::min(a, b);
}

double space_time_inner(std::span<const GridField> u, std::span<const GridField> v,
                        const SpatialGrid& grid, const TimeGrid& time, double t) {
    if (u.size() != v.size() || u.size() != time.steps + 1) {
        throw ShapeMismatch("space_time_inner: path lengths differ");
    }
    const std::size_t m = time.intervals_until(t);
    double s = 0.0;
    for (std::size_t k = 0; k < m; ++k) s += time.dt() * l2_inner(u[k], v[k], grid);
    return s;
}

}  // namespace ospde
