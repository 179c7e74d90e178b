#include "ospde/elliptic_operator.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <tuple>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>

namespace ospde {

namespace {

constexpr double kBandTolerance = 1e-12;

double rayleigh(const CoefficientMatrix& a, const Gradient& eta, std::size_t dim) {
    if (dim == 1) return a[0];
    const double num = eta[0] * (a[0] * eta[0] + a[1] * eta[1]) + eta[1] * (a[2] * eta[0] + a[3] * eta[1]);
    return num / (eta[0] * eta[0] + eta[1] * eta[1]);
}

// Unit eigenvectors of a symmetric 2x2 matrix.
std::array<Gradient, 2> eigen_directions(const CoefficientMatrix& a) {
    const double off = 0.5 * (a[1] + a[2]);
    if (off == 0.0) return {Gradient{1.0, 0.0}, Gradient{0.0, 1.0}};
    const double theta = 0.5 * std::atan2(2.0 * off, a[0] - a[3]);
    return {Gradient{std::cos(theta), std::sin(theta)}, Gradient{-std::sin(theta), std::cos(theta)}};
}

[[noreturn]] void violation(const std::string& what, double t, const Point& x, const Gradient& eta,
                            double q) {
    std::ostringstream msg;
    msg << what << " at t=" << t << ", x=(" << x[0] << ", " << x[1] << "), eta=(" << eta[0] << ", "
        << eta[1] << "), quotient=" << q;
    throw EllipticityViolation(msg.str(), t, x, eta, q);
}

std::pair<double, double> symmetric_eigenvalues(double a11, double a22, double a12) {
    const double mean = 0.5 * (a11 + a22);
    const double radius = std::hypot(0.5 * (a11 - a22), a12);
    return {mean - radius, mean + radius};
}

}  // namespace

CoefficientField identity_coefficients(std::size_t dim) {
    CoefficientField a;
    a.name = "identity";
    a.dim = dim;
    a.evaluate = [](double, const Point&) { return CoefficientMatrix{1.0, 0.0, 0.0, 1.0}; };
    a.lambda = a.Lambda = a.bound = 1.0;
    return a;
}

CoefficientField scalar_sin_coefficients(std::size_t dim, double length) {
    CoefficientField a;
    a.name = "scalar-sin";
    a.dim = dim;
    a.evaluate = [length](double t, const Point& x) {
        const double s = 1.0 + 0.5 * std::sin(2.0 * std::numbers::pi * t) *
                                   std::sin(std::numbers::pi * x[0] / length);
        return CoefficientMatrix{s, 0.0, 0.0, s};
    };
    a.lambda = 0.5;
    a.Lambda = 1.5;
    a.bound = 1.5;
    a.time_dependent = true;
    return a;
}

CoefficientField anisotropic_constant_coefficients(std::size_t dim, double a11, double a22, double a12) {
    CoefficientField a;
    a.name = "anisotropic-const";
    a.dim = dim;
    if (dim == 1) {
        a22 = a11;
        a12 = 0.0;
    }
    const CoefficientMatrix m{a11, a12, a12, a22};
    a.evaluate = [m](double, const Point&) { return m; };
    if (dim == 1) {
        a.lambda = a.Lambda = a11;
    } else {
        std::tie(a.lambda, a.Lambda) = symmetric_eigenvalues(a11, a22, a12);
    }
    a.bound = std::max({std::abs(a11), std::abs(a22), std::abs(a12)});
    return a;
}

CoefficientField tabulated_coefficients(std::size_t dim, std::vector<CoefficientSample> table) {
    if (table.empty()) throw InvalidArgument("tabulated coefficients: empty table");
    CoefficientField a;
    a.name = "tabulated";
    a.dim = dim;
    a.lambda = std::numeric_limits<double>::infinity();
    a.Lambda = 0.0;
    a.bound = 0.0;
    double t0 = table.front().t;
    for (const auto& s : table) {
        const auto [lo, hi] = dim == 1 ? std::pair{s.a[0], s.a[0]}
                                       : symmetric_eigenvalues(s.a[0], s.a[3], s.a[1]);
        a.lambda = std::min(a.lambda, lo);
        a.Lambda = std::max(a.Lambda, hi);
        for (double e : s.a) a.bound = std::max(a.bound, std::abs(e));
        if (s.t != t0) a.time_dependent = true;
    }
    auto shared = std::make_shared<const std::vector<CoefficientSample>>(std::move(table));
    a.evaluate = [shared, dim](double t, const Point& x) {
        const CoefficientSample* best = nullptr;
        double best_d = std::numeric_limits<double>::infinity();
        for (const auto& s : *shared) {
            double d = (s.t - t) * (s.t - t) + (s.x[0] - x[0]) * (s.x[0] - x[0]);
            if (dim == 2) d += (s.x[1] - x[1]) * (s.x[1] - x[1]);
            if (d < best_d) {
                best_d = d;
                best = &s;
            }
        }
        return best->a;
    };
    return a;
}

EllipticityBounds check_ellipticity(const CoefficientField& a, const SpatialGrid& grid,
                                    std::span<const double> times, unsigned random_directions) {
    if (times.empty()) throw InvalidArgument("check_ellipticity: empty time sample set");
    if (a.dim != grid.dim()) throw ShapeMismatch("check_ellipticity: coefficient and grid dimensions differ");
    std::mt19937_64 rng(0x5eed);
    std::normal_distribution<double> normal;
    EllipticityBounds out{std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
    const std::size_t d = grid.dim();

    for (double t : times) {
        for (std::size_t c = 0; c < grid.cell_count(); ++c) {
            const Point x = grid.cell_midpoint(c);
            const CoefficientMatrix m = a(t, x);
            const double scale = std::max(1.0, std::abs(m[0]) + std::abs(m[3]));
            if (d == 2 && std::abs(m[1] - m[2]) > kBandTolerance * scale) {
                violation("coefficient matrix is not symmetric", t, x, {0.0, 0.0},
                          std::numeric_limits<double>::quiet_NaN());
            }
            for (std::size_t e = 0; e < (d == 1 ? 1u : 4u); ++e) {
                if (!std::isfinite(m[e]) || std::abs(m[e]) > a.bound + kBandTolerance) {
                    violation("coefficient entry exceeds the declared bound M", t, x, {0.0, 0.0}, m[e]);
                }
            }

            std::vector<Gradient> directions{{1.0, 0.0}};
            if (d == 2) {
                directions.push_back({0.0, 1.0});
                const auto eig = eigen_directions(m);
                directions.push_back(eig[0]);
                directions.push_back(eig[1]);
                for (unsigned r = 0; r < random_directions; ++r) {
                    Gradient eta{normal(rng), normal(rng)};
                    const double len = std::hypot(eta[0], eta[1]);
                    if (len == 0.0) continue;
                    directions.push_back({eta[0] / len, eta[1] / len});
                }
            }
            for (const auto& eta : directions) {
                const double q = rayleigh(m, eta, d);
                if (q < a.lambda - kBandTolerance) violation("Rayleigh quotient below lambda", t, x, eta, q);
                if (q > a.Lambda + kBandTolerance) violation("Rayleigh quotient above Lambda", t, x, eta, q);
                out.lower = std::min(out.lower, q);
                out.upper = std::max(out.upper, q);
            }
        }
    }
    if (!(out.lower > kBandTolerance)) {
        violation("degenerate coefficients: smallest Rayleigh quotient is not positive", times.front(),
                  {0.0, 0.0}, {1.0, 0.0}, out.lower);
    }
    return out;
}

StiffnessOperator assemble_stiffness(const CoefficientField& a, double t, const SpatialGrid& grid,
                                     bool check) {
    if (check) {
        const double ts[] = {t};
        check_ellipticity(a, grid, ts);
    }
    const std::size_t d = grid.dim();
    const double vol = grid.cell_volume();
    const double inv_mass = 1.0 / vol;
    std::vector<Eigen::Triplet<double>> triplets;
    triplets.reserve(grid.cell_count() * (d == 1 ? 4 : 9));

    for (std::size_t c = 0; c < grid.cell_count(); ++c) {
        const CoefficientMatrix m = a(t, grid.cell_midpoint(c));
        const std::size_t o = grid.cell_origin(c);
        std::array<std::size_t, 3> nodes{o, grid.step(o, 0), d == 2 ? grid.step(o, 1) : 0};
        // Gradient rows: d/dx1 and d/dx2 as combinations of the local nodes.
        double G[2][3] = {{-1.0 / grid.spacing(0), 1.0 / grid.spacing(0), 0.0}, {0.0, 0.0, 0.0}};
        if (d == 2) {
            G[1][0] = -1.0 / grid.spacing(1);
            G[1][2] = 1.0 / grid.spacing(1);
        }
        const std::size_t local = d == 1 ? 2 : 3;
        for (std::size_t i = 0; i < local; ++i) {
            const std::size_t ri = grid.interior_index(nodes[i]);
            if (ri == SpatialGrid::npos) continue;
            for (std::size_t j = 0; j < local; ++j) {
                const std::size_t cj = grid.interior_index(nodes[j]);
                if (cj == SpatialGrid::npos) continue;
                double k = 0.0;
                for (std::size_t p = 0; p < d; ++p) {
                    for (std::size_t q = 0; q < d; ++q) k += G[p][i] * m[2 * p + q] * G[q][j];
                }
                if (k != 0.0) triplets.emplace_back(ri, cj, vol * k * inv_mass);
            }
        }
    }
    StiffnessOperator op;
    op.time = t;
    const auto n = static_cast<Eigen::Index>(grid.interior_count());
    op.matrix.resize(n, n);
    op.matrix.setFromTriplets(triplets.begin(), triplets.end());
    op.matrix.makeCompressed();
    return op;
}

double dirichlet_form(const CoefficientField& a, double t, const SpatialGrid& grid, const GridField& u,
                      const GridField& v) {
    double s = 0.0;
    for (std::size_t c = 0; c < grid.cell_count(); ++c) {
        const CoefficientMatrix m = a(t, grid.cell_midpoint(c));
        const Gradient gu = cell_gradient_at(u, grid, c);
        const Gradient gv = cell_gradient_at(v, grid, c);
        double q = gu[0] * m[0] * gv[0];
        if (grid.dim() == 2) q += gu[0] * m[1] * gv[1] + gu[1] * m[2] * gv[0] + gu[1] * m[3] * gv[1];
        s += grid.cell_volume() * q;
    }
    return s;
}

GridField divergence_term(const CellField& g, const SpatialGrid& grid) {
    if (g.cells() != grid.cell_count()) throw ShapeMismatch("divergence_term: cell count mismatch");
    GridField out(grid.node_count());
    const double vol = grid.cell_volume();
    for (std::size_t c = 0; c < grid.cell_count(); ++c) {
        const std::size_t o = grid.cell_origin(c);
        for (std::size_t axis = 0; axis < grid.dim(); ++axis) {
            const double flux = vol * g.component(c, axis) / grid.spacing(axis);
            // d_axis phi on this cell = (phi[o + e_axis] - phi[o]) / h
            out[grid.step(o, axis)] -= flux;
            out[o] += flux;
        }
    }
    for (std::size_t n = 0; n < grid.node_count(); ++n) {
        out[n] = grid.is_boundary(n) ? 0.0 : out[n] / grid.node_weight(n);
    }
    return out;
}

Eigen::VectorXd restrict_interior(const GridField& u, const SpatialGrid& grid) {
    if (u.size() != grid.node_count()) throw ShapeMismatch("restrict_interior: size mismatch");
    Eigen::VectorXd v(static_cast<Eigen::Index>(grid.interior_count()));
    const auto nodes = grid.interior_nodes();
    for (std::size_t i = 0; i < nodes.size(); ++i) v[static_cast<Eigen::Index>(i)] = u[nodes[i]];
    return v;
}

GridField extend_interior(const Eigen::VectorXd& v, const SpatialGrid& grid, double boundary_value) {
    if (static_cast<std::size_t>(v.size()) != grid.interior_count()) {
        throw ShapeMismatch("extend_interior: size mismatch");
    }
    GridField u(grid.node_count(), boundary_value);
    const auto nodes = grid.interior_nodes();
    for (std::size_t i = 0; i < nodes.size(); ++i) u[nodes[i]] = v[static_cast<Eigen::Index>(i)];
    return u;
}

}  // namespace ospde
