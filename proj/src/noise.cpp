#include "ospde/noise.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <numbers>

#include <Eigen/Dense>

#include "ospde/elliptic_operator.hpp"

namespace ospde {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::uint64_t counter_key(std::uint64_t seed, std::uint64_t path, std::uint64_t step, std::uint64_t mode) {
    std::uint64_t k = splitmix64(seed);
    k = splitmix64(k ^ (path * 0xd1b54a32d192ed03ULL));
    k = splitmix64(k ^ (step * 0xaef17502108ef2d9ULL));
    k = splitmix64(k ^ (mode * 0x9e6c63d0676a9a99ULL));
    return k;
}

// 53 random bits mapped to (0, 1].
double to_unit(std::uint64_t bits) {
    return (static_cast<double>(bits >> 11) + 1.0) * 0x1.0p-53;
}

double bridge_1d(double x, double y, double length) {
    return std::min(x, y) - x * y / length;
}

std::vector<double> bridge_spectrum(const SpatialGrid& grid, std::size_t n) {
    std::vector<double> values;
    const double pi = std::numbers::pi;
    if (grid.dim() == 1) {
        const double L = grid.extent(0);
        for (std::size_t i = 1; i <= n; ++i) values.push_back(std::pow(L / (static_cast<double>(i) * pi), 2));
        return values;
    }
    const double L1 = grid.extent(0), L2 = grid.extent(1);
    for (std::size_t i = 1; i <= n; ++i) {
        for (std::size_t j = 1; j <= n; ++j) {
            values.push_back(std::pow(L1 / (static_cast<double>(i) * pi), 2) *
                             std::pow(L2 / (static_cast<double>(j) * pi), 2));
        }
    }
    std::sort(values.begin(), values.end(), std::greater<>());
    values.resize(n);
    return values;
}

}  // namespace

double counter_uniform(std::uint64_t seed, std::uint64_t path, std::uint64_t step, std::uint64_t tag) {
    return to_unit(splitmix64(counter_key(seed, path, step, tag) ^ 0x5851f42d4c957f2dULL));
}

double counter_normal(std::uint64_t seed, std::uint64_t path, std::uint64_t step, std::uint64_t mode) {
    const std::uint64_t key = counter_key(seed, path, step, mode);
    const double u1 = to_unit(splitmix64(key ^ 1));
    const double u2 = to_unit(splitmix64(key ^ 2));
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

Kernel rank_one_kernel(std::function<double(const Point&)> phi) {
    Kernel k;
    k.name = "rank-one";
    k.evaluate = [phi](const Point& x, const Point& y) { return phi(x) * phi(y); };
    return k;
}

Kernel rank_one_sine_kernel(const SpatialGrid& grid) {
    const std::size_t dim = grid.dim();
    const double L1 = grid.extent(0), L2 = grid.extent(1);
    Kernel k = rank_one_kernel([=](const Point& x) {
        double v = std::sqrt(2.0 / L1) * std::sin(std::numbers::pi * x[0] / L1);
        if (dim == 2) v *= std::sqrt(2.0 / L2) * std::sin(std::numbers::pi * x[1] / L2);
        return v;
    });
    k.exact_trace = 1.0;
    k.exact_spectrum = [](std::size_t n) {
        std::vector<double> v(n, 0.0);
        if (n > 0) v[0] = 1.0;
        return v;
    };
    return k;
}

Kernel brownian_bridge_kernel(const SpatialGrid& grid) {
    const std::size_t dim = grid.dim();
    const double L1 = grid.extent(0), L2 = grid.extent(1);
    Kernel k;
    k.name = "brownian-bridge";
    k.evaluate = [=](const Point& x, const Point& y) {
        double v = bridge_1d(x[0], y[0], L1);
        if (dim == 2) v *= bridge_1d(x[1], y[1], L2);
        return v;
    };
    k.exact_trace = L1 * L1 / 6.0;
    if (dim == 2) k.exact_trace *= L2 * L2 / 6.0;
    const SpatialGrid copy = grid;
    k.exact_spectrum = [copy](std::size_t n) { return bridge_spectrum(copy, n); };
    return k;
}

Kernel exponential_kernel(double length) {
    if (!(length > 0.0)) throw InvalidArgument("exponential kernel length must be positive");
    Kernel k;
    k.name = "exponential";
    k.evaluate = [length](const Point& x, const Point& y) {
        return std::exp(-std::hypot(x[0] - y[0], x[1] - y[1]) / length);
    };
    return k;
}

Kernel tabulated_kernel(const SpatialGrid& grid, std::vector<double> matrix) {
    const std::size_t n = grid.interior_count();
    if (matrix.size() != n * n) throw ShapeMismatch("tabulated kernel must be (interior nodes)^2 entries");
    Kernel k;
    k.name = "tabulated";
    const SpatialGrid g = grid;
    auto table = std::make_shared<const std::vector<double>>(std::move(matrix));
    auto locate = [g](const Point& x) {
        std::size_t node = static_cast<std::size_t>(std::lround(x[0] / g.spacing(0)));
        if (g.dim() == 2) node += g.nodes_along(0) * static_cast<std::size_t>(std::lround(x[1] / g.spacing(1)));
        return g.interior_index(node);
    };
    k.evaluate = [table, locate, n](const Point& x, const Point& y) {
        const std::size_t i = locate(x), j = locate(y);
        if (i == SpatialGrid::npos || j == SpatialGrid::npos) return 0.0;
        return (*table)[i * n + j];
    };
    return k;
}

CovarianceModel kl_build(const Kernel& kernel, const SpatialGrid& grid, std::size_t modes) {
    const std::size_t n = grid.interior_count();
    if (modes == 0) throw InvalidArgument("kl_build: truncation N must be positive");
    if (modes > n) throw InvalidArgument("kl_build: truncation N exceeds the interior node count");
    const auto nodes = grid.interior_nodes();
    const double w = grid.cell_volume();

    Eigen::MatrixXd op(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    double trace = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const Point xi = grid.coordinates(nodes[i]);
        for (std::size_t j = i; j < n; ++j) {
            const double kij = kernel.evaluate(xi, grid.coordinates(nodes[j]));
            const double kji = j == i ? kij : kernel.evaluate(grid.coordinates(nodes[j]), xi);
            if (std::abs(kij - kji) > 1e-12 * std::max(1.0, std::abs(kij))) {
                throw KernelNotPsd("kernel is not symmetric");
            }
            op(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = w * kij;
            op(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) = w * kij;
        }
        trace += w * kernel.evaluate(xi, xi);
    }

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(op);
    if (solver.info() != Eigen::Success) throw Error("kl_build: eigen decomposition failed");
    const Eigen::VectorXd& values = solver.eigenvalues();  // ascending
    if (values[0] < -1e-10) {
        throw KernelNotPsd("kernel operator has eigenvalue " + std::to_string(values[0]));
    }

    CovarianceModel model;
    model.kernel = kernel.name;
    model.trace = trace;
    double kept = 0.0;
    for (std::size_t m = 0; m < modes; ++m) {
        const Eigen::Index col = static_cast<Eigen::Index>(n - 1 - m);
        const double lambda = std::max(0.0, values[col]);
        Eigen::VectorXd vec = solver.eigenvectors().col(col);
        // Deterministic sign: first clearly non-zero entry positive.
        const double peak = vec.cwiseAbs().maxCoeff();
        for (Eigen::Index i = 0; i < vec.size(); ++i) {
            if (std::abs(vec[i]) > 1e-6 * peak) {
                if (vec[i] < 0.0) vec = -vec;
                break;
            }
        }
        vec /= std::sqrt(w);  // sum_j w e_j^2 = 1
        model.eigenvalues.push_back(lambda);
        model.eigenfunctions.push_back(extend_interior(vec, grid));
        kept += lambda;
    }
    model.discarded_mass = std::max(0.0, trace - kept);
    if (kernel.exact_spectrum && std::isfinite(kernel.exact_trace)) {
        const auto exact = kernel.exact_spectrum(modes);
        double s = 0.0;
        for (double v : exact) s += v;
        model.exact_tail = std::max(0.0, kernel.exact_trace - s);
    }
    return model;
}

CovarianceModel covariance_from_eigenpairs(std::string name, std::vector<double> eigenvalues,
                                           std::vector<GridField> eigenfunctions) {
    if (eigenvalues.size() != eigenfunctions.size() || eigenvalues.empty()) {
        throw InvalidArgument("covariance_from_eigenpairs: need matching, non-empty eigenpairs");
    }
    CovarianceModel model;
    model.kernel = std::move(name);
    model.eigenvalues = std::move(eigenvalues);
    model.eigenfunctions = std::move(eigenfunctions);
    for (double l : model.eigenvalues) {
        if (l < 0.0) throw KernelNotPsd("negative eigenvalue in explicit eigenpairs");
        model.trace += l;
    }
    return model;
}

std::vector<double> sample_draws(std::size_t modes, double dt, const StreamCoordinates& stream,
                                 std::uint64_t step) {
    std::vector<double> draws(modes, 0.0);
    if (dt <= 0.0) return draws;
    const double sd = std::sqrt(dt);
    for (std::size_t i = 0; i < modes; ++i) draws[i] = sd * counter_normal(stream.seed, stream.path, step, i);
    return draws;
}

NoiseIncrement sample_increment(const CovarianceModel& model, double dt, const StreamCoordinates& stream,
                                 std::uint64_t step) {
    NoiseIncrement inc;
    inc.draws = sample_draws(model.modes(), dt, stream, step);
    const std::size_t size = model.eigenfunctions.empty() ? 0 : model.eigenfunctions.front().size();
    inc.field = GridField(size);
    for (std::size_t i = 0; i < model.modes(); ++i) {
        const double amp = std::sqrt(model.eigenvalues[i]) * inc.draws[i];
        if (amp == 0.0) continue;
        const auto& e = model.eigenfunctions[i];
        for (std::size_t n = 0; n < size; ++n) inc.field[n] += amp * e[n];
    }
    return inc;
}

SupCondition check_sup_condition(const CovarianceModel& model) {
    SupCondition out;
    double last = 0.0;
    for (std::size_t i = 0; i < model.modes(); ++i) {
        double sup = 0.0;
        for (double v : model.eigenfunctions[i].values()) sup = std::max(sup, std::abs(v));
        last = model.eigenvalues[i] * sup * sup;
        out.value += last;
    }
    out.still_growing = out.value > 0.0 && last > 0.01 * out.value;
    return out;
}

std::vector<double> eigenfunction_gram(const CovarianceModel& model, const SpatialGrid& grid) {
    const std::size_t n = model.modes();
    std::vector<double> gram(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            gram[i * n + j] = l2_inner(model.eigenfunctions[i], model.eigenfunctions[j], grid);
        }
    }
    return gram;
}

}  // namespace ospde
