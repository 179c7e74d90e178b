#pragma once

#include <cmath>
#include <random>
#include <vector>

#include "ospde/grid.hpp"

namespace testing {

inline ospde::SpatialGrid line(std::size_t nodes, double length = 1.0) {
    const std::vector<double> e{length};
    const std::vector<std::size_t> n{nodes};
    return ospde::build_grid(1, e, n);
}

inline ospde::SpatialGrid square(std::size_t nodes, double length = 1.0) {
    const std::vector<double> e{length, length};
    const std::vector<std::size_t> n{nodes, nodes};
    return ospde::build_grid(2, e, n);
}

// Random field vanishing on the boundary.
inline ospde::GridField random_h10(const ospde::SpatialGrid& g, std::mt19937_64& rng) {
    std::normal_distribution<double> d;
    ospde::GridField u(g.node_count());
    for (std::size_t n : g.interior_nodes()) u[n] = d(rng);
    return u;
}

}  // namespace testing
