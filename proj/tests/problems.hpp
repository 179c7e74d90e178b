#pragma once

#include <cmath>
#include <memory>
#include <numbers>

#include "helpers.hpp"
#include "ospde/problem.hpp"
#include "ospde/stepper.hpp"

namespace testing {

// Sine-family model lambda_m = (L / (m pi))^2 with exact discrete sine eigenvectors.
inline std::shared_ptr<const ospde::CovarianceModel> sine_model(const ospde::SpatialGrid& g, std::size_t modes) {
    std::vector<double> l;
    std::vector<ospde::GridField> e;
    for (std::size_t m = 1; m <= modes; ++m) {
        l.push_back(std::pow(g.extent(0) / (static_cast<double>(m) * std::numbers::pi), 2));
        e.push_back(ospde::sine_mode(m, g));
    }
    return std::make_shared<const ospde::CovarianceModel>(ospde::covariance_from_eigenpairs("sine", l, e));
}

inline ospde::GridField sine_field(const ospde::SpatialGrid& g, double amp) {
    ospde::GridField f = ospde::sample_field(g, [amp](const ospde::Point& x) { return amp * std::sin(std::numbers::pi * x[0]); });
    f[0] = 0.0;
    f[g.node_count() - 1] = 0.0;
    return f;
}

// Heat equation on (0, 1) with optional additive sine noise of intensity s.
inline ospde::SPDEProblem heat(std::size_t nodes, double horizon, std::size_t steps, std::size_t modes = 0,
                               double s = 1.0, double amp = 1.0) {
    ospde::SPDEProblem p;
    p.grid = line(nodes);
    p.time = ospde::TimeGrid(horizon, steps);
    p.a = ospde::identity_coefficients(1);
    p.xi = sine_field(p.grid, amp);
    p.seed = 2024;
    if (modes > 0) {
        p.noise = sine_model(p.grid, modes);
        p.h = ospde::additive_noise(p.noise, ospde::Expression::constant(s));
    }
    return p;
}

inline void barrier(ospde::SPDEProblem& p, double amp) {
    ospde::ObstacleSpec o;
    o.barrier = [amp](double, const ospde::Point& x) { return amp * std::sin(std::numbers::pi * x[0]); };
    p.obstacle = o;
}

}  // namespace testing
