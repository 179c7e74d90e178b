#include <cmath>
#include <numbers>

#include "doctest.h"
#include "problems.hpp"
#include "ospde/capacity.hpp"
#include "ospde/stepper.hpp"

using namespace ospde;

namespace {

PotentialSetup setup(std::size_t nodes, double horizon, std::size_t steps) {
    return PotentialSetup{testing::line(nodes), TimeGrid(horizon, steps), identity_coefficients(1)};
}

SpaceTimeCompact slice(double t, double a, double b) {
    return SpaceTimeCompact{t, t, [a, b](const Point& x) { return x[0] >= a && x[0] <= b; }};
}

double total(const FieldPath& m) {
    double s = 0.0;
    for (const auto& f : m) {
        for (double v : f.values()) s += v;
    }
    return s;
}

}  // namespace

TEST_CASE("dominating potential") {
    const PotentialSetup s = setup(17, 0.5, 100);
    FieldPath neg(101, GridField(17, 0.0));
    for (auto& f : neg) {
        for (std::size_t n : s.grid.interior_nodes()) f[n] = -0.3;
    }
    const auto zero = dominating_potential(neg, s, 100.0);
    CHECK(total(zero.measure) == 0.0);
    for (const auto& f : zero.v) {
        for (double v : f.values()) CHECK(v == 0.0);
    }

    // u(t, x) = (1 + t) sin(pi x): grows, so the potential must be pushed up
    FieldPath u;
    for (std::size_t k = 0; k <= 100; ++k) {
        const double t = s.time.time(k);
        GridField f = testing::sine_field(s.grid, 1.0 + t);
        u.push_back(f);
    }
    std::vector<ParabolicPotential> pots;
    for (double n : {10.0, 100.0, 1000.0}) pots.push_back(dominating_potential(u, s, n));
    for (std::size_t k = 0; k <= 100; ++k) {
        for (std::size_t n = 0; n < 17; ++n) {
            CHECK(pots[0].v[k][n] <= pots[1].v[k][n] + 1e-10);
            CHECK(pots[1].v[k][n] <= pots[2].v[k][n] + 1e-10);
        }
    }
    auto shortfall = [&](const ParabolicPotential& p) {
        double m = 0.0;
        for (std::size_t k = 0; k <= 100; ++k) {
            for (std::size_t n = 0; n < 17; ++n) m = std::max(m, u[k][n] - p.v[k][n]);
        }
        return m;
    };
    CHECK(shortfall(pots[1]) < shortfall(pots[0]));
    CHECK(shortfall(pots[2]) < shortfall(pots[1]));
    for (const auto& p : pots) {
        for (const auto& f : p.measure) {
            for (double v : f.values()) CHECK(v >= 0.0);
        }
    }
}

TEST_CASE("regular measure") {
    const PotentialSetup s = setup(33, 0.2, 200);
    const FieldPath zero(201, GridField(33));
    CHECK(total(regular_measure_from_potential(zero, s)) == 0.0);

    // discrete heat solution has zero measure after the initial slice
    SPDEProblem p = testing::heat(33, 0.2, 200);
    const auto u = Stepper(p).solve(Scheme{}, 0).first.u;
    const FieldPath m = regular_measure_from_potential(u, s);
    for (std::size_t k = 1; k < m.size(); ++k) {
        for (double v : m[k].values()) CHECK(std::abs(v) < 1e-12);
    }

    // a decreasing potential is not a potential
    FieldPath bad = u;
    for (auto& f : bad) {
        for (double& v : f.values()) v = -v;
    }
    CHECK_THROWS_AS(regular_measure_from_potential(bad, s), NotAPotential);
}

TEST_CASE("smallest potential on a compact") {
    const PotentialSetup s = setup(33, 0.5, 200);
    const SpaceTimeCompact none{0.25, 0.25, [](const Point&) { return false; }};
    const auto z = smallest_potential_on_compact(none, s);
    CHECK(z.total_mass() == 0.0);

    const auto a = smallest_potential_on_compact(slice(0.25, 0.4, 0.6), s);
    const auto b = smallest_potential_on_compact(slice(0.25, 0.3, 0.7), s);
    CHECK(a.total_mass() <= b.total_mass() + 1e-10);

    // support in the dilated compact
    const auto mask = dilated_mask(slice(0.25, 0.4, 0.6), s.grid);
    double outside = 0.0;
    for (const auto& f : a.measure) {
        for (std::size_t n = 0; n < f.size(); ++n) {
            if (!mask[n]) outside += f[n];
        }
    }
    CHECK(outside <= 1e-8 * a.total_mass());

    // the measure is the algebraic residual of the potential
    const FieldPath again = regular_measure_from_potential(a.v, s);
    for (std::size_t k = 0; k < again.size(); ++k) CHECK(again[k] == a.measure[k]);

    // penalised version approaches the projected one from below
    const auto p1 = smallest_potential_on_compact(slice(0.25, 0.4, 0.6), s, 1e3);
    const auto p2 = smallest_potential_on_compact(slice(0.25, 0.4, 0.6), s, 1e5);
    CHECK(p1.total_mass() <= p2.total_mass() + 1e-10);
    CHECK(std::abs(p2.total_mass() - a.total_mass()) < std::abs(p1.total_mass() - a.total_mass()));
}

TEST_CASE("capacity of a thin slice") {
    const std::vector<RefinementLevel> schedule{{17, 100}, {33, 400}, {65, 1600}};
    const auto est = capacity_estimate(slice(0.25, 0.25, 0.75), 1, 1.0, 0.5, identity_coefficients(1), schedule);
    REQUIRE(est.levels.size() == 3);
    CHECK(est.monotone);
    const double err0 = std::abs(est.levels[0].mass - 0.5), err2 = std::abs(est.levels[2].mass - 0.5);
    CHECK(err2 < err0);
    CHECK(std::abs(est.value - 0.5) < 0.15);
    CHECK(std::isfinite(est.extrapolated));
    for (const auto& l : est.levels) CHECK(l.mass_outside <= 1e-8 * l.mass);
}

TEST_CASE("capacity of shrinking sets and unions") {
    const std::vector<RefinementLevel> schedule{{65, 400}};
    const auto a = identity_coefficients(1);
    double prev = std::numeric_limits<double>::infinity();
    for (double w : {0.2, 0.1, 0.05}) {
        const double c = capacity_estimate(slice(0.25, 0.5 - w / 2, 0.5 + w / 2), 1, 1.0, 0.5, a, schedule).value;
        CHECK(c < prev);
        prev = c;
    }
    const SpaceTimeCompact k1 = slice(0.25, 0.2, 0.4), k2 = slice(0.25, 0.5, 0.8);
    const SpaceTimeCompact both{0.25, 0.25, [&](const Point& x) { return k1.mask(x) || k2.mask(x); }};
    const double c1 = capacity_estimate(k1, 1, 1.0, 0.5, a, schedule).value;
    const double c2 = capacity_estimate(k2, 1, 1.0, 0.5, a, schedule).value;
    const double c12 = capacity_estimate(both, 1, 1.0, 0.5, a, schedule).value;
    CHECK(c12 <= (c1 + c2) + 0.02 * std::max(c12, c1 + c2));
    CHECK(c12 >= std::max(c1, c2) - 1e-10);
}

TEST_CASE("mass against energy is stable across compacts") {
    const std::vector<RefinementLevel> schedule{{65, 400}};
    const auto a = identity_coefficients(1);
    std::vector<double> ratios;
    for (const auto& k : {slice(0.25, 0.2, 0.4), slice(0.25, 0.3, 0.7), slice(0.1, 0.25, 0.75)}) {
        ratios.push_back(capacity_estimate(k, 1, 1.0, 0.5, a, schedule).levels[0].mass_energy_ratio);
    }
    const double lo = *std::min_element(ratios.begin(), ratios.end());
    const double hi = *std::max_element(ratios.begin(), ratios.end());
    CHECK(lo > 0.0);
    CHECK(hi / lo < 3.0);
}

TEST_CASE("duality pairing") {
    const PotentialSetup s = setup(65, 0.5, 800);
    const auto v = smallest_potential_on_compact(slice(0.25, 0.3, 0.7), s);
    const auto zero_phi = [](double, const Point&) { return 0.0; };
    const auto r0 = duality_pairing_check(zero_phi, zero_phi, v, s);
    CHECK(r0.measure_side == 0.0);
    CHECK(r0.variational_side == 0.0);

    ParabolicPotential none;
    none.v.assign(801, GridField(65));
    none.measure.assign(801, GridField(65));
    const auto phi = [](double t, const Point& x) { return std::cos(t) * std::sin(std::numbers::pi * x[0]) * (1 + x[0]); };
    const auto dphi = [](double t, const Point& x) { return -std::sin(t) * std::sin(std::numbers::pi * x[0]) * (1 + x[0]); };
    CHECK(duality_pairing_check(phi, dphi, none, s).relative == 0.0);

    CHECK(duality_pairing_check(phi, dphi, v, s).relative <= 0.05);
    const auto phi2 = [](double t, const Point& x) { return std::exp(-t) * std::pow(std::sin(std::numbers::pi * x[0]), 2); };
    const auto dphi2 = [](double t, const Point& x) { return -std::exp(-t) * std::pow(std::sin(std::numbers::pi * x[0]), 2); };
    CHECK(duality_pairing_check(phi2, dphi2, v, s).relative <= 0.05);
}
