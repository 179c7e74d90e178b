#include <cmath>
#include <numbers>
#include <random>

#include <Eigen/Dense>

#include "doctest.h"
#include "problems.hpp"
#include "ospde/linear_solvers.hpp"
#include "ospde/stepper.hpp"

using namespace ospde;
using testing::heat;

namespace {

double max_abs_diff(const GridField& a, const GridField& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

double path_distance(const FieldPath& a, const FieldPath& b, const SpatialGrid& g, double dt) {
    double s = 0.0;
    for (std::size_t k = 0; k + 1 < a.size(); ++k) {
        GridField d = a[k];
        for (std::size_t n = 0; n < d.size(); ++n) d[n] -= b[k][n];
        s += dt * l2_inner(d, d, g);
    }
    return std::sqrt(s);
}

ImplicitSystem laplace_system(std::size_t nodes, double dt) {
    const auto g = testing::line(nodes);
    return ImplicitSystem(assemble_stiffness(identity_coefficients(1), 0.0, g), dt);
}

}  // namespace

TEST_CASE("tridiagonal and sparse solves agree with a dense solve") {
    const ImplicitSystem s = laplace_system(21, 0.01);
    const Eigen::MatrixXd B(s.matrix());
    std::mt19937_64 rng(1);
    std::normal_distribution<double> nd;
    Eigen::VectorXd rhs(s.size());
    for (Eigen::Index i = 0; i < rhs.size(); ++i) rhs[i] = nd(rng);
    const Eigen::VectorXd x = s.solve(rhs);
    CHECK((x - B.ldlt().solve(rhs)).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(s.residual(x, rhs).cwiseAbs().maxCoeff() < 1e-10);

    const auto g2 = testing::square(7);
    const ImplicitSystem s2(assemble_stiffness(scalar_sin_coefficients(2), 0.1, g2), 0.01);
    Eigen::VectorXd r2(s2.size());
    for (Eigen::Index i = 0; i < r2.size(); ++i) r2[i] = nd(rng);
    CHECK((s2.solve(r2) - Eigen::MatrixXd(s2.matrix()).ldlt().solve(r2)).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("PSOR post-conditions") {
    const ImplicitSystem s = laplace_system(33, 0.01);
    const Eigen::Index n = static_cast<Eigen::Index>(s.size());
    Eigen::VectorXd rhs = Eigen::VectorXd::Constant(n, -1.0);
    Eigen::VectorXd lower(n);
    for (Eigen::Index i = 0; i < n; ++i) lower[i] = 0.2 * std::sin(std::numbers::pi * (i + 1) / 32.0) - 0.5;
    const LcpResult r = solve_lcp_psor(s, rhs, lower, s.solve(rhs));
    double bound_hit = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        CHECK(r.solution[i] >= lower[i]);
        CHECK(r.residual[i] >= -1e-10);
        CHECK(std::abs(std::min(r.solution[i] - lower[i], r.residual[i])) <= 1e-10);
        if (r.solution[i] == lower[i]) bound_hit += 1.0;
    }
    CHECK(bound_hit > 0.0);
    CHECK(r.complementarity <= 1e-10);

    // inactive constraint: same as the linear solve
    const Eigen::VectorXd far = Eigen::VectorXd::Constant(n, -1e6);
    const LcpResult free = solve_lcp_psor(s, rhs, far, s.solve(rhs));
    CHECK((free.solution - s.solve(rhs)).cwiseAbs().maxCoeff() < 1e-12);

    LcpOptions tight;
    tight.max_sweeps = 1;
    tight.relaxation = 1.0;
    CHECK_THROWS_AS(solve_lcp_psor(s, rhs, lower, Eigen::VectorXd::Zero(n), tight), SolverFailure);
}

TEST_CASE("implicit penalisation") {
    const ImplicitSystem s = laplace_system(17, 0.01);
    const Eigen::Index n = static_cast<Eigen::Index>(s.size());
    const Eigen::VectorXd rhs = Eigen::VectorXd::Constant(n, -1.0);
    const Eigen::VectorXd lower = Eigen::VectorXd::Constant(n, -0.5);
    double prev = std::numeric_limits<double>::infinity();
    for (double c : {1e1, 1e2, 1e3, 1e4}) {
        const PenalizedResult p = solve_penalized(s, rhs, lower, c);
        // B x - rhs = force exactly
        CHECK((s.residual(p.solution, rhs) - p.force).cwiseAbs().maxCoeff() < 1e-9);
        double violation = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) violation = std::max(violation, lower[i] - p.solution[i]);
        CHECK(violation < prev);
        prev = violation;
    }
}

TEST_CASE("zero data stays zero") {
    SPDEProblem p = heat(17, 0.1, 20);
    p.xi = GridField(p.grid.node_count());
    const Stepper st(p);
    const auto [u, nu] = st.solve(Scheme{}, 0);
    for (const auto& f : u.u) CHECK(max_abs_diff(f, GridField(f.size())) == 0.0);
    CHECK(nu.mass.empty());
}

TEST_CASE("heat equation closed form") {
    const double pi2 = std::numbers::pi * std::numbers::pi;
    double prev = 1.0;
    for (std::size_t level = 0; level < 3; ++level) {
        const std::size_t nodes = (std::size_t{16} << level) + 1;
        const std::size_t steps = std::size_t{40} << (2 * level);
        const SPDEProblem p = heat(nodes, 0.1, steps);
        const auto [u, nu] = Stepper(p).solve(Scheme{}, 0);
        double err = 0.0;
        for (std::size_t k = 0; k <= steps; ++k) {
            const double t = p.time.time(k);
            for (std::size_t n = 0; n < p.grid.node_count(); ++n) {
                const double exact = std::exp(-pi2 * t) * std::sin(std::numbers::pi * p.grid.coordinates(n)[0]);
                err = std::max(err, std::abs(u.u[k][n] - exact));
            }
        }
        // O(dt + dx^2) with dt ~ dx^2: each level divides the error by about 4
        if (level > 0) CHECK(err < prev / 3.0);
        prev = err;
    }
}

TEST_CASE("mode amplitudes follow the scalar recursion") {
    const SPDEProblem p = heat(33, 0.2, 50, 5, 0.7);
    const Stepper st(p);
    const auto [u, nu] = st.solve(Scheme{}, 3);
    const double dt = p.time.dt();
    for (std::size_t m = 1; m <= 5; ++m) {
        const GridField e = sine_mode(m, p.grid);
        const double mu = discrete_sine_eigenvalue(m, p.grid);
        const double lam = p.noise->eigenvalues[m - 1];
        double c = l2_inner(p.xi, e, p.grid);
        for (std::size_t k = 0; k < p.time.steps; ++k) {
            const auto draws = sample_draws(p.modes(), dt, StreamCoordinates{p.seed, 3}, k);
            c = (c + 0.7 * std::sqrt(lam) * draws[m - 1]) / (1.0 + dt * mu);
            CHECK(l2_inner(u.u[k + 1], e, p.grid) == doctest::Approx(c).epsilon(1e-10).scale(1e-3));
        }
    }
}

TEST_CASE("penalised scheme with an inactive penalty equals the unconstrained scheme") {
    SPDEProblem p = heat(17, 0.2, 200, 3, 0.1);
    testing::barrier(p, -5.0);
    const Stepper st(p);
    Scheme pen{SchemeKind::penalized, 1e3, {}};
    const auto [a, nu] = st.solve(pen, 1);
    SPDEProblem free = p;
    free.obstacle.reset();
    const auto b = Stepper(free).solve(Scheme{}, 1).first;
    for (std::size_t k = 0; k < a.u.size(); ++k) CHECK(a.u[k] == b.u[k]);
    CHECK(nu.total() == 0.0);

    Scheme proj{SchemeKind::projected, 0.0, {}};
    const auto [c, nu2] = st.solve(proj, 1);
    for (std::size_t k = 0; k < c.u.size(); ++k) CHECK(max_abs_diff(c.u[k], b.u[k]) < 1e-12);
    CHECK(nu2.total() == 0.0);
}

TEST_CASE("heat solution stays above a negative constant obstacle") {
    SPDEProblem p = heat(33, 0.5, 500);
    ObstacleSpec o;
    o.barrier = [](double, const Point&) { return -0.1; };
    p.obstacle = o;
    const auto [u, nu] = Stepper(p).solve(Scheme{SchemeKind::penalized, 1e3, {}}, 0);
    CHECK(nu.total() == 0.0);
    SPDEProblem free = p;
    free.obstacle.reset();
    const auto b = Stepper(free).solve(Scheme{}, 0).first;
    CHECK(u.u.back() == b.u.back());
}

TEST_CASE("reflection mass grows with the penalty and approaches the projected mass") {
    SPDEProblem p = heat(17, 0.5, 5000, 0, 0.0, 0.5);
    testing::barrier(p, 0.3);
    const Stepper st(p);
    std::vector<double> mass;
    std::vector<FieldPath> paths;
    for (double n : {1e1, 1e2, 1e3}) {
        const auto [u, nu] = st.solve(Scheme{SchemeKind::penalized, n, {}}, 0);
        mass.push_back(nu.total());
        paths.push_back(u.u);
        for (const auto& slice : nu.mass) {
            for (double v : slice.values()) CHECK(v >= 0.0);
        }
    }
    const auto [proj, nu_proj] = st.solve(Scheme{SchemeKind::projected, 0.0, {}}, 0);
    CHECK(mass[0] <= mass[1] * (1 + 1e-9));
    CHECK(mass[1] <= mass[2] * (1 + 1e-9));
    CHECK(std::abs(mass[2] - nu_proj.total()) < std::abs(mass[1] - nu_proj.total()));
    const double dt = p.time.dt();
    CHECK(path_distance(paths[2], proj.u, p.grid, dt) < path_distance(paths[1], proj.u, p.grid, dt));
}

TEST_CASE("projected scheme complementarity") {
    SPDEProblem p = heat(33, 0.5, 500, 4, 0.5, 0.5);
    testing::barrier(p, 0.2);
    const Stepper st(p);
    for (std::uint64_t path = 0; path < 5; ++path) {
        const auto [u, nu] = st.solve(Scheme{SchemeKind::projected, 0.0, {}}, path);
        for (std::size_t k = 0; k < u.u.size(); ++k) {
            double pairing = 0.0;
            for (std::size_t n : p.grid.interior_nodes()) {
                CHECK(u.u[k][n] >= u.obstacle[k][n]);
                CHECK(nu.mass[k][n] >= 0.0);
                pairing += nu.mass[k][n] * (u.u[k][n] - u.obstacle[k][n]);
            }
            CHECK(std::abs(pairing) <= 1e-10);
        }
        for (double c : u.complementarity) CHECK(c <= 1e-10);
    }
}

TEST_CASE("solve bookkeeping") {
    SPDEProblem p = heat(9, 1.0, 0);
    const auto [u, nu] = Stepper(p).solve(Scheme{}, 0);
    REQUIRE(u.u.size() == 1);
    CHECK(u.u[0] == p.xi);

    SPDEProblem q = heat(17, 0.1, 50, 3);
    const Stepper st(q);
    const auto a = st.solve(Scheme{}, 4).first, b = st.solve(Scheme{}, 4).first;
    for (std::size_t k = 0; k < a.u.size(); ++k) CHECK(a.u[k] == b.u[k]);
}

TEST_CASE("obstacle equal to the solution of the same equation is never pushed") {
    SPDEProblem p = heat(17, 0.2, 100, 3, 0.4, 0.5);
    DominatingData d;
    d.s0 = p.xi;
    d.f = zero_scalar();
    d.g = zero_vector();
    d.h = p.h;
    ObstacleSpec o;
    o.dominating = d;
    o.from_dominating = true;
    o.gap = 0.0;
    p.obstacle = o;
    const auto [u, nu] = Stepper(p).solve(Scheme{SchemeKind::projected, 0.0, {}}, 2);
    for (std::size_t k = 0; k < u.u.size(); ++k) CHECK(max_abs_diff(u.u[k], u.dominating[k]) < 1e-12);
    CHECK(nu.total() < 1e-12);
}

TEST_CASE("spectral oracle") {
    const double pi2 = std::numbers::pi * std::numbers::pi;
    const SPDEProblem p = heat(33, 0.3, 30);
    const FieldPath o = spectral_oracle_linear(p, 31, 0);
    for (std::size_t k = 0; k <= p.time.steps; ++k) {
        const double t = p.time.time(k);
        for (std::size_t n = 0; n < p.grid.node_count(); ++n) {
            CHECK(o[k][n] == doctest::Approx(std::exp(-pi2 * t) * p.xi[n]).epsilon(1e-12).scale(1.0));
        }
    }
    SPDEProblem z = heat(17, 0.3, 10);
    z.xi = GridField(z.grid.node_count());
    for (const auto& f : spectral_oracle_linear(z, 15, 0)) CHECK(max_abs_diff(f, GridField(f.size())) == 0.0);

    SPDEProblem bad = heat(17, 0.3, 10);
    bad.a = anisotropic_constant_coefficients(1, 2.0, 2.0);
    CHECK_THROWS_AS(spectral_oracle_linear(bad, 3, 0), InvalidArgument);
    SPDEProblem obs = heat(17, 0.3, 10);
    testing::barrier(obs, 0.1);
    CHECK_THROWS_AS(spectral_oracle_linear(obs, 3, 0), InvalidArgument);
}

TEST_CASE("oracle stationary variance") {
    // mode 1 with lambda = 1 / pi^2 has stationary variance lambda / (2 pi^2)
    SPDEProblem p = heat(17, 2.0, 40, 1, 1.0, 0.0);
    const std::size_t paths = 4000;
    const GridField e = sine_mode(1, p.grid);
    double sq = 0.0;
    for (std::size_t i = 0; i < paths; ++i) {
        const FieldPath o = spectral_oracle_linear(p, 1, i);
        const double c = l2_inner(o.back(), e, p.grid);
        sq += c * c;
    }
    const double var = sq / static_cast<double>(paths);
    const double pi2 = std::numbers::pi * std::numbers::pi;
    const double expected = (1.0 / pi2) / (2.0 * pi2);
    CHECK(std::abs(var - expected) <= 3.0 * expected * std::sqrt(2.0 / static_cast<double>(paths)));
}
