#include "ospde/stepper.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace ospde {

std::string to_string(SchemeKind kind) {
    switch (kind) {
        case SchemeKind::unconstrained: return "unconstrained";
        case SchemeKind::penalized: return "penalized";
        case SchemeKind::projected: return "projected";
    }
    return "unconstrained";
}

SchemeKind parse_scheme_kind(const std::string& name) {
    if (name == "unconstrained") return SchemeKind::unconstrained;
    if (name == "penalized") return SchemeKind::penalized;
    if (name == "projected") return SchemeKind::projected;
    throw InvalidArgument("unknown scheme '" + name + "'");
}

double ReflectionMeasure::total() const {
    double s = 0.0;
    for (const auto& slice : mass) {
        for (double v : slice.values()) s += v;
    }
    return s;
}

namespace {

Eigen::VectorXd forcing(const SpatialGrid& grid, const GridField& u, double t, std::size_t step,
                        std::span<const double> draws, double dt, const ScalarTerm& f, const VectorTerm& g,
                        const NoiseTerm& h) {
    const auto interior = grid.interior_nodes();
    Eigen::VectorXd rhs(static_cast<Eigen::Index>(interior.size()));

    CellField gc(grid.cell_count());
    bool any_g = false;
    for (std::size_t c = 0; c < grid.cell_count(); ++c) {
        TermPoint p;
        p.t = t;
        p.step = step;
        p.site = c;
        p.on_cell = true;
        p.x = grid.cell_midpoint(c);
        p.y = cell_average_at(u, grid, c);
        p.z = cell_gradient_at(u, grid, c);
        const Gradient v = g(p);
        gc.set(c, v);
        any_g = any_g || v[0] != 0.0 || v[1] != 0.0;
    }
    const GridField dg = any_g ? divergence_term(gc, grid) : GridField(grid.node_count());

    std::vector<double> hv(h.modes, 0.0);
    for (std::size_t i = 0; i < interior.size(); ++i) {
        const std::size_t node = interior[i];
        TermPoint p;
        p.t = t;
        p.step = step;
        p.site = node;
        p.x = grid.coordinates(node);
        p.y = u[node];
        p.z = node_gradient_at(u, grid, node);
        double r = dt * (f(p) + dg[node]);
        if (!draws.empty() && h.modes > 0) {
            h.eval(p, hv);
            const std::size_t n = std::min(hv.size(), draws.size());
            for (std::size_t j = 0; j < n; ++j) r += hv[j] * draws[j];
        }
        rhs[static_cast<Eigen::Index>(i)] = r;
    }
    return rhs;
}

void check_finite(const Eigen::VectorXd& v, const char* what) {
    if (!v.allFinite()) throw SolverFailure(what, 0.0);
}

}  // namespace

Stepper::Stepper(SPDEProblem problem) : problem_(std::move(problem)) {
    validate_problem(problem_);
    const std::size_t K = problem_.time.steps;
    const double dt = problem_.time.dt();
    systems_.resize(K);
    if (K == 0) return;
    const bool varying = problem_.a.time_dependent;
    std::vector<double> times;
    for (std::size_t k = 0; k < K; ++k) times.push_back(problem_.time.time(k + 1));
    check_ellipticity(problem_.a, problem_.grid, varying ? std::span<const double>(times)
                                                        : std::span<const double>(times.data(), 1));
    for (std::size_t k = 0; k < K; ++k) {
        if (!varying && k > 0) {
            systems_[k] = systems_[0];
            continue;
        }
        const StiffnessOperator A = assemble_stiffness(problem_.a, times[k], problem_.grid, false);
        systems_[k] = std::make_shared<const ImplicitSystem>(A, dt);
    }
}

const ImplicitSystem& Stepper::system(std::size_t step) const {
    if (step >= systems_.size()) throw InvalidArgument("step index beyond the time grid");
    return *systems_[step];
}

GridField Stepper::assemble_full(const Eigen::VectorXd& interior, double boundary) const {
    GridField u = extend_interior(interior, problem_.grid, boundary);
    if (boundary != 0.0) {
        for (std::size_t n : problem_.grid.interior_nodes()) u[n] += boundary;
    }
    return u;
}

Eigen::VectorXd Stepper::right_hand_side(const GridField& u, std::size_t step, std::span<const double> draws,
                                         const BoundaryStep& m) const {
    const auto& p = problem_;
    Eigen::VectorXd rhs = forcing(p.grid, u, p.time.time(step), step, draws, p.time.dt(), p.f, p.g, p.h);
    const Eigen::VectorXd v = restrict_interior(u, p.grid);
    rhs += v;
    // v_k + F - (M_{k+1} - M_k) with v = u - M.
    if (m.next != 0.0) rhs.array() -= m.next;
    return rhs;
}

GridField Stepper::step_unconstrained(const GridField& u, std::size_t step, std::span<const double> draws,
                                      const BoundaryStep& m) const {
    const Eigen::VectorXd x = system(step).solve(right_hand_side(u, step, draws, m));
    check_finite(x, "non-finite solution");
    return assemble_full(x, m.next);
}

StepResult Stepper::step_obstacle_penalized(const GridField& u, std::size_t step, std::span<const double> draws,
                                            const GridField& obstacle_now, double penalty,
                                            const BoundaryStep& m) const {
    if (!(penalty > 0.0)) throw InvalidArgument("penalty must be positive");
    const auto& grid = problem_.grid;
    const double dt = problem_.time.dt();
    Eigen::VectorXd rhs = right_hand_side(u, step, draws, m);
    StepResult out;
    out.nu = GridField(grid.node_count());
    const auto interior = grid.interior_nodes();
    for (std::size_t i = 0; i < interior.size(); ++i) {
        const std::size_t node = interior[i];
        const double gap = std::max(0.0, obstacle_now[node] - u[node]);
        if (gap == 0.0) continue;
        rhs[static_cast<Eigen::Index>(i)] += dt * penalty * gap;
        out.nu[node] = penalty * gap * dt * grid.node_weight(node);
    }
    const Eigen::VectorXd x = system(step).solve(rhs);
    check_finite(x, "non-finite solution");
    out.u = assemble_full(x, m.next);
    return out;
}

StepResult Stepper::step_obstacle_projected(const GridField& u, std::size_t step, std::span<const double> draws,
                                            const GridField& obstacle_next, const LcpOptions& options,
                                            const BoundaryStep& m) const {
    const auto& grid = problem_.grid;
    const ImplicitSystem& B = system(step);
    const Eigen::VectorXd rhs = right_hand_side(u, step, draws, m);
    Eigen::VectorXd lower = restrict_interior(obstacle_next, grid);
    // The LCP is posed for v = u - M.
    lower.array() -= m.next;
    const Eigen::VectorXd warm = B.solve(rhs);
    const LcpResult lcp = solve_lcp_psor(B, rhs, lower, warm, options);

    StepResult out;
    out.sweeps = lcp.sweeps;
    out.complementarity = lcp.complementarity;
    out.u = assemble_full(lcp.solution, m.next);
    out.nu = GridField(grid.node_count());
    const auto interior = grid.interior_nodes();
    for (std::size_t i = 0; i < interior.size(); ++i) {
        const auto e = static_cast<Eigen::Index>(i);
        if (lcp.solution[e] != lower[e]) continue;
        const double r = lcp.residual[e];
        if (r < -1e-10) throw SolverFailure("negative reflection residual", r);
        out.nu[interior[i]] = std::max(0.0, r) * grid.node_weight(interior[i]);
    }
    return out;
}

GridField Stepper::step_dominating(const GridField& s, std::size_t step, std::span<const double> draws) const {
    const auto& p = problem_;
    const DominatingData& d = *p.obstacle->dominating;
    Eigen::VectorXd rhs = forcing(p.grid, s, p.time.time(step), step, draws, p.time.dt(), d.f, d.g, d.h);
    rhs += restrict_interior(s, p.grid);
    return extend_interior(system(step).solve(rhs), p.grid);
}

GridField Stepper::obstacle_field(std::size_t step, const GridField* dominating) const {
    const ObstacleSpec& o = *problem_.obstacle;
    const auto& grid = problem_.grid;
    if (o.from_dominating) {
        GridField s = *dominating;
        for (double& v : s.values()) v -= o.gap;
        return s;
    }
    const double t = problem_.time.time(step);
    return sample_field(grid, [&](const Point& x) { return o.barrier(t, x); });
}

std::pair<SolutionPath, ReflectionMeasure> Stepper::solve(const Scheme& scheme, std::uint64_t path) const {
    const auto& p = problem_;
    const std::size_t K = p.time.steps;
    const double dt = p.time.dt();
    const bool has_obstacle = p.obstacle.has_value();
    if (scheme.kind != SchemeKind::unconstrained && !has_obstacle) {
        throw InvalidArgument("obstacle schemes need an obstacle");
    }
    const bool constrained = has_obstacle && scheme.kind != SchemeKind::unconstrained;
    const bool simulate_dominating = has_obstacle && p.obstacle->dominating.has_value();

    SolutionPath sol;
    sol.dt = dt;
    sol.scheme = scheme;
    sol.seed = p.seed;
    sol.path = path;
    sol.u.reserve(K + 1);
    sol.u.push_back(p.xi);
    ReflectionMeasure nu;
    if (constrained) nu.mass.emplace_back(p.grid.node_count());
    if (simulate_dominating) sol.dominating.push_back(p.obstacle->dominating->s0);
    if (has_obstacle) sol.obstacle.push_back(obstacle_field(0, simulate_dominating ? &sol.dominating[0] : nullptr));
    if (p.boundary) sol.boundary.push_back(p.boundary->m);

    const StreamCoordinates stream{p.seed, path};
    for (std::size_t k = 0; k < K; ++k) {
        try {
            const std::vector<double> draws = sample_draws(p.modes(), dt, stream, k);
            BoundaryStep m;
            if (p.boundary) {
                const double t = p.time.time(k);
                m.now = sol.boundary.back();
                m.next = m.now + p.boundary->drift(t) * dt;
                const std::vector<double> sigma = p.boundary->loadings(t);
                for (std::size_t j = 0; j < std::min(sigma.size(), draws.size()); ++j) m.next += sigma[j] * draws[j];
                sol.boundary.push_back(m.next);
            }
            if (simulate_dominating) sol.dominating.push_back(step_dominating(sol.dominating.back(), k, draws));
            if (has_obstacle) {
                sol.obstacle.push_back(obstacle_field(k + 1, simulate_dominating ? &sol.dominating.back() : nullptr));
            }
            const GridField& u = sol.u.back();
            if (!constrained) {
                sol.u.push_back(step_unconstrained(u, k, draws, m));
            } else if (scheme.kind == SchemeKind::penalized) {
                StepResult r = step_obstacle_penalized(u, k, draws, sol.obstacle[k], scheme.penalty, m);
                sol.u.push_back(std::move(r.u));
                nu.mass.push_back(std::move(r.nu));
            } else {
                StepResult r = step_obstacle_projected(u, k, draws, sol.obstacle[k + 1], scheme.lcp, m);
                sol.u.push_back(std::move(r.u));
                nu.mass.push_back(std::move(r.nu));
                sol.complementarity.push_back(r.complementarity);
                sol.sweeps.push_back(r.sweeps);
            }
        } catch (const StepFailure&) {
            throw;
        } catch (const std::exception& e) {
            throw StepFailure(std::string(e.what()) + " (step " + std::to_string(k) + ")", k);
        }
    }
    return {std::move(sol), std::move(nu)};
}

double discrete_sine_eigenvalue(std::size_t m, const SpatialGrid& grid) {
    const double h = grid.spacing(0);
    const double s = std::sin(static_cast<double>(m) * std::numbers::pi * h / (2.0 * grid.extent(0)));
    return 4.0 / (h * h) * s * s;
}

GridField sine_mode(std::size_t m, const SpatialGrid& grid) {
    const double L = grid.extent(0);
    return sample_field(grid, [&](const Point& x) {
        return std::sqrt(2.0 / L) * std::sin(static_cast<double>(m) * std::numbers::pi * x[0] / L);
    });
}

FieldPath spectral_oracle_linear(const SPDEProblem& p, std::size_t modes, std::uint64_t path) {
    if (p.grid.dim() != 1) throw InvalidArgument("spectral oracle: only d = 1");
    if (p.a.name != "identity") throw InvalidArgument("spectral oracle: only a = identity");
    if (!p.f.state_free || !p.g.state_free || !p.h.state_free) {
        throw InvalidArgument("spectral oracle: f, g, h must not depend on the solution");
    }
    if (p.obstacle || p.boundary) throw InvalidArgument("spectral oracle: no obstacle or boundary process");
    if (modes == 0 || modes > p.grid.interior_count()) throw InvalidArgument("spectral oracle: bad mode count");

    const auto& grid = p.grid;
    const double dt = p.time.dt();
    const double L = grid.extent(0);
    std::vector<GridField> basis;
    for (std::size_t m = 1; m <= modes; ++m) basis.push_back(sine_mode(m, grid));
    auto project = [&](const GridField& v, std::size_t m) {
        double s = 0.0;
        for (std::size_t n : grid.interior_nodes()) s += grid.node_weight(n) * v[n] * basis[m][n];
        return s;
    };
    auto assemble = [&](const std::vector<double>& c) {
        GridField u(grid.node_count());
        for (std::size_t m = 0; m < modes; ++m) {
            for (std::size_t n : grid.interior_nodes()) u[n] += c[m] * basis[m][n];
        }
        return u;
    };

    std::vector<double> c(modes);
    for (std::size_t m = 0; m < modes; ++m) c[m] = project(p.xi, m);
    FieldPath out{assemble(c)};
    const StreamCoordinates stream{p.seed, path};
    std::vector<double> hv(p.h.modes);
    for (std::size_t k = 0; k < p.time.steps; ++k) {
        const std::vector<double> draws = sample_draws(p.modes(), dt, stream, k);
        const GridField zero(grid.node_count());
        // Deterministic forcing per unit time, and the noise field sum_j h_j dB_j.
        const Eigen::VectorXd F = forcing(grid, zero, p.time.time(k), k, {}, 1.0, p.f, p.g, p.h);
        const Eigen::VectorXd N = forcing(grid, zero, p.time.time(k), k, draws, 0.0, zero_scalar(),
                                          zero_vector(), p.h);
        const GridField Ff = extend_interior(F, grid), Nf = extend_interior(N, grid);
        for (std::size_t m = 0; m < modes; ++m) {
            const double mu = std::pow(static_cast<double>(m + 1) * std::numbers::pi / L, 2);
            const double decay = std::exp(-mu * dt);
            const double scale = dt > 0.0 ? std::sqrt(-std::expm1(-2.0 * mu * dt) / (2.0 * mu * dt)) : 0.0;
            c[m] = decay * c[m] - std::expm1(-mu * dt) / mu * project(Ff, m) + scale * project(Nf, m);
        }
        out.push_back(assemble(c));
    }
    return out;
}

}  // namespace ospde
