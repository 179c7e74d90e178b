#include "ospde/verify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <sstream>

#include "ospde/parallel.hpp"

namespace ospde {

std::string to_string(CheckStatus s) {
    switch (s) {
        case CheckStatus::pass: return "pass";
        case CheckStatus::fail: return "fail";
        case CheckStatus::informational: return "informational";
        case CheckStatus::disabled: return "disabled";
    }
    return "informational";
}

double CheckEntry::metric(const std::string& key) const {
    for (const auto& [k, v] : metrics) {
        if (k == key) return v;
    }
    return std::numeric_limits<double>::quiet_NaN();
}

bool VerificationReport::all_pass() const {
    return std::none_of(entries.begin(), entries.end(), [](const CheckEntry& e) { return e.status == CheckStatus::fail; });
}

namespace {

nlohmann::ordered_json number(double v) {
    if (std::isfinite(v)) return v;
    if (std::isnan(v)) return "nan";
    return v > 0 ? "inf" : "-inf";
}

struct Stats {
    double mean = 0.0;
    double sd = 0.0;
    double radius = 0.0;
    double max = 0.0;
};

Stats stats(const std::vector<double>& v) {
    Stats s;
    if (v.empty()) return s;
    s.mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
    s.max = *std::max_element(v.begin(), v.end());
    if (v.size() > 1) {
        double ss = 0.0;
        for (double x : v) ss += (x - s.mean) * (x - s.mean);
        s.sd = std::sqrt(ss / static_cast<double>(v.size() - 1));
        s.radius = 1.96 * s.sd / std::sqrt(static_cast<double>(v.size()));
    }
    return s;
}

TermPoint node_point(const SpatialGrid& grid, const GridField& u, double t, std::size_t k, std::size_t node) {
    TermPoint p;
    p.t = t;
    p.step = k;
    p.site = node;
    p.x = grid.coordinates(node);
    p.y = u[node];
    p.z = node_gradient_at(u, grid, node);
    return p;
}

TermPoint cell_point(const SpatialGrid& grid, const GridField& u, double t, std::size_t k, std::size_t cell) {
    TermPoint p;
    p.t = t;
    p.step = k;
    p.site = cell;
    p.on_cell = true;
    p.x = grid.cell_midpoint(cell);
    p.y = cell_average_at(u, grid, cell);
    p.z = cell_gradient_at(u, grid, cell);
    return p;
}

// Point at which the forward difference along `axis` of a cell is centred.
Point edge_midpoint(const SpatialGrid& grid, std::size_t cell, std::size_t axis) {
    Point x = grid.coordinates(grid.cell_origin(cell));
    x[axis] += 0.5 * grid.spacing(axis);
    return x;
}

GridField field_of(const SpatialGrid& grid, const std::function<double(double, const Point&)>& fn, double t) {
    GridField out = sample_field(grid, [&](const Point& x) { return fn(t, x); });
    for (std::size_t n = 0; n < grid.node_count(); ++n) {
        if (grid.is_boundary(n)) out[n] = 0.0;
    }
    return out;
}

Scheme effective_scheme(const SPDEProblem& p, const Scheme& s) {
    if (!p.obstacle) {
        Scheme out = s;
        out.kind = SchemeKind::unconstrained;
        return out;
    }
    return s;
}

}  // namespace

nlohmann::ordered_json VerificationReport::to_json() const {
    nlohmann::ordered_json j;
    j["metadata"] = metadata;
    j["all_pass"] = all_pass();
    nlohmann::ordered_json checks = nlohmann::ordered_json::array();
    for (const CheckEntry& e : entries) {
        nlohmann::ordered_json c;
        c["name"] = e.name;
        c["status"] = to_string(e.status);
        c["mean"] = number(e.mean);
        c["max"] = number(e.max);
        c["confidence_radius"] = number(e.confidence);
        c["paths"] = e.paths;
        c["message"] = e.message;
        nlohmann::ordered_json m = nlohmann::ordered_json::object();
        for (const auto& [k, v] : e.metrics) m[k] = number(v);
        c["metrics"] = m;
        checks.push_back(c);
    }
    j["checks"] = checks;
    return j;
}

std::vector<TestFunction> standard_test_functions(const SpatialGrid& grid, double horizon) {
    const double pi = std::numbers::pi;
    const double L1 = grid.extent(0), L2 = grid.extent(1);
    const bool two = grid.dim() == 2;
    struct Time {
        const char* name;
        std::function<double(double)> v, dv;
    };
    const double T = horizon;
    const std::vector<Time> times = {
        {"1", [](double) { return 1.0; }, [](double) { return 0.0; }},
        {"cos", [=](double t) { return std::cos(0.5 * pi * t / T); },
         [=](double t) { return -0.5 * pi / T * std::sin(0.5 * pi * t / T); }},
        {"exp", [=](double t) { return std::exp(-t / T); }, [=](double t) { return -std::exp(-t / T) / T; }},
    };
    // b_m(s) = sin^2(pi s / L) sin(m pi s / L) and its derivative.
    auto bump = [=](int m, double s, double L) {
        const double a = std::sin(pi * s / L);
        return a * a * std::sin(m * pi * s / L);
    };
    auto dbump = [=](int m, double s, double L) {
        const double a = std::sin(pi * s / L), c = std::cos(pi * s / L);
        return 2.0 * a * c * pi / L * std::sin(m * pi * s / L) + a * a * m * pi / L * std::cos(m * pi * s / L);
    };
    std::vector<TestFunction> out;
    for (const Time& tf : times) {
        for (int m = 1; m <= 4; ++m) {
            TestFunction f;
            f.name = std::string(tf.name) + "*b" + std::to_string(m);
            auto space = [=](const Point& x) { return bump(m, x[0], L1) * (two ? bump(1, x[1], L2) : 1.0); };
            f.phi = [=](double t, const Point& x) { return tf.v(t) * space(x); };
            f.dphi_dt = [=](double t, const Point& x) { return tf.dv(t) * space(x); };
            f.grad = [=](double t, const Point& x) {
                const double c = tf.v(t);
                if (!two) return Gradient{c * dbump(m, x[0], L1), 0.0};
                return Gradient{c * dbump(m, x[0], L1) * bump(1, x[1], L2), c * bump(m, x[0], L1) * dbump(1, x[1], L2)};
            };
            out.push_back(std::move(f));
        }
    }
    return out;
}

WeakResidual weak_residual_check(const SolutionPath& path, const ReflectionMeasure& nu, const SPDEProblem& p,
                                 const std::vector<TestFunction>& tests, std::size_t time_samples) {
    const auto& grid = p.grid;
    const std::size_t K = p.time.steps;
    const double dt = p.time.dt();
    if (path.u.size() != K + 1) throw ShapeMismatch("path does not match the time grid");
    WeakResidual out;
    if (K == 0 || tests.empty()) {
        out.per_function.assign(tests.size(), 0.0);
        return out;
    }
    std::vector<std::size_t> checks;
    for (std::size_t i = 1; i <= std::max<std::size_t>(1, time_samples); ++i) {
        checks.push_back(std::max<std::size_t>(1, K * i / std::max<std::size_t>(1, time_samples)));
    }

    const StreamCoordinates stream{path.seed, path.path};
    std::vector<std::vector<double>> draws(K);
    for (std::size_t k = 0; k < K; ++k) draws[k] = sample_draws(p.modes(), dt, stream, k);

    for (const TestFunction& tf : tests) {
        // Running sums of the time integrals.
        double C = 0.0, E = 0.0, G = 0.0, F = 0.0, H = 0.0, N = 0.0;
        double Ca = 0.0, Ea = 0.0, Ga = 0.0, Fa = 0.0, Ha = 0.0, Na = 0.0;
        const double B = l2_inner(p.xi, field_of(grid, tf.phi, 0.0), grid);
        double worst = 0.0;
        std::size_t next = 0;
        std::vector<double> hv(p.h.modes);
        for (std::size_t k = 0; k < K && next < checks.size(); ++k) {
            const double t = p.time.time(k);
            const GridField& u = path.u[k];
            const GridField phi = field_of(grid, tf.phi, t);
            const GridField dphi = field_of(grid, tf.dphi_dt, t);
            const double c = dt * l2_inner(u, dphi, grid);
            C += c;
            Ca += std::abs(c);
            double e = 0.0, g = 0.0;
            for (std::size_t cell = 0; cell < grid.cell_count(); ++cell) {
                const Gradient du = cell_gradient_at(u, grid, cell);
                const CoefficientMatrix a = p.a(t, grid.cell_midpoint(cell));
                const Gradient gv = p.g(cell_point(grid, u, t, k, cell));
                for (std::size_t i = 0; i < grid.dim(); ++i) {
                    const double dphi_i = tf.grad(t, edge_midpoint(grid, cell, i))[i];
                    double flux = 0.0;
                    for (std::size_t j = 0; j < grid.dim(); ++j) flux += a[2 * i + j] * du[j];
                    e += grid.cell_volume() * flux * dphi_i;
                    g += grid.cell_volume() * gv[i] * dphi_i;
                }
            }
            E += dt * e;
            Ea += std::abs(dt * e);
            G += dt * g;
            Ga += std::abs(dt * g);
            double f = 0.0, h = 0.0;
            for (std::size_t node : grid.interior_nodes()) {
                const TermPoint pt = node_point(grid, u, t, k, node);
                const double w = grid.node_weight(node) * phi[node];
                f += w * p.f(pt);
                if (p.h.modes > 0) {
                    p.h.eval(pt, hv);
                    for (std::size_t j = 0; j < hv.size(); ++j) h += w * hv[j] * draws[k][j];
                }
            }
            F += dt * f;
            Fa += std::abs(dt * f);
            H += h;
            Ha += std::abs(h);
            if (!nu.mass.empty()) {
                const GridField phin = field_of(grid, tf.phi, p.time.time(k + 1));
                double s = 0.0;
                for (std::size_t n = 0; n < grid.node_count(); ++n) s += phin[n] * nu.mass[k + 1][n];
                N += s;
                Na += std::abs(s);
            }
            if (k + 1 == checks[next]) {
                const double A = l2_inner(path.u[k + 1], field_of(grid, tf.phi, p.time.time(k + 1)), grid);
                const double res = A - B - C + E + G - F - H - N;
                const double scale = std::abs(A) + std::abs(B) + Ca + Ea + Ga + Fa + Ha + Na;
                if (scale > 0.0) worst = std::max(worst, std::abs(res) / scale);
                ++next;
            }
        }
        out.per_function.push_back(worst);
        out.max_relative = std::max(out.max_relative, worst);
    }
    return out;
}

CheckEntry weak_residual_entry(const SPDEProblem& problem, const MonteCarloOptions& mc, double tolerance) {
    const Stepper stepper(problem);
    const Scheme scheme = effective_scheme(problem, mc.scheme);
    const auto tests = standard_test_functions(problem.grid, problem.time.horizon);
    CheckEntry e;
    e.name = "weak_residual";
    e.paths = mc.paths;
    e.per_path = parallel_map(mc.paths, mc.workers, [&](std::size_t i) {
        const auto [sol, nu] = stepper.solve(scheme, i);
        return weak_residual_check(sol, nu, problem, tests).max_relative;
    });
    const Stats s = stats(e.per_path);
    e.mean = s.mean;
    e.max = s.max;
    e.confidence = s.radius;
    e.metrics = {{"tolerance", tolerance}, {"test_functions", static_cast<double>(tests.size())}};
    e.status = s.max <= tolerance ? CheckStatus::pass : CheckStatus::fail;
    e.message = "max relative residual of the weak formulation over 12 test functions and 5 check times";
    return e;
}

namespace {

struct EnergyLevel {
    double lhs = 0.0, rhs = 0.0, ratio = 0.0, radius = 0.0;
    std::vector<double> per_path;
};

EnergyLevel energy_level(SPDEProblem p, const MonteCarloOptions& mc) {
    p.obstacle.reset();
    if (p.boundary) {
        for (double& v : p.xi.values()) v -= p.boundary->m;
        p.boundary.reset();
    }
    const Stepper stepper(p);
    Scheme scheme = mc.scheme;
    scheme.kind = SchemeKind::unconstrained;
    const double dt = p.time.dt();
    EnergyLevel lvl;
    lvl.per_path = parallel_map(mc.paths, mc.workers, [&](std::size_t i) {
        const auto [sol, nu] = stepper.solve(scheme, i);
        double sup = 0.0, grad = 0.0;
        for (std::size_t k = 0; k < sol.u.size(); ++k) {
            sup = std::max(sup, l2_inner(sol.u[k], sol.u[k], p.grid));
            if (k + 1 < sol.u.size()) grad += dt * gradient_norm_squared(sol.u[k], p.grid);
        }
        return sup + grad;
    });
    double rhs = l2_inner(p.xi, p.xi, p.grid);
    GridField ones(p.grid.node_count(), 1.0);
    for (std::size_t k = 0; k < p.time.steps; ++k) {
        const double t = p.time.time(k);
        const GridField f0 = zero_point_field(p.f, p.grid, t, k);
        rhs += dt * (l2_inner(f0, f0, p.grid) + l2_inner(zero_point_square(p.g, p.grid, t, k), ones, p.grid) +
                     l2_inner(zero_point_square(p.h, p.grid, t, k), ones, p.grid));
    }
    const Stats s = stats(lvl.per_path);
    lvl.lhs = s.mean;
    lvl.rhs = rhs;
    lvl.radius = s.radius;
    lvl.ratio = rhs > 0.0 ? s.mean / rhs : (s.mean == 0.0 ? 0.0 : std::numeric_limits<double>::infinity());
    return lvl;
}

bool stable(double a, double b, double tol) {
    if (a == 0.0 && b == 0.0) return true;
    if (!std::isfinite(a) || !std::isfinite(b) || a <= 0.0 || b <= 0.0) return false;
    return std::abs(b / a - 1.0) <= tol;
}

}  // namespace

CheckEntry energy_estimate_check(const ProblemBuilder& build, const MonteCarloOptions& mc, double tol) {
    const EnergyLevel l0 = energy_level(build(0), mc);
    const EnergyLevel l1 = energy_level(build(1), mc);
    CheckEntry e;
    e.name = "energy_estimate";
    e.paths = mc.paths;
    e.mean = l0.ratio;
    e.max = std::max(l0.ratio, l1.ratio);
    e.confidence = l0.rhs > 0.0 ? l0.radius / l0.rhs : 0.0;
    e.per_path = l0.per_path;
    e.metrics = {{"lhs_level0", l0.lhs}, {"rhs_level0", l0.rhs}, {"ratio_level0", l0.ratio},
                 {"lhs_level1", l1.lhs}, {"rhs_level1", l1.rhs}, {"ratio_level1", l1.ratio},
                 {"stability_tolerance", tol}};
    const bool finite = std::isfinite(l0.ratio) && std::isfinite(l1.ratio);
    const bool ok = finite && stable(l0.ratio, l1.ratio, tol);
    e.status = ok ? CheckStatus::pass : CheckStatus::fail;
    std::ostringstream msg;
    msg << "empirical constant c = " << l0.ratio << " -> " << l1.ratio << " under dt and dx halving";
    e.message = msg.str();
    return e;
}

CheckEntry ito_balance_check(const SPDEProblem& p, const MonteCarloOptions& mc, double tolerance) {
    CheckEntry e;
    e.name = "ito_balance";
    e.paths = mc.paths;
    if (p.boundary) {
        e.status = CheckStatus::disabled;
        e.message = "the balance is stated for a null boundary condition";
        return e;
    }
    const Stepper stepper(p);
    const Scheme scheme = effective_scheme(p, mc.scheme);
    const auto& grid = p.grid;
    const double dt = p.time.dt();
    struct Terms {
        double lhs = 0.0, rhs = 0.0, contact = 0.0;
    };
    const auto terms = parallel_map(mc.paths, mc.workers, [&](std::size_t i) {
        const auto [sol, nu] = stepper.solve(scheme, i);
        Terms out;
        const std::size_t K = p.time.steps;
        out.lhs = l2_inner(sol.u[K], sol.u[K], grid);
        out.rhs = l2_inner(p.xi, p.xi, grid);
        std::vector<double> hv(p.h.modes);
        for (std::size_t k = 0; k < K; ++k) {
            const double t = p.time.time(k);
            const GridField& u = sol.u[k];
            out.lhs += 2.0 * dt * dirichlet_form(p.a, p.time.time(k + 1), grid, sol.u[k + 1], sol.u[k + 1]);
            double fu = 0.0, hh = 0.0;
            for (std::size_t node : grid.interior_nodes()) {
                const TermPoint pt = node_point(grid, u, t, k, node);
                const double w = grid.node_weight(node);
                fu += w * p.f(pt) * u[node];
                if (p.h.modes > 0) {
                    p.h.eval(pt, hv);
                    for (double v : hv) hh += w * v * v;
                }
            }
            double gu = 0.0;
            for (std::size_t c = 0; c < grid.cell_count(); ++c) {
                const Gradient gv = p.g(cell_point(grid, u, t, k, c));
                const Gradient du = cell_gradient_at(u, grid, c);
                gu += grid.cell_volume() * (gv[0] * du[0] + gv[1] * du[1]);
            }
            out.rhs += 2.0 * dt * fu - 2.0 * dt * gu + dt * hh;
            if (!nu.mass.empty()) {
                double s = 0.0;
                for (std::size_t n = 0; n < grid.node_count(); ++n) s += sol.u[k + 1][n] * nu.mass[k + 1][n];
                out.contact += 2.0 * s;
            }
        }
        out.rhs += out.contact;
        return out;
    });
    std::vector<double> lhs, rhs, diff, contact;
    for (const Terms& t : terms) {
        lhs.push_back(t.lhs);
        rhs.push_back(t.rhs);
        diff.push_back(t.lhs - t.rhs);
        contact.push_back(t.contact);
    }
    const Stats L = stats(lhs), R = stats(rhs), D = stats(diff), C = stats(contact);
    const double scale = std::max({std::abs(L.mean), std::abs(R.mean), 1e-300});
    const double residual = (L.mean == 0.0 && R.mean == 0.0) ? 0.0 : std::abs(D.mean) / scale;
    e.mean = residual;
    e.max = residual;
    e.confidence = D.radius / scale;
    e.per_path = diff;
    e.metrics = {{"expected_lhs", L.mean}, {"expected_rhs", R.mean}, {"contact_term", C.mean},
                 {"contact_term_min", contact.empty() ? 0.0 : *std::min_element(contact.begin(), contact.end())},
                 {"tolerance", tolerance}};
    e.status = residual - e.confidence <= tolerance ? CheckStatus::pass : CheckStatus::fail;
    std::ostringstream msg;
    msg << "relative residual " << residual << " (95% radius " << e.confidence << "); contact term "
        << (C.mean >= 0.0 ? "nonnegative" : "negative") << " on average";
    e.message = msg.str();
    return e;
}

CheckEntry comparison_check(const SPDEProblem& a, const SPDEProblem& b, const MonteCarloOptions& mc) {
    if (a.seed != b.seed) throw InvalidArgument("comparison needs coupled noise: seeds differ");
    if (!a.grid.same_shape(b.grid) || a.time.steps != b.time.steps || a.time.horizon != b.time.horizon) {
        throw InvalidArgument("comparison needs identical grids");
    }
    if (a.modes() != b.modes()) throw InvalidArgument("comparison needs the same noise model");
    const Stepper s1(a), s2(b);
    const Scheme sc1 = effective_scheme(a, mc.scheme), sc2 = effective_scheme(b, mc.scheme);
    struct Outcome {
        double violations = 0.0, worst = 0.0, nu1 = 0.0, nu2 = 0.0;
    };
    const auto outcomes = parallel_map(mc.paths, mc.workers, [&](std::size_t i) {
        const auto [u1, nu1] = s1.solve(sc1, i);
        const auto [u2, nu2] = s2.solve(sc2, i);
        Outcome o;
        double scale = 0.0;
        for (std::size_t k = 0; k < u1.u.size(); ++k) {
            for (std::size_t n = 0; n < a.grid.node_count(); ++n) {
                scale = std::max({scale, std::abs(u1.u[k][n]), std::abs(u2.u[k][n])});
            }
        }
        const double tol = 1e-9 + 10.0 * std::numeric_limits<double>::epsilon() * scale;
        for (std::size_t k = 0; k < u1.u.size(); ++k) {
            for (std::size_t n = 0; n < a.grid.node_count(); ++n) {
                const double d = u1.u[k][n] - u2.u[k][n];
                o.worst = std::max(o.worst, d);
                if (d > tol) o.violations += 1.0;
            }
        }
        o.nu1 = nu1.total();
        o.nu2 = nu2.total();
        return o;
    });
    CheckEntry e;
    e.name = "comparison";
    e.paths = mc.paths;
    double total = 0.0, worst = -std::numeric_limits<double>::infinity(), ordered = 0.0;
    for (const Outcome& o : outcomes) {
        total += o.violations;
        worst = std::max(worst, o.worst);
        if (o.nu1 >= o.nu2) ordered += 1.0;
        e.per_path.push_back(o.violations);
    }
    e.mean = total / std::max<double>(1.0, static_cast<double>(mc.paths));
    e.max = worst;
    e.metrics = {{"violations", total}, {"max_difference", worst},
                 {"measure_ordered_fraction", mc.paths ? ordered / static_cast<double>(mc.paths) : 0.0}};
    e.status = total == 0.0 ? CheckStatus::pass : CheckStatus::fail;
    std::ostringstream msg;
    msg << total << " ordering violations above tolerance; nu1 >= nu2 on " << ordered << " of " << mc.paths
        << " paths (informational)";
    e.message = msg.str();
    return e;
}

double skorohod_residual(const SolutionPath& path, const ReflectionMeasure& nu) {
    if (nu.mass.empty() || path.obstacle.empty()) return 0.0;
    double pairing = 0.0, total = 0.0, gap = 0.0;
    for (std::size_t k = 0; k < nu.mass.size(); ++k) {
        for (std::size_t n = 0; n < nu.mass[k].size(); ++n) {
            const double d = path.u[k][n] - path.obstacle[k][n];
            pairing += nu.mass[k][n] * d;
            total += nu.mass[k][n];
            gap = std::max(gap, std::abs(d));
        }
    }
    if (total == 0.0 || gap == 0.0) return 0.0;
    return std::abs(pairing) / (total * gap);
}

CheckEntry skorohod_check(const SPDEProblem& p, const MonteCarloOptions& mc, double tolerance) {
    CheckEntry e;
    e.name = "skorohod";
    e.paths = mc.paths;
    if (!p.obstacle || mc.scheme.kind == SchemeKind::unconstrained) {
        e.status = CheckStatus::disabled;
        e.message = "needs an obstacle scheme";
        return e;
    }
    const Stepper stepper(p);
    struct Outcome {
        double residual = 0.0, worst_step = 0.0, mass = 0.0;
    };
    const auto outcomes = parallel_map(mc.paths, mc.workers, [&](std::size_t i) {
        const auto [sol, nu] = stepper.solve(mc.scheme, i);
        Outcome o;
        o.residual = skorohod_residual(sol, nu);
        for (std::size_t k = 1; k < nu.mass.size(); ++k) {
            double s = 0.0;
            for (std::size_t n = 0; n < nu.mass[k].size(); ++n) s += nu.mass[k][n] * (sol.u[k][n] - sol.obstacle[k][n]);
            o.worst_step = std::max(o.worst_step, std::abs(s));
        }
        o.mass = nu.total();
        return o;
    });
    double worst_step = 0.0, mass = 0.0;
    for (const Outcome& o : outcomes) {
        e.per_path.push_back(o.residual);
        worst_step = std::max(worst_step, o.worst_step);
        mass += o.mass;
    }
    const Stats s = stats(e.per_path);
    e.mean = s.mean;
    e.max = s.max;
    e.confidence = s.radius;
    e.metrics = {{"max_step_pairing", worst_step}, {"mean_total_mass", mass / static_cast<double>(mc.paths)},
                 {"tolerance", tolerance}, {"penalty", mc.scheme.penalty}};
    if (mc.scheme.kind == SchemeKind::projected) {
        e.status = s.max <= tolerance && worst_step <= tolerance ? CheckStatus::pass : CheckStatus::fail;
        e.message = "normalised complementarity residual of the projected scheme";
    } else {
        e.status = CheckStatus::informational;
        e.message = "penalised scheme: residual reported against the penalty";
    }
    return e;
}

namespace {

struct MpLevel {
    std::vector<double> lhs, bracket;
    double k_hat = 0.0;
};

GridField positive(GridField f) {
    for (double& v : f.values()) v = std::max(0.0, v);
    return f;
}

MpLevel mp_level(const SPDEProblem& p, const MonteCarloOptions& mc, const MaximumPrincipleOptions& o) {
    const Stepper stepper(p);
    const Scheme scheme = effective_scheme(p, mc.scheme);
    const auto& grid = p.grid;
    const double dt = p.time.dt();
    const std::size_t K = p.time.steps;
    const double m = p.boundary ? p.boundary->m : 0.0;
    const DominatingData zero{GridField(grid.node_count()), zero_scalar(), zero_vector(), zero_noise(0)};
    const DominatingData& dom = p.obstacle && p.obstacle->dominating ? *p.obstacle->dominating : zero;
    const double pp = o.p;

    struct Pair {
        double lhs = 0.0, bracket = 0.0;
    };
    const auto pairs = parallel_map(mc.paths, mc.workers, [&](std::size_t i) {
        const auto [sol, nu] = stepper.solve(scheme, i);
        Pair out;
        double sup = 0.0;
        for (std::size_t k = 0; k <= K; ++k) {
            const double mk = sol.boundary.empty() ? 0.0 : sol.boundary[k];
            for (double v : sol.u[k].values()) sup = std::max(sup, v - mk);
        }
        out.lhs = std::pow(sup, pp);

        auto s_prime = std::make_shared<FieldPath>(sol.dominating);
        if (s_prime->empty()) s_prime->assign(K + 1, GridField(grid.node_count()));
        const ShiftPath shift{s_prime, grid};
        const ShiftedTerms bar = shift_coefficients(p.f, p.g, p.h, shift, dom.f, dom.g, dom.h);

        FieldPath fbar(K + 1), gbar(K + 1), hbar(K + 1), fpb(K + 1), gp(K + 1), hps(K + 1);
        double b_int = 0.0, s_int = 0.0;
        const double q = 1.0 / (1.0 - o.theta);
        std::vector<double> hv(p.h.modes), hpv(dom.h.modes);
        for (std::size_t k = 0; k <= K; ++k) {
            const double t = p.time.time(k);
            const double b = p.boundary ? p.boundary->drift(t) : 0.0;
            const std::vector<double> sigma = p.boundary ? p.boundary->loadings(t) : std::vector<double>{};
            fbar[k] = GridField(grid.node_count());
            gbar[k] = fbar[k];
            hbar[k] = fbar[k];
            fpb[k] = fbar[k];
            gp[k] = fbar[k];
            hps[k] = fbar[k];
            for (std::size_t n : grid.interior_nodes()) {
                TermPoint pt;
                pt.t = t;
                pt.step = k;
                pt.site = n;
                pt.x = grid.coordinates(n);
                fbar[k][n] = bar.f(pt);
                const Gradient g = bar.g(pt);
                gbar[k][n] = g[0] * g[0] + g[1] * g[1];
                double hs = 0.0;
                if (p.h.modes > 0) {
                    bar.h.eval(pt, hv);
                    for (double v : hv) hs += v * v;
                }
                hbar[k][n] = hs;
                fpb[k][n] = dom.f(pt) - b;
                const Gradient g2 = dom.g(pt);
                gp[k][n] = g2[0] * g2[0] + g2[1] * g2[1];
                std::fill(hpv.begin(), hpv.end(), 0.0);
                if (dom.h.modes > 0) dom.h.eval(pt, hpv);
                double hs2 = 0.0;
                const std::size_t J = std::max(hpv.size(), sigma.size());
                for (std::size_t j = 0; j < J; ++j) {
                    const double d = (j < hpv.size() ? hpv[j] : 0.0) - (j < sigma.size() ? sigma[j] : 0.0);
                    hs2 += d * d;
                }
                hps[k][n] = hs2;
            }
            if (k < K) {
                double sn = 0.0;
                for (double v : sigma) sn += v * v;
                b_int += dt * std::pow(std::abs(b), q);
                s_int += dt * std::pow(std::sqrt(sn), 2.0 * q);
            }
            fbar[k] = positive(fbar[k]);
            fpb[k] = positive(fpb[k]);
        }
        const double T = p.time.horizon;
        auto dual = [&](const FieldPath& f) { return sharp_dual_surrogate(f, grid, p.time, T); };
        double xi_term = 0.0, s0_term = 0.0;
        for (std::size_t n : grid.interior_nodes()) {
            xi_term = std::max(xi_term, std::abs(std::max(0.0, p.xi[n] - m) - (dom.s0[n] - m)));
            s0_term = std::max(s0_term, std::max(0.0, dom.s0[n] - m));
        }
        out.bracket = std::pow(xi_term, pp) + std::pow(dual(fbar), pp) + std::pow(dual(gbar), pp / 2) +
                      std::pow(dual(hbar), pp / 2) + std::pow(s0_term, pp) + std::pow(dual(fpb), pp) +
                      std::pow(dual(gp), pp / 2) + std::pow(dual(hps), pp / 2) +
                      std::pow(b_int, pp * (1.0 - o.theta)) + std::pow(s_int, pp * (1.0 - o.theta) / 2.0);
        return out;
    });
    MpLevel lvl;
    for (const Pair& x : pairs) {
        lvl.lhs.push_back(x.lhs);
        lvl.bracket.push_back(x.bracket);
    }
    const double L = stats(lvl.lhs).mean, R = stats(lvl.bracket).mean;
    lvl.k_hat = R > 0.0 ? L / R : (L == 0.0 ? 0.0 : std::numeric_limits<double>::infinity());
    return lvl;
}

SPDEProblem enlarged(SPDEProblem p, double delta, bool in_xi) {
    if (in_xi) {
        for (std::size_t n : p.grid.interior_nodes()) p.xi[n] += delta;
    } else {
        const ScalarTerm f = p.f;
        p.f.name = f.name + "+" + std::to_string(delta);
        p.f.eval = [f, delta](const TermPoint& pt) { return f(pt) + delta; };
    }
    return p;
}

}  // namespace

CheckEntry maximum_principle_check(const ProblemBuilder& build, const MonteCarloOptions& mc,
                                   const MaximumPrincipleOptions& o) {
    CheckEntry e;
    e.name = "maximum_principle";
    e.paths = mc.paths;
    const SPDEProblem p0 = build(0);
    const AssumptionReport gate = validate_assumptions(p0);
    e.metrics = {{"mp_lhs", gate.mp_lhs}, {"lambda", gate.lambda}};
    if (!gate.mp_condition) {
        e.status = CheckStatus::disabled;
        std::ostringstream msg;
        msg << "disabled: alpha + beta^2/2 + 72 beta^2 = " << gate.mp_lhs << " >= lambda = " << gate.lambda;
        e.message = msg.str();
        return e;
    }
    const MpLevel l0 = mp_level(p0, mc, o);
    const MpLevel l1 = mp_level(build(1), mc, o);
    const MpLevel lx = mp_level(enlarged(p0, o.delta, true), mc, o);
    const MpLevel lf = mp_level(enlarged(p0, o.delta, false), mc, o);

    auto coupled = [&](const MpLevel& big) {
        std::vector<double> d;
        for (std::size_t i = 0; i < l0.lhs.size(); ++i) d.push_back(big.lhs[i] - l0.lhs[i]);
        return stats(d);
    };
    const Stats dx = coupled(lx), df = coupled(lf);
    const Stats base = stats(l0.lhs);
    const bool finite = std::isfinite(l0.k_hat) && std::isfinite(l1.k_hat);
    const bool monotone = dx.mean >= -dx.radius && df.mean >= -df.radius;
    const bool steady = stable(l0.k_hat, l1.k_hat, o.stability_tolerance);
    e.mean = base.mean;
    e.max = base.max;
    e.confidence = base.radius;
    e.per_path = l0.lhs;
    e.metrics.insert(e.metrics.end(), {{"k_hat_level0", l0.k_hat}, {"k_hat_level1", l1.k_hat},
                                       {"bracket_level0", stats(l0.bracket).mean},
                                       {"lhs_enlarged_xi_minus_base", dx.mean},
                                       {"lhs_enlarged_f_minus_base", df.mean}, {"p", o.p}, {"theta", o.theta},
                                       {"finite", finite ? 1.0 : 0.0}, {"monotone", monotone ? 1.0 : 0.0},
                                       {"stable", steady ? 1.0 : 0.0}});
    e.status = finite && monotone && steady ? CheckStatus::pass : CheckStatus::fail;
    std::ostringstream msg;
    msg << "k = " << l0.k_hat << " -> " << l1.k_hat << "; enlarging xi/f changes E LHS by " << dx.mean << " / "
        << df.mean;
    e.message = msg.str();
    return e;
}

}  // namespace ospde
