#include "ospde/driver.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>

#include "ospde/csv.hpp"
#include "ospde/parallel.hpp"

namespace ospde {

namespace fs = std::filesystem;

namespace {

MonteCarloOptions monte_carlo(const ExperimentConfig& c) {
    MonteCarloOptions mc;
    mc.paths = c.paths;
    mc.workers = c.workers;
    mc.scheme = c.scheme;
    return mc;
}

bool wants(const ExperimentConfig& c, const std::string& name) {
    return c.checks.empty() || std::find(c.checks.begin(), c.checks.end(), name) != c.checks.end();
}

CheckEntry assumptions_entry(const SPDEProblem& p) {
    const AssumptionReport r = validate_assumptions(p);
    CheckEntry e;
    e.name = "assumptions";
    e.metrics = {{"lambda", r.lambda},
                 {"alpha", r.alpha},
                 {"beta", r.beta},
                 {"contraction_lhs", r.contraction_lhs},
                 {"h_contraction", r.h_contraction ? 1.0 : 0.0},
                 {"mp_lhs", r.mp_lhs},
                 {"mp_condition", r.mp_condition ? 1.0 : 0.0}};
    e.status = r.h_contraction ? CheckStatus::pass : CheckStatus::fail;
    e.message = r.h_contraction ? "2 alpha + beta^2 < 2 lambda holds" : "2 alpha + beta^2 < 2 lambda fails";
    for (const auto& n : r.notes) e.message += "; " + n;
    return e;
}

void write_json(const fs::path& file, const nlohmann::ordered_json& j) {
    std::ofstream out(file);
    if (!out) throw Error("cannot write " + file.string());
    out << j.dump(2) << '\n';
    if (!out) throw Error("write failed for " + file.string());
}

std::ofstream open(const fs::path& file) {
    std::ofstream out(file);
    if (!out) throw Error("cannot write " + file.string());
    return out;
}

double path_error(const FieldPath& u, const FieldPath& ref, std::size_t stride, const SpatialGrid& grid, double dt) {
    double s = 0.0;
    for (std::size_t k = 0; k + 1 < u.size(); ++k) {
        GridField d = u[k];
        for (std::size_t n = 0; n < d.size(); ++n) d[n] -= ref[k * stride][n];
        s += dt * l2_inner(d, d, grid);
    }
    return s;
}

bool oracle_eligible(const SPDEProblem& p) {
    return p.grid.dim() == 1 && p.a.name == "identity" && p.f.state_free && p.g.state_free && p.h.state_free &&
           !p.obstacle && !p.boundary;
}

}  // namespace

double fitted_slope(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2) throw InvalidArgument("slope fit needs two or more points");
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += std::log(x[i]);
        my += std::log(y[i]);
    }
    mx /= static_cast<double>(x.size());
    my /= static_cast<double>(x.size());
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (std::log(x[i]) - mx) * (std::log(y[i]) - my);
        sxx += (std::log(x[i]) - mx) * (std::log(x[i]) - mx);
    }
    return sxy / sxx;
}

VerificationReport run_verify(const ExperimentConfig& c) {
    const MonteCarloOptions mc = monte_carlo(c);
    const SPDEProblem p = build_problem(c, 0);
    const ProblemBuilder build = [&c](unsigned r) { return build_problem(c, r); };
    VerificationReport report;
    report.metadata["seed"] = c.seed;
    report.metadata["paths"] = c.paths;
    report.metadata["scheme"] = to_string(c.scheme.kind);
    report.metadata["modes"] = p.modes();
    if (p.noise) report.metadata["discarded_mass"] = p.noise->discarded_mass;

    if (wants(c, "assumptions")) report.entries.push_back(assumptions_entry(p));
    if (wants(c, "skorohod")) report.entries.push_back(skorohod_check(p, mc, c.verify.skorohod_tolerance));
    if (wants(c, "comparison")) {
        report.entries.push_back(comparison_check(p, build_comparison_partner(c, 0), mc));
    }
    if (wants(c, "ito_balance")) report.entries.push_back(ito_balance_check(p, mc, c.verify.ito_tolerance));
    if (wants(c, "weak_residual")) report.entries.push_back(weak_residual_entry(p, mc, c.verify.weak_tolerance));
    if (wants(c, "energy_estimate")) {
        report.entries.push_back(energy_estimate_check(build, mc, c.verify.stability_tolerance));
    }
    if (wants(c, "maximum_principle")) {
        MaximumPrincipleOptions o;
        o.p = c.verify.p;
        o.theta = c.verify.theta;
        o.delta = c.verify.delta;
        o.stability_tolerance = c.verify.stability_tolerance;
        report.entries.push_back(maximum_principle_check(build, mc, o));
    }
    return report;
}

CapacityEstimate run_capacity(const ExperimentConfig& c) {
    SpaceTimeCompact k;
    k.t1 = k.t2 = c.capacity.time;
    if (!c.capacity.mask.empty()) {
        const Expression e = Expression::parse(c.capacity.mask);
        k.mask = [e](const Point& x) {
            Variables v;
            v.x = x[0];
            v.x2 = x[1];
            return e(v) != 0.0;
        };
    } else {
        const double a = c.capacity.interval[0], b = c.capacity.interval[1];
        const std::size_t dim = c.grid.dim;
        k.mask = [a, b, dim](const Point& x) {
            for (std::size_t i = 0; i < dim; ++i) {
                if (x[i] < a || x[i] > b) return false;
            }
            return true;
        };
    }
    const SPDEProblem p = build_problem(c, 0);
    return capacity_estimate(k, c.grid.dim, c.grid.extent[0], c.capacity.horizon, p.a, c.capacity.schedule);
}

ConvergenceResult run_convergence(const ExperimentConfig& c) {
    ConvergenceResult r;
    const MonteCarloOptions mc = monte_carlo(c);
    ExperimentConfig probe = c;
    probe.steps = c.convergence.steps.front();
    const bool oracle = oracle_eligible(build_problem(probe, 0));
    if (!oracle && c.noise.modes > 0) {
        throw InvalidArgument("convergence needs a spectral-oracle problem (1D, a = I, state-free terms) or no noise");
    }
    r.reference = oracle ? "spectral-oracle" : "fine-reference";
    const std::size_t finest = *std::max_element(c.convergence.steps.begin(), c.convergence.steps.end());
    FieldPath fine;
    if (!oracle) {
        ExperimentConfig f = c;
        f.steps = 4 * finest;
        const SPDEProblem pf = build_problem(f, 0);
        fine = Stepper(pf).solve(pf.obstacle ? c.scheme : Scheme{}, 0).first.u;
    }
    for (std::size_t steps : c.convergence.steps) {
        ExperimentConfig level = c;
        level.steps = steps;
        const SPDEProblem p = build_problem(level, 0);
        const Stepper stepper(p);
        Scheme scheme = c.scheme;
        if (!p.obstacle) scheme.kind = SchemeKind::unconstrained;
        const std::size_t modes = c.convergence.oracle_modes ? c.convergence.oracle_modes : p.grid.interior_count();
        const std::size_t paths = oracle ? mc.paths : 1;
        const std::vector<double> sq = parallel_map(paths, mc.workers, [&](std::size_t i) {
            const FieldPath u = stepper.solve(scheme, i).first.u;
            if (oracle) return path_error(u, spectral_oracle_linear(p, modes, i), 1, p.grid, p.time.dt());
            if ((4 * finest) % steps != 0) throw InvalidArgument("step counts must divide the reference");
            return path_error(u, fine, 4 * finest / steps, p.grid, p.time.dt());
        });
        r.steps.push_back(steps);
        r.dt.push_back(p.time.dt());
        r.error.push_back(std::sqrt(std::accumulate(sq.begin(), sq.end(), 0.0) / static_cast<double>(sq.size())));
    }
    r.order = fitted_slope(r.dt, r.error);
    return r;
}

nlohmann::ordered_json make_manifest(const ExperimentConfig& c, const std::string& subcommand) {
    nlohmann::ordered_json j = to_json(c);
    nlohmann::ordered_json m;
    m["format"] = 1;
    m["subcommand"] = subcommand;
    m["seed"] = c.seed;
    m["scheme"] = to_string(c.scheme.kind);
    m["penalty"] = std::isinf(c.scheme.penalty) ? nlohmann::ordered_json("inf") : nlohmann::ordered_json(c.scheme.penalty);
    m["dt"] = c.steps ? c.horizon / static_cast<double>(c.steps) : 0.0;
    m["truncation"] = c.noise.modes;
    if (c.noise.kernel != "none") {
        try {
            const SPDEProblem p = build_problem(c, 0);
            m["trace"] = p.noise->trace;
            m["discarded_mass"] = p.noise->discarded_mass;
            if (std::isfinite(p.noise->exact_tail)) m["exact_tail"] = p.noise->exact_tail;
        } catch (const std::exception&) {
        }
    }
    j["manifest"] = m;
    return j;
}

int run(const ExperimentConfig& c, const std::string& subcommand, std::ostream& log) {
    try {
        const fs::path out(c.out);
        fs::create_directories(out);
        write_json(out / "manifest.json", make_manifest(c, subcommand));
        if (subcommand == "simulate") {
            const SPDEProblem p = build_problem(c, 0);
            const Stepper stepper(p);
            Scheme scheme = c.scheme;
            if (!p.obstacle) scheme.kind = SchemeKind::unconstrained;
            const auto results = parallel_map(c.paths, c.workers, [&](std::size_t i) { return stepper.solve(scheme, i); });
            for (std::size_t i = 0; i < results.size(); ++i) {
                auto f = open(out / ("trajectory_" + std::to_string(i) + ".csv"));
                write_trajectory_csv(f, results[i].first, results[i].second, p.grid, p.time);
                if (!results[i].first.obstacle.empty()) {
                    auto g = open(out / ("obstacle_" + std::to_string(i) + ".csv"));
                    write_field_csv(g, results[i].first.obstacle, p.grid, p.time);
                }
            }
            log << "simulate: " << results.size() << " path(s) written to " << out.string() << '\n';
            return 0;
        }
        if (subcommand == "verify") {
            const VerificationReport report = run_verify(c);
            write_json(out / "report.json", report.to_json());
            auto f = open(out / "residuals.csv");
            write_residual_csv(f, report);
            for (const CheckEntry& e : report.entries) {
                log << e.name << ": " << to_string(e.status) << " - " << e.message << '\n';
            }
            return report.all_pass() ? 0 : 1;
        }
        if (subcommand == "capacity") {
            const CapacityEstimate est = run_capacity(c);
            auto f = open(out / "capacity.csv");
            write_capacity_csv(f, est);
            VerificationReport report;
            CheckEntry e;
            e.name = "capacity";
            e.mean = est.value;
            e.max = est.value;
            e.metrics = {{"value", est.value}, {"error_indicator", est.error_indicator}, {"extrapolated", est.extrapolated},
                         {"monotone", est.monotone ? 1.0 : 0.0}};
            const bool finite = std::isfinite(est.value);
            e.status = finite && (est.levels.size() < 3 || est.monotone) ? CheckStatus::pass : CheckStatus::fail;
            e.message = "finest-level capacity " + format_double(est.value);
            report.entries.push_back(e);
            write_json(out / "report.json", report.to_json());
            log << "capacity: " << format_double(est.value) << " (indicator " << format_double(est.error_indicator)
                << ")\n";
            return report.all_pass() ? 0 : 1;
        }
        if (subcommand == "convergence") {
            const ConvergenceResult r = run_convergence(c);
            auto f = open(out / "convergence.csv");
            f << "steps,dt,error\n";
            for (std::size_t i = 0; i < r.steps.size(); ++i) {
                f << r.steps[i] << ',' << format_double(r.dt[i]) << ',' << format_double(r.error[i]) << '\n';
            }
            VerificationReport report;
            CheckEntry e;
            e.name = "convergence";
            e.mean = r.order;
            e.per_path = r.error;
            e.metrics = {{"order", r.order}, {"min_order", c.convergence.min_order}};
            e.status = r.order >= c.convergence.min_order ? CheckStatus::pass : CheckStatus::fail;
            e.message = "fitted order " + format_double(r.order) + " against " + r.reference;
            report.entries.push_back(e);
            write_json(out / "report.json", report.to_json());
            log << e.message << '\n';
            return report.all_pass() ? 0 : 1;
        }
        log << "unknown subcommand '" << subcommand << "'\n";
        return 2;
    } catch (const ConfigError& e) {
        for (const auto& m : e.messages()) log << "config error: " << m << '\n';
        return 2;
    } catch (const std::exception& e) {
        log << "error: " << e.what() << '\n';
        return 2;
    }
}

}  // namespace ospde
