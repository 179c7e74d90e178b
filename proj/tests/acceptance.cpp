#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <sstream>
#include <string>

#include "ospde/capacity.hpp"
#include "ospde/config.hpp"
#include "ospde/driver.hpp"
#include "ospde/verify.hpp"

using namespace ospde;
namespace fs = std::filesystem;

namespace {

// tolerances
constexpr double kOracleOrder = 0.4;
constexpr double kHeatError = 1e-3;
constexpr double kSkorohod = 1e-10;
constexpr double kPenaltySlope = -1.0, kPenaltySlopeBand = 0.3, kPenaltyGapFactor = 5.0;
constexpr double kCapacityTarget = 0.5, kCapacityBand = 0.10;
constexpr double kItoStochastic = 0.05, kItoDeterministic = 0.01;
constexpr double kStability = 0.5;

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string src(const std::string& rel) { return std::string(OSPDE_SOURCE_DIR) + "/" + rel; }

ExperimentConfig config(const std::string& name) { return parse_config(src("configs/" + name)); }

std::string scratch(const std::string& name) {
    fs::path p = fs::temp_directory_path() / ("ospde_acceptance_" + name);
    fs::remove_all(p);
    return p.string();
}

std::string slurp(const fs::path& path) {
    std::ifstream in(path);
    std::stringstream s;
    s << in.rdbuf();
    return s.str();
}

std::string fmt(const char* f, double a, double b = 0, double c = 0, double d = 0) {
    char buf[256];
    std::snprintf(buf, sizeof buf, f, a, b, c, d);
    return buf;
}

const CheckEntry& entry(const VerificationReport& r, const std::string& name) {
    for (const auto& e : r.entries) {
        if (e.name == name) return e;
    }
    throw std::runtime_error("report has no entry " + name);
}

Outcome oracle_equivalence() {
    const ConvergenceResult r = run_convergence(config("oracle.yaml"));
    bool decreasing = r.reference == "spectral-oracle";
    for (std::size_t i = 1; i < r.error.size(); ++i) decreasing = decreasing && r.error[i] < r.error[i - 1];
    return {decreasing && r.order >= kOracleOrder,
            fmt("errors %.3e %.3e %.3e, order %.3f", r.error.at(0), r.error.at(1), r.error.at(2), r.order)};
}

Outcome heat_benchmark() {
    auto cfg = config("heat.yaml");
    const SPDEProblem p = build_problem(cfg);
    const auto [path, nu] = Stepper(p).solve(Scheme{}, 0);
    double err = 0.0;
    for (std::size_t k = 0; k <= p.time.steps; ++k) {
        const double t = p.time.time(k);
        for (std::size_t n = 0; n < p.grid.node_count(); ++n) {
            const double exact = std::exp(-std::numbers::pi * std::numbers::pi * t) *
                                 std::sin(std::numbers::pi * p.grid.coordinates(n)[0]);
            err = std::max(err, std::abs(path.u[k][n] - exact));
        }
    }
    return {err <= kHeatError, fmt("max error %.3e at %g nodes, dt %g", err, p.grid.node_count(), p.time.dt())};
}

Outcome skorohod_exactness() {
    const auto cfg = config("skorohod.yaml");
    MonteCarloOptions mc;
    mc.paths = 100;
    mc.scheme = cfg.scheme;
    const CheckEntry e = skorohod_check(build_problem(cfg), mc, kSkorohod);
    return {e.status == CheckStatus::pass && e.max <= kSkorohod, fmt("worst residual %.3e over %g paths", e.max, e.paths)};
}

Outcome penalization_consistency() {
    auto cfg = config("ito.yaml");
    cfg.horizon = 0.1;
    cfg.steps = 10000;
    const SPDEProblem p = build_problem(cfg);
    const Stepper stepper(p);
    auto solve = [&](SchemeKind kind, double n) {
        Scheme s = cfg.scheme;
        s.kind = kind;
        s.penalty = n;
        return stepper.solve(s, 0).first;
    };
    auto l22 = [&](const FieldPath& f) { return lpq_norm(f, p.grid, p.time, 2.0, 2.0, p.time.horizon); };
    const SolutionPath proj = solve(SchemeKind::projected, 0.0);
    std::vector<double> ns{1e2, 1e3, 1e4}, viol;
    FieldPath last_gap;
    for (double n : ns) {
        const SolutionPath pen = solve(SchemeKind::penalized, n);
        FieldPath v, gap;
        for (std::size_t k = 0; k < pen.u.size(); ++k) {
            GridField a(p.grid.node_count()), b(p.grid.node_count());
            for (std::size_t i = 0; i < a.size(); ++i) {
                a[i] = std::max(0.0, pen.obstacle[k][i] - pen.u[k][i]);
                b[i] = pen.u[k][i] - proj.u[k][i];
            }
            v.push_back(std::move(a));
            gap.push_back(std::move(b));
        }
        viol.push_back(l22(v));
        last_gap = std::move(gap);
    }
    const double slope = fitted_slope(ns, viol);
    const double diff = l22(last_gap);
    const bool ok = std::abs(slope - kPenaltySlope) <= kPenaltySlopeBand && diff <= kPenaltyGapFactor * viol.back();
    return {ok, fmt("violation slope %.3f, |u_pen - u_proj| %.3e vs violation %.3e (dt %g)", slope, diff, viol.back(),
                    p.time.dt())};
}

Outcome comparison_ordering() {
    auto cfg = config("comparison.yaml");
    cfg.paths = 100;
    const CheckEntry e = entry(run_verify(cfg), "comparison");

    auto neg = config("comparison_negative.yaml");
    neg.out = scratch("negative");
    std::ostringstream log;
    const int code = run(neg, "verify", log);
    const CheckEntry n = entry(run_verify(neg), "comparison");
    const bool ok = e.status == CheckStatus::pass && e.max <= 1e-9 && code == 1 && n.metric("violations") > 0;
    return {ok, fmt("max violation %.3e; negative control %g violations, exit %g", e.max, n.metric("violations"), code)};
}

Outcome capacity_slice() {
    const auto t0 = std::chrono::steady_clock::now();
    const CapacityEstimate c = run_capacity(config("capacity.yaml"));
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const double fine = c.levels.back().mass;
    const bool ok = c.levels.size() == 3 && std::abs(fine - kCapacityTarget) <= kCapacityBand * kCapacityTarget &&
                    c.monotone && secs <= 600.0;
    return {ok, fmt("masses %.4f %.4f %.4f, %.1f s", c.levels.at(0).mass, c.levels.at(1).mass, fine, secs)};
}

Outcome ito_balance() {
    const auto cfg = config("ito.yaml");
    MonteCarloOptions mc;
    mc.paths = 2000;
    mc.workers = cfg.workers;
    mc.scheme = cfg.scheme;
    SPDEProblem p = build_problem(cfg);
    const CheckEntry s = ito_balance_check(p, mc, kItoStochastic);
    p.h = zero_noise(p.modes());
    mc.paths = 1;
    const CheckEntry d = ito_balance_check(p, mc, kItoDeterministic);
    const bool ok = s.status == CheckStatus::pass && d.status == CheckStatus::pass && d.mean <= kItoDeterministic;
    return {ok, fmt("residual %.4f (+/- %.4f) over 2000 paths, deterministic %.2e", s.mean, s.confidence, d.mean)};
}

Outcome stability() {
    auto cfg = config("maximum_principle.yaml");
    cfg.verify.stability_tolerance = kStability;
    const VerificationReport r = run_verify(cfg);
    const CheckEntry& en = entry(r, "energy_estimate");
    const CheckEntry& mp = entry(r, "maximum_principle");

    const ProblemBuilder gated = [&](unsigned level) {
        SPDEProblem p = build_problem(cfg, level);
        p.h.beta = 0.5;
        return p;
    };
    MonteCarloOptions mc;
    mc.paths = 2;
    mc.scheme = cfg.scheme;
    const CheckEntry off = maximum_principle_check(gated, mc);
    const bool ok = en.status == CheckStatus::pass && mp.status == CheckStatus::pass &&
                    off.status == CheckStatus::disabled && !off.message.empty();
    return {ok, fmt("c %.4f -> %.4f, k %.4f -> %.4f", en.metric("ratio_level0"), en.metric("ratio_level1"),
                    mp.metric("k_hat_level0"), mp.metric("k_hat_level1")) +
                    ", gate: " + off.message};
}

Outcome assumption_gates() {
    struct Row {
        double lambda, alpha, beta;
        bool h, mp;
    };
    const Row rows[] = {
        {1.0, 0.0, 0.0, true, true},   {1.0, 0.9, 0.0, true, true},    {1.0, 0.0, 0.25, true, false},
        {1.0, 1.0, 0.0, false, false}, {1.0, 0.5, 1.0, false, false},  {2.0, 0.5, 0.1, true, true},
        {0.5, 0.2, 0.05, true, true},  {0.5, 0.3, 0.1, true, false},   {1.0, 0.0, 1.5, false, false},
        {3.0, 1.0, 0.2, true, false},
    };
    int good = 0;
    for (const Row& r : rows) {
        const AssumptionReport a = check_constants(r.lambda, r.alpha, r.beta);
        good += a.h_contraction == r.h && a.mp_condition == r.mp;
    }
    return {good == 10, fmt("%g of 10 tuples match", good)};
}

Outcome reproducibility() {
    auto cfg = config("skorohod.yaml");
    cfg.paths = 4;
    cfg.out = scratch("first");
    std::ostringstream log;
    bool ok = run(cfg, "simulate", log) == 0;
    auto again = parse_config((fs::path(cfg.out) / "manifest.json").string());
    again.out = scratch("second");
    ok = ok && run(again, "simulate", log) == 0;
    std::size_t same = 0;
    for (std::size_t i = 0; i < cfg.paths; ++i) {
        const std::string f = "trajectory_" + std::to_string(i) + ".csv";
        same += slurp(fs::path(cfg.out) / f) == slurp(fs::path(again.out) / f);
    }
    ok = ok && same == cfg.paths;

    auto suite = config("comparison.yaml");
    suite.paths = 20;
    suite.checks = {"skorohod", "comparison", "ito_balance", "weak_residual"};
    suite.workers = 1;
    const auto serial = run_verify(suite).to_json().dump();
    suite.workers = 2;
    const auto parallel = run_verify(suite).to_json().dump();
    ok = ok && serial == parallel;
    return {ok, fmt("%g of %g trajectories identical; serial and parallel reports ", same, cfg.paths) +
                    (serial == parallel ? "identical" : "differ")};
}

}  // namespace

int main() {
    const std::pair<const char*, std::function<Outcome()>> criteria[] = {
        {"oracle equivalence", oracle_equivalence},
        {"deterministic heat benchmark", heat_benchmark},
        {"skorohod exactness", skorohod_exactness},
        {"penalization consistency", penalization_consistency},
        {"comparison", comparison_ordering},
        {"capacity slice", capacity_slice},
        {"ito energy balance", ito_balance},
        {"energy and maximum principle stability", stability},
        {"assumption gates", assumption_gates},
        {"reproducibility", reproducibility},
    };
    int failed = 0, index = 0;
    for (const auto& [name, fn] : criteria) {
        ++index;
        Outcome o;
        try {
            o = fn();
        } catch (const std::exception& e) {
            o = {false, std::string("error: ") + e.what()};
        }
        failed += !o.pass;
        std::printf("%s %2d %s: %s\n", o.pass ? "PASS" : "FAIL", index, name, o.detail.c_str());
        std::fflush(stdout);
    }
    return failed == 0 ? 0 : 1;
}
