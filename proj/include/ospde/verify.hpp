#pragma once

#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "ospde/stepper.hpp"

namespace ospde {

enum class CheckStatus { pass, fail, informational, disabled };
std::string to_string(CheckStatus status);

struct CheckEntry {
    std::string name;
    CheckStatus status = CheckStatus::informational;
    double mean = 0.0;
    double max = 0.0;
    /// 95% confidence radius of `mean` (0 for deterministic checks).
    double confidence = 0.0;
    std::size_t paths = 0;
    std::string message;
    std::vector<std::pair<std::string, double>> metrics;
    /// One value per path, written to the per-path CSV.
    std::vector<double> per_path;

    double metric(const std::string& key) const;
};

struct VerificationReport {
    nlohmann::ordered_json metadata = nlohmann::ordered_json::object();
    std::vector<CheckEntry> entries;

    bool all_pass() const;
    nlohmann::ordered_json to_json() const;
};

/// Builds the problem at refinement r: node spacing and dt both divided by 2^r.
using ProblemBuilder = std::function<SPDEProblem(unsigned refinement)>;

struct MonteCarloOptions {
    std::size_t paths = 100;
    std::size_t workers = 1;
    Scheme scheme;
};

/// Space-time test function with analytic derivatives.
struct TestFunction {
    std::string name;
    std::function<double(double, const Point&)> phi;
    std::function<double(double, const Point&)> dphi_dt;
    std::function<Gradient(double, const Point&)> grad;
};

/// 3 time factors x 4 space bumps sin^2(pi x / L) sin(m pi x / L) (tensorised in 2D).
std::vector<TestFunction> standard_test_functions(const SpatialGrid& grid, double horizon);

struct WeakResidual {
    double max_relative = 0.0;
    std::vector<double> per_function;
};

/// Both sides of the weak formulation at `time_samples` equally spaced check times, with the
/// analytic derivatives of phi and a left-endpoint time rule. Returns the largest relative residual.
WeakResidual weak_residual_check(const SolutionPath& path, const ReflectionMeasure& nu, const SPDEProblem& problem,
                                 const std::vector<TestFunction>& tests, std::size_t time_samples = 5);

/// E[sup |u|^2 + int |grad u|^2] / [|xi|^2 + int (|f0|^2 + |g0|^2 + |h0|^2)] at refinements 0 and 1.
CheckEntry energy_estimate_check(const ProblemBuilder& build, const MonteCarloOptions& mc,
                                 double stability_tolerance = 0.5);

/// Expected energy balance with Phi(y) = y^2.
CheckEntry ito_balance_check(const SPDEProblem& problem, const MonteCarloOptions& mc, double tolerance = 0.05);

/// Coupled-noise ordering u1 <= u2. Throws InvalidArgument when the problems are not coupled.
CheckEntry comparison_check(const SPDEProblem& first, const SPDEProblem& second, const MonteCarloOptions& mc);

/// sum nu (u - S) / (total nu * |u - S|_inf) for one path.
double skorohod_residual(const SolutionPath& path, const ReflectionMeasure& nu);
CheckEntry skorohod_check(const SPDEProblem& problem, const MonteCarloOptions& mc, double tolerance = 1e-10);

struct MaximumPrincipleOptions {
    double p = 2.0;
    double theta = 0.5;
    /// Enlargement of xi and f for the monotonicity experiment.
    double delta = 0.1;
    double stability_tolerance = 0.5;
};

/// E |(u - M)^+|^p_{inf,inf;T} against the data bracket with the # surrogate for dual norms.
CheckEntry maximum_principle_check(const ProblemBuilder& build, const MonteCarloOptions& mc,
                                   const MaximumPrincipleOptions& options = {});

CheckEntry weak_residual_entry(const SPDEProblem& problem, const MonteCarloOptions& mc, double tolerance = 0.01);

}  // namespace ospde
