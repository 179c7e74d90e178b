#pragma once

#include <ostream>
#include <string>
#include <vector>

#include "ospde/config.hpp"
#include "ospde/verify.hpp"

namespace ospde {

struct ConvergenceResult {
    std::string reference;  // "spectral-oracle" or "fine-reference"
    std::vector<std::size_t> steps;
    std::vector<double> dt;
    std::vector<double> error;  // RMS over paths of the L2(0,T;L2) error
    double order = 0.0;         // least-squares slope of log error against log dt
};

/// Runs the configured check suite.
VerificationReport run_verify(const ExperimentConfig& config);
CapacityEstimate run_capacity(const ExperimentConfig& config);
ConvergenceResult run_convergence(const ExperimentConfig& config);

/// Least-squares slope of log y against log x.
double fitted_slope(const std::vector<double>& x, const std::vector<double>& y);

/// Manifest: the full configuration plus a `manifest` block describing the run.
nlohmann::ordered_json make_manifest(const ExperimentConfig& config, const std::string& subcommand);

/// Executes a subcommand and writes its artifacts to config.out.
/// Returns 0 when every check passes, 1 when a check fails and 2 on an execution error.
int run(const ExperimentConfig& config, const std::string& subcommand, std::ostream& log);

}  // namespace ospde
