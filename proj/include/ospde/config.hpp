#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "ospde/capacity.hpp"
#include "ospde/problem.hpp"
#include "ospde/stepper.hpp"
#include "ospde/verify.hpp"

namespace ospde {

/// A term selected by kind. Only the parameters of the chosen kind are read and echoed.
struct TermSpec {
    std::string kind = "zero";
    double cy = 0.0;
    double cz = 0.0;
    double value = 0.0;
    double amplitude = 1.0;
    std::vector<std::string> expr;
    double C = 0.0;
    double alpha = 0.0;
    double beta = 0.0;
};

struct GridSpec {
    std::size_t dim = 1;
    std::vector<double> extent{1.0};
    std::vector<std::size_t> nodes{65};
};

struct OperatorSpec {
    std::string family = "identity";
    double a11 = 1.0;
    double a22 = 1.0;
    double a12 = 0.0;
    std::string table;
};

struct NoiseSpec {
    std::string kernel = "none";
    std::size_t modes = 0;
    double length = 0.2;
    std::string table;
};

struct ObstacleConfig {
    std::string barrier;
    bool dominating = false;
    std::string s0 = "0";
    TermSpec f, g, h;
    double gap = 0.0;
};

struct BoundaryConfig {
    double m = 0.0;
    std::string b = "0";
    std::vector<std::string> sigma;
};

struct ComparisonConfig {
    double xi_offset = 0.1;
    double obstacle_offset = 0.05;
    double f_offset = 0.0;
};

struct CapacityConfig {
    std::vector<double> interval{0.25, 0.75};
    std::string mask;
    double time = 0.25;
    double horizon = 0.5;
    std::vector<RefinementLevel> schedule{{33, 500, std::numeric_limits<double>::infinity()},
                                          {129, 5000, std::numeric_limits<double>::infinity()},
                                          {513, 50000, std::numeric_limits<double>::infinity()}};
};

struct ConvergenceConfig {
    std::vector<std::size_t> steps{125, 250, 500};
    double min_order = 0.4;
    std::size_t oracle_modes = 0;
};

struct VerifyConfig {
    double p = 2.0;
    double theta = 0.5;
    double delta = 0.1;
    double stability_tolerance = 0.5;
    double ito_tolerance = 0.05;
    double weak_tolerance = 0.05;
    double skorohod_tolerance = 1e-10;
};

struct ExperimentConfig {
    GridSpec grid;
    double horizon = 1.0;
    std::size_t steps = 100;
    OperatorSpec op;
    TermSpec f, g, h;
    NoiseSpec noise;
    std::string initial = "0";
    std::optional<ObstacleConfig> obstacle;
    std::optional<BoundaryConfig> boundary;

    Scheme scheme;

    std::uint64_t seed = 0;
    std::size_t paths = 1;
    std::string out = "out";
    std::size_t workers = 1;
    std::size_t trajectories = 1;

    std::vector<std::string> checks;
    ComparisonConfig comparison;
    CapacityConfig capacity;
    ConvergenceConfig convergence;
    VerifyConfig verify;
};

/// Names accepted in `checks`.
const std::vector<std::string>& known_checks();

/// Reads a YAML file (a manifest written by the driver is also accepted). Throws ConfigError with
/// every problem found.
ExperimentConfig parse_config(const std::string& path);
ExperimentConfig parse_config_text(const std::string& text);

/// Full configuration with defaults applied, in a stable key order.
nlohmann::ordered_json to_json(const ExperimentConfig& config);

/// Problem at refinement r: (nodes - 1) 2^r + 1 nodes per axis and steps 2^r.
SPDEProblem build_problem(const ExperimentConfig& config, unsigned refinement = 0);
/// The ordered partner of the comparison check: offsets applied to xi, S and f.
SPDEProblem build_comparison_partner(const ExperimentConfig& config, unsigned refinement = 0);

/// Edit distance used for the nearest-key hint.
std::size_t edit_distance(const std::string& a, const std::string& b);

}  // namespace ospde
