#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <vector>

#include "ospde/coefficients.hpp"
#include "ospde/elliptic_operator.hpp"
#include "ospde/grid.hpp"
#include "ospde/noise.hpp"

namespace ospde {

/// Data of the dominating linear SPDE dS' = (-A S' + f' + div g') dt + sum_j h'_j dB_j, S'(0) = S'_0.
/// The terms are functions of (t, x) only.
struct DominatingData {
    GridField s0;
    ScalarTerm f;
    VectorTerm g;
    NoiseTerm h;
};

struct ObstacleSpec {
    /// S(t, x) when the obstacle is given directly.
    std::function<double(double t, const Point& x)> barrier;
    /// S' data; used for S = S' - gap and by the maximum-principle bracket.
    std::optional<DominatingData> dominating;
    bool from_dominating = false;
    double gap = 0.0;
};

/// M_t = m + int b ds + sum_j int sigma_j dB_j, spatially constant.
struct ItoProcessBoundary {
    double m = 0.0;
    std::function<double(double t)> drift = [](double) { return 0.0; };
    std::function<std::vector<double>(double t)> loadings = [](double) { return std::vector<double>{}; };
};

struct SPDEProblem {
    SpatialGrid grid;
    TimeGrid time;
    CoefficientField a;
    ScalarTerm f;
    VectorTerm g;
    NoiseTerm h;
    std::shared_ptr<const CovarianceModel> noise;
    std::optional<ObstacleSpec> obstacle;
    GridField xi;
    std::optional<ItoProcessBoundary> boundary;
    std::uint64_t seed = 0;

    std::size_t modes() const { return noise ? noise->modes() : 0; }
};

/// Shape and data checks: grid/field sizes, finite initial data, Dirichlet compatibility and
/// S_0 <= xi at interior nodes. Throws InvalidArgument / ShapeMismatch.
void validate_problem(const SPDEProblem& problem);

/// Contraction and maximum-principle gates from the declared constants, plus integrability flags
/// evaluated on the data at the grid times.
AssumptionReport validate_assumptions(const SPDEProblem& problem);

}  // namespace ospde
