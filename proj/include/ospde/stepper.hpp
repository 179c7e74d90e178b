#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "ospde/linear_solvers.hpp"
#include "ospde/problem.hpp"

namespace ospde {

enum class SchemeKind { unconstrained, penalized, projected };

std::string to_string(SchemeKind kind);
SchemeKind parse_scheme_kind(const std::string& name);

struct Scheme {
    SchemeKind kind = SchemeKind::unconstrained;
    double penalty = 1e3;
    LcpOptions lcp;
};

struct SolutionPath {
    FieldPath u;          // u_0 = xi, ..., u_K
    FieldPath obstacle;   // S_k, empty without obstacle
    FieldPath dominating; // S'_k when simulated
    std::vector<double> boundary;  // M_k, empty for a null boundary
    double dt = 0.0;
    Scheme scheme;
    std::uint64_t seed = 0;
    std::uint64_t path = 0;
    std::vector<double> complementarity;  // per step, projected scheme
    std::vector<std::size_t> sweeps;
};

/// Node masses nu[k][node] >= 0, k = 0..K; entry k + 1 belongs to the step t_k -> t_{k+1}.
struct ReflectionMeasure {
    FieldPath mass;

    double total() const;
};

struct StepResult {
    GridField u;
    GridField nu;  // node masses of this step (zero without obstacle)
    std::size_t sweeps = 0;
    double complementarity = 0.0;
};

/// Boundary values around one step; zero for a null Dirichlet condition.
struct BoundaryStep {
    double now = 0.0;
    double next = 0.0;
};

/// Semi-implicit Euler-Maruyama integrator:
///   (I + dt A(t_{k+1})) u_{k+1} = u_k + dt [f_k + D(g_k)] + sum_j h_{j,k} dB_j (+ obstacle force).
/// f and h are evaluated at nodes with central-difference gradients; g on cells with the cell average
/// and forward-difference gradient. The system matrices are factorised once per distinct time.
class Stepper {
public:
    explicit Stepper(SPDEProblem problem);

    const SPDEProblem& problem() const { return problem_; }
    const ImplicitSystem& system(std::size_t step) const;

    /// Interior right-hand side without obstacle force.
    Eigen::VectorXd right_hand_side(const GridField& u, std::size_t step, std::span<const double> draws,
                                    const BoundaryStep& m = {}) const;

    GridField step_unconstrained(const GridField& u, std::size_t step, std::span<const double> draws,
                                 const BoundaryStep& m = {}) const;
    /// Explicit penalty n (u_k - S_k)^- with nu = n (u_k - S_k)^- dt w.
    StepResult step_obstacle_penalized(const GridField& u, std::size_t step, std::span<const double> draws,
                                       const GridField& obstacle_now, double penalty,
                                       const BoundaryStep& m = {}) const;
    /// LCP at the new level with nu = w r on the contact set.
    StepResult step_obstacle_projected(const GridField& u, std::size_t step, std::span<const double> draws,
                                       const GridField& obstacle_next, const LcpOptions& options = {},
                                       const BoundaryStep& m = {}) const;

    /// One step of the dominating linear SPDE driven by the same draws.
    GridField step_dominating(const GridField& s, std::size_t step, std::span<const double> draws) const;

    /// Full trajectory for one path; deterministic in (seed, path).
    std::pair<SolutionPath, ReflectionMeasure> solve(const Scheme& scheme, std::uint64_t path) const;

    /// Obstacle values on every node at step k, given the dominating value when needed.
    GridField obstacle_field(std::size_t step, const GridField* dominating) const;

private:
    GridField assemble_full(const Eigen::VectorXd& interior, double boundary) const;

    SPDEProblem problem_;
    std::vector<std::shared_ptr<const ImplicitSystem>> systems_;
};

/// Eigenvalue of the 1D discrete Dirichlet Laplacian for sine mode m: (4 / h^2) sin^2(m pi h / (2 L)).
double discrete_sine_eigenvalue(std::size_t m, const SpatialGrid& grid);
/// sqrt(2 / L) sin(m pi x / L) on all nodes.
GridField sine_mode(std::size_t m, const SpatialGrid& grid);

/// Mode-wise exact update for a = I on an interval with state-free f, g, h:
///   u_m <- e^{-mu dt} u_m + (1 - e^{-mu dt}) / mu F_m + c_m sqrt((1 - e^{-2 mu dt}) / (2 mu dt)) dB,
/// mu = (m pi / L)^2, driven by the same draws as the scheme. Uses modes 1..J (J <= interior count).
FieldPath spectral_oracle_linear(const SPDEProblem& problem, std::size_t modes, std::uint64_t path);

}  // namespace ospde
