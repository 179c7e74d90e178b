#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "ospde/expression.hpp"
#include "ospde/grid.hpp"
#include "ospde/noise.hpp"

namespace ospde {

/// Where a nonlinear term is evaluated. `site` is a node id, or a cell id when `on_cell` is set.
/// Only the current slice and step index are visible, which keeps evaluators predictable.
struct TermPoint {
    double t = 0.0;
    std::size_t step = 0;
    std::size_t site = 0;
    bool on_cell = false;
    Point x{0.0, 0.0};
    double y = 0.0;
    Gradient z{0.0, 0.0};
};

/// f(t, x, y, z) with |f(y, z) - f(y', z')| <= C (|y - y'| + |z - z'|).
struct ScalarTerm {
    std::string name = "zero";
    std::function<double(const TermPoint&)> eval = [](const TermPoint&) { return 0.0; };
    double C = 0.0;
    bool state_free = true;

    double operator()(const TermPoint& p) const { return eval(p); }
};

/// g(t, x, y, z) in R^d with |g(y, z) - g(y', z')| <= C |y - y'| + alpha |z - z'|.
struct VectorTerm {
    std::string name = "zero";
    std::function<Gradient(const TermPoint&)> eval = [](const TermPoint&) { return Gradient{0.0, 0.0}; };
    double C = 0.0;
    double alpha = 0.0;
    bool state_free = true;

    Gradient operator()(const TermPoint& p) const { return eval(p); }
};

/// h(t, x, y, z) = (h_1, ..., h_N) with |h(y, z) - h(y', z')| <= C |y - y'| + beta |z - z'|,
/// |h|^2 being the sum over modes. Modes beyond the noise truncation are zero.
struct NoiseTerm {
    std::string name = "zero";
    std::size_t modes = 0;
    std::function<void(const TermPoint&, std::span<double>)> eval = [](const TermPoint&, std::span<double> out) {
        for (double& v : out) v = 0.0;
    };
    double C = 0.0;
    double beta = 0.0;
    bool state_free = true;

    std::vector<double> operator()(const TermPoint& p) const {
        std::vector<double> out(modes, 0.0);
        eval(p, out);
        return out;
    }
};

ScalarTerm zero_scalar();
VectorTerm zero_vector();
NoiseTerm zero_noise(std::size_t modes);

/// cy y + cz (z_1 + ... + z_d).
ScalarTerm linear_scalar(double cy, double cz, std::size_t dim);
ScalarTerm constant_scalar(double value);
/// amplitude sin(y).
ScalarTerm sin_reaction(double amplitude);
/// User expression; C is declared, not inferred.
ScalarTerm expression_scalar(const Expression& e, double C);

/// g_i = cy y + cz z_i.
VectorTerm linear_vector(double cy, double cz, std::size_t dim);
VectorTerm expression_vector(const Expression& e1, const Expression& e2, std::size_t dim, double C,
                             double alpha);

/// h_j(t, x) = s(t, x) sqrt(lambda_j) e_j(x): the noise s dW. Evaluated at nodes only.
NoiseTerm additive_noise(std::shared_ptr<const CovarianceModel> model, const Expression& intensity);
/// h_j(t, x, y, z) = sqrt(lambda_j) htilde(t, x, y, z) e_j(x). The declared constants of htilde are
/// scaled by (sum_j lambda_j |e_j|_inf^2)^(1/2).
NoiseTerm multiplicative_htilde(std::shared_ptr<const CovarianceModel> model, const Expression& htilde,
                                double C_tilde, double beta_tilde);
/// h_j(t, x) = field_j(x) for explicitly given per-mode fields (state free).
NoiseTerm tabulated_noise(std::vector<GridField> fields);

struct AssumptionReport {
    double lambda = 0.0;
    double alpha = 0.0;
    double beta = 0.0;
    /// 2 alpha + beta^2 < 2 lambda
    double contraction_lhs = 0.0;
    bool h_contraction = false;
    /// alpha + beta^2 / 2 + 72 beta^2 < lambda
    double mp_lhs = 0.0;
    bool mp_condition = false;
    /// Integrability of the data, evaluated on supplied fields (filled by validate_assumptions).
    bool integrability_I = true;
    bool integrability_HI2p = true;
    bool integrability_HOinf = true;
    std::vector<std::string> notes;
};

/// Pure arithmetic on the declared constants.
AssumptionReport check_constants(double lambda, double alpha, double beta);

struct LipschitzEstimate {
    /// max |dT| / |dy| over samples with z = z'.
    double y_part = 0.0;
    /// max |dT| / |dz| over samples with y = y'.
    double z_part = 0.0;
    std::size_t samples = 0;
};

/// Sampled difference ratios at random nodes, times in [0, horizon], y in [-2, 2], z in [-2, 2]^d.
/// Throws InvalidArgument for a zero budget or a non-finite evaluation.
LipschitzEstimate estimate_lipschitz(const ScalarTerm& term, const SpatialGrid& grid, double horizon,
                                     std::size_t budget, std::uint64_t seed);
LipschitzEstimate estimate_lipschitz(const VectorTerm& term, const SpatialGrid& grid, double horizon,
                                     std::size_t budget, std::uint64_t seed);
LipschitzEstimate estimate_lipschitz(const NoiseTerm& term, const SpatialGrid& grid, double horizon,
                                     std::size_t budget, std::uint64_t seed);

/// A simulated S' path and the grid it lives on.
struct ShiftPath {
    std::shared_ptr<const FieldPath> path;
    SpatialGrid grid;

    double value(const TermPoint& p) const;
    Gradient gradient(const TermPoint& p) const;
};

struct ShiftedTerms {
    ScalarTerm f;
    VectorTerm g;
    NoiseTerm h;
};

/// fbar(y, z) = f(y + S', z + grad S') - f', and likewise for g and h.
ShiftedTerms shift_coefficients(const ScalarTerm& f, const VectorTerm& g, const NoiseTerm& h,
                                const ShiftPath& s_prime, const ScalarTerm& f_prime,
                                const VectorTerm& g_prime, const NoiseTerm& h_prime);
/// Inverse of shift_coefficients: f(y, z) = fbar(y - S', z - grad S') + f'.
ShiftedTerms unshift_coefficients(const ScalarTerm& fbar, const VectorTerm& gbar, const NoiseTerm& hbar,
                                  const ShiftPath& s_prime, const ScalarTerm& f_prime,
                                  const VectorTerm& g_prime, const NoiseTerm& h_prime);

/// The term at y = 0, z = 0 on every node of one slice.
GridField zero_point_field(const ScalarTerm& f, const SpatialGrid& grid, double t, std::size_t step);
/// |g(0, 0)|^2 and |h(0, 0)|^2 at every node.
GridField zero_point_square(const VectorTerm& g, const SpatialGrid& grid, double t, std::size_t step);
GridField zero_point_square(const NoiseTerm& h, const SpatialGrid& grid, double t, std::size_t step);

}  // namespace ospde
