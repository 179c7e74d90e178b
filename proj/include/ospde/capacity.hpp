#pragma once

#include <functional>
#include <limits>
#include <memory>
#include <vector>

#include "ospde/elliptic_operator.hpp"
#include "ospde/grid.hpp"
#include "ospde/linear_solvers.hpp"

namespace ospde {

/// Grids and operator shared by every potential computation.
struct PotentialSetup {
    SpatialGrid grid;
    TimeGrid time;
    CoefficientField a;
};

/// Discrete potential v_0..v_K with its measure: m_0 = w v_0 and
/// m_k = w ((I + dt A(t_k)) v_k - v_{k-1}) for k >= 1.
struct ParabolicPotential {
    FieldPath v;
    FieldPath measure;
    /// sup_k |v_k|^2 + sum_k dt (|v_k|^2 + |grad v_k|^2).
    double energy = 0.0;

    double total_mass() const;
};

/// Space-time set [t1, t2] x {mask}. A thin slice (t2 - t1 <= dt) occupies the nearest time level.
struct SpaceTimeCompact {
    double t1 = 0.0;
    double t2 = 0.0;
    std::function<bool(const Point&)> mask;
};

/// The per-step matrices I + dt A(t_k), shared when a does not depend on time.
class SystemCache {
public:
    explicit SystemCache(const PotentialSetup& setup);
    /// System at time level k >= 1.
    const ImplicitSystem& at(std::size_t k) const;

private:
    std::vector<std::shared_ptr<const ImplicitSystem>> systems_;
};

double k_norm_squared(const FieldPath& v, const PotentialSetup& setup);

/// Measure of a potential. Residuals in [-1e-10, 0) (relative to max(1, |v|_inf)) are set to zero;
/// anything more negative throws NotAPotential.
FieldPath regular_measure_from_potential(const FieldPath& v, const PotentialSetup& setup);
FieldPath regular_measure_from_potential(const FieldPath& v, const PotentialSetup& setup,
                                         const SystemCache& systems);

/// Penalised dominating potential: (I + dt A) v_k = v_{k-1} + dt n (u_k - v_k)^+, v_0 = u_0^+.
ParabolicPotential dominating_potential(const FieldPath& u, const PotentialSetup& setup, double penalty);

/// Node mask of the compact dilated by one cell along each axis, on one grid.
std::vector<bool> dilated_mask(const SpaceTimeCompact& compact, const SpatialGrid& grid);

/// Potential with obstacle 1 on the dilated compact and no constraint elsewhere. A penalty of
/// infinity solves the projected problem (LCP) instead of the penalised one.
ParabolicPotential smallest_potential_on_compact(const SpaceTimeCompact& compact, const PotentialSetup& setup,
                                                 double penalty = std::numeric_limits<double>::infinity(),
                                                 const LcpOptions& options = {});

struct CapacityLevel {
    std::size_t nodes = 0;   // per axis
    std::size_t steps = 0;
    double penalty = std::numeric_limits<double>::infinity();
    double mass = 0.0;
    /// |mass - previous mass|, NaN on the first level.
    double error_indicator = std::numeric_limits<double>::quiet_NaN();
    /// mass / |v|_K^2.
    double mass_energy_ratio = 0.0;
    double mass_outside = 0.0;
};

struct CapacityEstimate {
    std::vector<CapacityLevel> levels;
    double value = 0.0;  // finest level
    double error_indicator = std::numeric_limits<double>::quiet_NaN();
    bool monotone = false;
    /// Aitken extrapolation of the last three masses; NaN when the sequence is not monotone.
    double extrapolated = std::numeric_limits<double>::quiet_NaN();
};

struct RefinementLevel {
    std::size_t nodes = 33;
    std::size_t steps = 1000;
    double penalty = std::numeric_limits<double>::infinity();
};

/// Capacity over a refinement schedule on the box (0, L)^d with horizon T.
CapacityEstimate capacity_estimate(const SpaceTimeCompact& compact, std::size_t dim, double length, double horizon,
                                   const CoefficientField& a, const std::vector<RefinementLevel>& schedule);

struct DualityResidual {
    double measure_side = 0.0;
    double variational_side = 0.0;
    double relative = 0.0;
};

/// sum phi dnu against (phi_T, v_T) + sum_k dt [(-d_t phi, v_k) + E(phi_k, v_k)].
DualityResidual duality_pairing_check(const std::function<double(double, const Point&)>& phi,
                                      const std::function<double(double, const Point&)>& dphi_dt,
                                      const ParabolicPotential& v, const PotentialSetup& setup);

}  // namespace ospde
