#include "ospde/capacity.hpp"

#include <algorithm>
#include <cmath>

namespace ospde {

double ParabolicPotential::total_mass() const {
    double s = 0.0;
    for (const auto& slice : measure) {
        for (double v : slice.values()) s += v;
    }
    return s;
}

SystemCache::SystemCache(const PotentialSetup& s) {
    const std::size_t K = s.time.steps;
    systems_.resize(K + 1);
    for (std::size_t k = 1; k <= K; ++k) {
        if (!s.a.time_dependent && k > 1) {
            systems_[k] = systems_[1];
            continue;
        }
        systems_[k] = std::make_shared<const ImplicitSystem>(
            assemble_stiffness(s.a, s.time.time(k), s.grid, k == 1 || s.a.time_dependent), s.time.dt());
    }
}

const ImplicitSystem& SystemCache::at(std::size_t k) const {
    if (k == 0 || k >= systems_.size()) throw InvalidArgument("system index out of range");
    return *systems_[k];
}

double k_norm_squared(const FieldPath& v, const PotentialSetup& s) {
    double sup = 0.0, integral = 0.0;
    const double dt = s.time.dt();
    for (std::size_t k = 0; k < v.size(); ++k) {
        const double l2 = l2_inner(v[k], v[k], s.grid);
        sup = std::max(sup, l2);
        if (k + 1 < v.size()) integral += dt * (l2 + gradient_norm_squared(v[k], s.grid));
    }
    return sup + integral;
}

namespace {

GridField weighted(const Eigen::VectorXd& r, const SpatialGrid& grid, double scale) {
    GridField m(grid.node_count());
    const auto nodes = grid.interior_nodes();
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        double ri = r[static_cast<Eigen::Index>(i)];
        if (ri < 0.0) {
            if (ri < -1e-10 * scale) throw NotAPotential("measure has mass " + std::to_string(ri) + " < 0");
            ri = 0.0;
        }
        m[nodes[i]] = ri * grid.node_weight(nodes[i]);
    }
    return m;
}

double sup_abs(const FieldPath& v) {
    double s = 1.0;
    for (const auto& f : v) {
        for (double x : f.values()) s = std::max(s, std::abs(x));
    }
    return s;
}

}  // namespace

FieldPath regular_measure_from_potential(const FieldPath& v, const PotentialSetup& s) {
    return regular_measure_from_potential(v, s, SystemCache(s));
}

FieldPath regular_measure_from_potential(const FieldPath& v, const PotentialSetup& s, const SystemCache& systems) {
    if (v.size() != s.time.steps + 1) throw ShapeMismatch("potential must have K + 1 slices");
    const double scale = sup_abs(v);
    FieldPath m;
    m.push_back(weighted(restrict_interior(v[0], s.grid), s.grid, scale));
    for (std::size_t k = 1; k < v.size(); ++k) {
        const Eigen::VectorXd r =
            systems.at(k).residual(restrict_interior(v[k], s.grid), restrict_interior(v[k - 1], s.grid));
        m.push_back(weighted(r, s.grid, scale));
    }
    return m;
}

ParabolicPotential dominating_potential(const FieldPath& u, const PotentialSetup& s, double penalty) {
    if (!(penalty > 0.0)) throw InvalidArgument("penalty must be positive");
    if (u.size() != s.time.steps + 1) throw ShapeMismatch("u path must have K + 1 slices");
    const SystemCache systems(s);
    ParabolicPotential out;
    GridField v0(s.grid.node_count());
    for (std::size_t n : s.grid.interior_nodes()) v0[n] = std::max(0.0, u[0][n]);
    out.v.push_back(v0);
    const double c = penalty * s.time.dt();
    for (std::size_t k = 1; k <= s.time.steps; ++k) {
        const PenalizedResult r = solve_penalized(systems.at(k), restrict_interior(out.v.back(), s.grid),
                                                  restrict_interior(u[k], s.grid), c);
        out.v.push_back(extend_interior(r.solution, s.grid));
    }
    out.measure = regular_measure_from_potential(out.v, s, systems);
    out.energy = k_norm_squared(out.v, s);
    return out;
}

std::vector<bool> dilated_mask(const SpaceTimeCompact& compact, const SpatialGrid& grid) {
    std::vector<bool> base(grid.node_count(), false), out(grid.node_count(), false);
    if (!compact.mask) return out;
    for (std::size_t n = 0; n < grid.node_count(); ++n) base[n] = compact.mask(grid.coordinates(n));
    for (std::size_t n = 0; n < grid.node_count(); ++n) {
        if (!base[n]) continue;
        const auto idx = grid.multi_index(n);
        for (int di = -1; di <= 1; ++di) {
            for (int dj = (grid.dim() == 2 ? -1 : 0); dj <= (grid.dim() == 2 ? 1 : 0); ++dj) {
                const long i = static_cast<long>(idx[0]) + di, j = static_cast<long>(idx[1]) + dj;
                if (i < 0 || j < 0 || i >= static_cast<long>(grid.nodes_along(0)) ||
                    j >= static_cast<long>(grid.nodes_along(1))) {
                    continue;
                }
                out[static_cast<std::size_t>(i) + grid.nodes_along(0) * static_cast<std::size_t>(j)] = true;
            }
        }
    }
    for (std::size_t n = 0; n < grid.node_count(); ++n) out[n] = out[n] && !grid.is_boundary(n);
    return out;
}

namespace {

std::vector<bool> active_levels(const SpaceTimeCompact& c, const TimeGrid& time) {
    if (c.t1 > c.t2 || c.t1 < 0.0 || c.t2 > time.horizon) {
        throw InvalidArgument("compact interval must lie inside [0, T]");
    }
    std::vector<bool> on(time.steps + 1, false);
    const double dt = time.dt();
    bool any = false;
    for (std::size_t k = 0; k <= time.steps; ++k) {
        const double t = time.time(k);
        if (t >= c.t1 - 1e-12 * time.horizon && t <= c.t2 + 1e-12 * time.horizon) on[k] = any = true;
    }
    if (!any) {
        const auto k = static_cast<std::size_t>(std::lround(c.t1 / dt));
        on[std::min(k, time.steps)] = true;
    }
    return on;
}

}  // namespace

ParabolicPotential smallest_potential_on_compact(const SpaceTimeCompact& compact, const PotentialSetup& s,
                                                 double penalty, const LcpOptions& options) {
    const SystemCache systems(s);
    const std::vector<bool> mask = dilated_mask(compact, s.grid);
    const std::vector<bool> levels = active_levels(compact, s.time);
    const bool empty = std::none_of(mask.begin(), mask.end(), [](bool b) { return b; });
    const double ninf = -std::numeric_limits<double>::infinity();
    const auto nodes = s.grid.interior_nodes();

    Eigen::VectorXd obstacle(static_cast<Eigen::Index>(nodes.size()));
    for (std::size_t i = 0; i < nodes.size(); ++i) obstacle[static_cast<Eigen::Index>(i)] = mask[nodes[i]] ? 1.0 : ninf;

    ParabolicPotential out;
    GridField v0(s.grid.node_count());
    if (levels[0] && !empty) {
        for (std::size_t n : nodes) v0[n] = mask[n] ? 1.0 : 0.0;
    }
    out.v.push_back(v0);
    for (std::size_t k = 1; k <= s.time.steps; ++k) {
        const ImplicitSystem& B = systems.at(k);
        const Eigen::VectorXd rhs = restrict_interior(out.v.back(), s.grid);
        Eigen::VectorXd x;
        if (!levels[k] || empty) {
            x = B.solve(rhs);
        } else if (std::isinf(penalty)) {
            x = solve_lcp_psor(B, rhs, obstacle, B.solve(rhs), options).solution;
        } else {
            x = solve_penalized(B, rhs, obstacle, penalty * s.time.dt()).solution;
        }
        out.v.push_back(extend_interior(x, s.grid));
    }
    out.measure = regular_measure_from_potential(out.v, s, systems);
    out.energy = k_norm_squared(out.v, s);
    return out;
}

CapacityEstimate capacity_estimate(const SpaceTimeCompact& compact, std::size_t dim, double length, double horizon,
                                   const CoefficientField& a, const std::vector<RefinementLevel>& schedule) {
    if (schedule.empty()) throw InvalidArgument("capacity_estimate: empty schedule");
    CapacityEstimate out;
    for (const RefinementLevel& lvl : schedule) {
        const double extents[] = {length, length};
        const std::size_t nodes[] = {lvl.nodes, lvl.nodes};
        PotentialSetup s{build_grid(dim, extents, nodes), TimeGrid(horizon, lvl.steps), a};
        const ParabolicPotential v = smallest_potential_on_compact(compact, s, lvl.penalty);
        CapacityLevel row;
        row.nodes = lvl.nodes;
        row.steps = lvl.steps;
        row.penalty = lvl.penalty;
        row.mass = v.total_mass();
        row.mass_energy_ratio = v.energy > 0.0 ? row.mass / v.energy : 0.0;
        const std::vector<bool> mask = dilated_mask(compact, s.grid);
        for (const auto& slice : v.measure) {
            for (std::size_t n = 0; n < s.grid.node_count(); ++n) {
                if (!mask[n]) row.mass_outside += slice[n];
            }
        }
        if (!out.levels.empty()) row.error_indicator = std::abs(row.mass - out.levels.back().mass);
        out.levels.push_back(row);
    }
    const auto& L = out.levels;
    out.value = L.back().mass;
    out.error_indicator = L.back().error_indicator;
    bool monotone = L.size() >= 2;
    for (std::size_t i = 2; i < L.size(); ++i) {
        const double d1 = L[i - 1].mass - L[i - 2].mass, d2 = L[i].mass - L[i - 1].mass;
        monotone = monotone && d1 * d2 >= 0.0 && L[i].error_indicator <= L[i - 1].error_indicator;
    }
    out.monotone = monotone;
    if (monotone && L.size() >= 3) {
        const double m1 = L[L.size() - 3].mass, m2 = L[L.size() - 2].mass, m3 = L.back().mass;
        const double denom = (m3 - m2) - (m2 - m1);
        out.extrapolated = denom != 0.0 ? m3 - (m3 - m2) * (m3 - m2) / denom : m3;
    }
    return out;
}

DualityResidual duality_pairing_check(const std::function<double(double, const Point&)>& phi,
                                      const std::function<double(double, const Point&)>& dphi_dt,
                                      const ParabolicPotential& v, const PotentialSetup& s) {
    const std::size_t K = s.time.steps;
    if (v.v.size() != K + 1 || v.measure.size() != K + 1) throw ShapeMismatch("potential does not match the time grid");
    const double dt = s.time.dt();
    auto slice = [&](const std::function<double(double, const Point&)>& fn, double t) {
        GridField out = sample_field(s.grid, [&](const Point& x) { return fn(t, x); });
        for (std::size_t n = 0; n < s.grid.node_count(); ++n) {
            if (s.grid.is_boundary(n)) out[n] = 0.0;
        }
        return out;
    };
    DualityResidual r;
    for (std::size_t k = 0; k <= K; ++k) {
        const GridField p = slice(phi, s.time.time(k));
        for (std::size_t n = 0; n < s.grid.node_count(); ++n) r.measure_side += p[n] * v.measure[k][n];
        if (k == K) {
            r.variational_side += l2_inner(p, v.v[k], s.grid);
        } else {
            const GridField dp = slice(dphi_dt, s.time.time(k));
            r.variational_side += dt * (-l2_inner(dp, v.v[k], s.grid) + dirichlet_form(s.a, s.time.time(k), s.grid, p, v.v[k]));
        }
    }
    const double scale = std::max({std::abs(r.measure_side), std::abs(r.variational_side), 1e-300});
    r.relative = (r.measure_side == 0.0 && r.variational_side == 0.0)
                     ? 0.0
                     : std::abs(r.measure_side - r.variational_side) / scale;
    return r;
}

}  // namespace ospde
