#include "ospde/problem.hpp"

#include <cmath>
#include <sstream>

namespace ospde {

void validate_problem(const SPDEProblem& p) {
    const std::size_t n = p.grid.node_count();
    if (n == 0) throw InvalidArgument("problem has no grid");
    if (p.a.dim != p.grid.dim()) throw ShapeMismatch("coefficient dimension differs from the grid");
    if (p.xi.size() != n) throw ShapeMismatch("initial field does not match the grid");
    if (p.h.modes != p.modes()) throw ShapeMismatch("h has a different number of modes than the noise model");
    const double m = p.boundary ? p.boundary->m : 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        if (!std::isfinite(p.xi[i])) throw InvalidArgument("initial field has non-finite entries");
        if (p.grid.is_boundary(i) && std::abs(p.xi[i] - m) > 1e-12) {
            throw InvalidArgument("initial field must equal the boundary value on boundary nodes");
        }
    }
    if (!p.obstacle) return;
    const ObstacleSpec& o = *p.obstacle;
    if (o.from_dominating && !o.dominating) throw InvalidArgument("obstacle S = S' - gap needs dominating data");
    if (!o.from_dominating && !o.barrier) throw InvalidArgument("obstacle needs a barrier or dominating data");
    if (o.dominating) {
        const DominatingData& d = *o.dominating;
        if (d.s0.size() != n) throw ShapeMismatch("S'_0 does not match the grid");
        if (d.h.modes != 0 && d.h.modes != p.modes()) throw ShapeMismatch("h' modes differ from the noise model");
        if (!d.f.state_free || !d.g.state_free || !d.h.state_free) {
            throw InvalidArgument("f', g', h' must not depend on the solution");
        }
    }
    for (std::size_t node : p.grid.interior_nodes()) {
        const Point x = p.grid.coordinates(node);
        const double s0 = o.from_dominating ? o.dominating->s0[node] - o.gap : o.barrier(0.0, x);
        if (s0 > p.xi[node] + 1e-12) {
            std::ostringstream msg;
            msg << "obstacle exceeds the initial field at x=(" << x[0] << ", " << x[1] << "): S_0=" << s0
                << " > xi=" << p.xi[node];
            throw InvalidArgument(msg.str());
        }
    }
}

AssumptionReport validate_assumptions(const SPDEProblem& p) {
    AssumptionReport r = check_constants(p.a.lambda, p.g.alpha, p.h.beta);
    auto finite_data = [&](const ScalarTerm& f, const VectorTerm& g, const NoiseTerm& h) {
        for (std::size_t k = 0; k <= p.time.steps; ++k) {
            const double t = p.time.time(k);
            for (const GridField& field : {zero_point_field(f, p.grid, t, k), zero_point_square(g, p.grid, t, k),
                                           zero_point_square(h, p.grid, t, k)}) {
                for (double v : field.values()) {
                    if (!std::isfinite(v)) return false;
                }
            }
        }
        return true;
    };
    bool xi_finite = true;
    for (double v : p.xi.values()) xi_finite = xi_finite && std::isfinite(v);
    r.integrability_I = xi_finite && finite_data(p.f, p.g, p.h);
    r.integrability_HI2p = r.integrability_I;
    r.integrability_HOinf = true;
    if (p.obstacle && p.obstacle->dominating) {
        const DominatingData& d = *p.obstacle->dominating;
        bool ok = true;
        for (double v : d.s0.values()) ok = ok && std::isfinite(v);
        r.integrability_HOinf = ok && finite_data(d.f, d.g, d.h);
    }
    if (!r.h_contraction) r.notes.push_back("2 alpha + beta^2 >= 2 lambda: uniqueness is not certified");
    if (!r.mp_condition) {
        r.notes.push_back("alpha + beta^2/2 + 72 beta^2 >= lambda: maximum-principle checks are disabled");
    }
    return r;
}

}  // namespace ospde
