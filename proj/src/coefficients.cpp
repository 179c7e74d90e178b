#include "ospde/coefficients.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace ospde {

namespace {

Variables variables(const TermPoint& p) {
    return {p.t, p.x[0], p.x[1], p.y, p.z[0], p.z[1]};
}

double sup_sum(const CovarianceModel& m) {
    return check_sup_condition(m).value;
}

}  // namespace

ScalarTerm zero_scalar() { return {}; }
VectorTerm zero_vector() { return {}; }

NoiseTerm zero_noise(std::size_t modes) {
    NoiseTerm h;
    h.modes = modes;
    return h;
}

ScalarTerm linear_scalar(double cy, double cz, std::size_t dim) {
    ScalarTerm f;
    f.name = "linear";
    f.eval = [cy, cz, dim](const TermPoint& p) {
        return cy * p.y + cz * (dim == 2 ? p.z[0] + p.z[1] : p.z[0]);
    };
    f.C = std::max(std::abs(cy), std::abs(cz) * std::sqrt(static_cast<double>(dim)));
    f.state_free = cy == 0.0 && cz == 0.0;
    return f;
}

ScalarTerm constant_scalar(double value) {
    ScalarTerm f;
    f.name = "constant";
    f.eval = [value](const TermPoint&) { return value; };
    return f;
}

ScalarTerm sin_reaction(double amplitude) {
    ScalarTerm f;
    f.name = "sin-reaction";
    f.eval = [amplitude](const TermPoint& p) { return amplitude * std::sin(p.y); };
    f.C = std::abs(amplitude);
    f.state_free = amplitude == 0.0;
    return f;
}

ScalarTerm expression_scalar(const Expression& e, double C) {
    ScalarTerm f;
    f.name = "expression(" + e.source() + ")";
    f.eval = [e](const TermPoint& p) { return e(variables(p)); };
    f.C = C;
    f.state_free = !e.depends_on_state();
    return f;
}

VectorTerm linear_vector(double cy, double cz, std::size_t dim) {
    VectorTerm g;
    g.name = "linear";
    g.eval = [cy, cz, dim](const TermPoint& p) {
        return Gradient{cy * p.y + cz * p.z[0], dim == 2 ? cy * p.y + cz * p.z[1] : 0.0};
    };
    g.C = std::abs(cy) * std::sqrt(static_cast<double>(dim));
    g.alpha = std::abs(cz);
    g.state_free = cy == 0.0 && cz == 0.0;
    return g;
}

VectorTerm expression_vector(const Expression& e1, const Expression& e2, std::size_t dim, double C,
                             double alpha) {
    VectorTerm g;
    g.name = "expression(" + e1.source() + (dim == 2 ? ", " + e2.source() : std::string()) + ")";
    g.eval = [e1, e2, dim](const TermPoint& p) {
        const Variables v = variables(p);
        return Gradient{e1(v), dim == 2 ? e2(v) : 0.0};
    };
    g.C = C;
    g.alpha = alpha;
    g.state_free = !e1.depends_on_state() && !(dim == 2 && e2.depends_on_state());
    return g;
}

NoiseTerm additive_noise(std::shared_ptr<const CovarianceModel> model, const Expression& intensity) {
    NoiseTerm h;
    h.name = "additive-noise(" + intensity.source() + ")";
    h.modes = model->modes();
    if (intensity.depends_on_state()) throw InvalidArgument("additive noise intensity may not depend on y or z");
    h.eval = [model, intensity](const TermPoint& p, std::span<double> out) {
        if (p.on_cell) throw InvalidArgument("noise terms are evaluated at nodes");
        const double s = intensity(variables(p));
        for (std::size_t j = 0; j < out.size(); ++j) {
            out[j] = s * std::sqrt(model->eigenvalues[j]) * model->eigenfunctions[j][p.site];
        }
    };
    return h;
}

NoiseTerm multiplicative_htilde(std::shared_ptr<const CovarianceModel> model, const Expression& htilde,
                                double C_tilde, double beta_tilde) {
    NoiseTerm h;
    h.name = "multiplicative-htilde(" + htilde.source() + ")";
    h.modes = model->modes();
    const double scale = std::sqrt(sup_sum(*model));
    h.C = C_tilde * scale;
    h.beta = beta_tilde * scale;
    h.state_free = !htilde.depends_on_state();
    h.eval = [model, htilde](const TermPoint& p, std::span<double> out) {
        if (p.on_cell) throw InvalidArgument("noise terms are evaluated at nodes");
        const double s = htilde(variables(p));
        for (std::size_t j = 0; j < out.size(); ++j) {
            out[j] = std::sqrt(model->eigenvalues[j]) * s * model->eigenfunctions[j][p.site];
        }
    };
    return h;
}

NoiseTerm tabulated_noise(std::vector<GridField> fields) {
    NoiseTerm h;
    h.name = "tabulated";
    h.modes = fields.size();
    auto shared = std::make_shared<const std::vector<GridField>>(std::move(fields));
    h.eval = [shared](const TermPoint& p, std::span<double> out) {
        for (std::size_t j = 0; j < out.size(); ++j) out[j] = (*shared)[j][p.site];
    };
    return h;
}

AssumptionReport check_constants(double lambda, double alpha, double beta) {
    AssumptionReport r;
    r.lambda = lambda;
    r.alpha = alpha;
    r.beta = beta;
    r.contraction_lhs = 2.0 * alpha + beta * beta;
    r.h_contraction = r.contraction_lhs < 2.0 * lambda;
    r.mp_lhs = alpha + beta * beta / 2.0 + 72.0 * beta * beta;
    r.mp_condition = r.mp_lhs < lambda;
    return r;
}

namespace {

struct Sampler {
    Sampler(const SpatialGrid& grid, double horizon, std::uint64_t seed)
        : grid(grid), horizon(horizon), rng(seed) {}

    TermPoint draw() {
        std::uniform_int_distribution<std::size_t> node(0, grid.node_count() - 1);
        std::uniform_real_distribution<double> unit(-2.0, 2.0);
        TermPoint p;
        p.site = node(rng);
        p.x = grid.coordinates(p.site);
        p.t = horizon * 0.5 * (unit(rng) + 2.0) / 2.0;
        p.y = unit(rng);
        p.z = {unit(rng), grid.dim() == 2 ? unit(rng) : 0.0};
        return p;
    }

    double unit() { return std::uniform_real_distribution<double>(-2.0, 2.0)(rng); }

    const SpatialGrid& grid;
    double horizon;
    std::mt19937_64 rng;
};

template <class Distance>
LipschitzEstimate estimate(const SpatialGrid& grid, double horizon, std::size_t budget, std::uint64_t seed,
                           Distance distance) {
    if (budget == 0) throw InvalidArgument("estimate_lipschitz: budget must be at least 1");
    Sampler s(grid, horizon, seed);
    LipschitzEstimate out;
    for (std::size_t i = 0; i < budget; ++i) {
        TermPoint p = s.draw();
        TermPoint q = p;
        q.y = s.unit();
        if (q.y != p.y) out.y_part = std::max(out.y_part, distance(p, q) / std::abs(q.y - p.y));
        TermPoint r = p;
        r.z = {s.unit(), grid.dim() == 2 ? s.unit() : 0.0};
        const double dz = std::hypot(r.z[0] - p.z[0], r.z[1] - p.z[1]);
        if (dz > 0.0) out.z_part = std::max(out.z_part, distance(p, r) / dz);
        ++out.samples;
    }
    return out;
}

void require_finite(double v) {
    if (!std::isfinite(v)) throw InvalidArgument("estimate_lipschitz: evaluator returned a non-finite value");
}

}  // namespace

LipschitzEstimate estimate_lipschitz(const ScalarTerm& term, const SpatialGrid& grid, double horizon,
                                     std::size_t budget, std::uint64_t seed) {
    return estimate(grid, horizon, budget, seed, [&](const TermPoint& a, const TermPoint& b) {
        const double fa = term(a), fb = term(b);
        require_finite(fa);
        require_finite(fb);
        return std::abs(fa - fb);
    });
}

LipschitzEstimate estimate_lipschitz(const VectorTerm& term, const SpatialGrid& grid, double horizon,
                                     std::size_t budget, std::uint64_t seed) {
    return estimate(grid, horizon, budget, seed, [&](const TermPoint& a, const TermPoint& b) {
        const Gradient ga = term(a), gb = term(b);
        for (double v : {ga[0], ga[1], gb[0], gb[1]}) require_finite(v);
        return std::hypot(ga[0] - gb[0], ga[1] - gb[1]);
    });
}

LipschitzEstimate estimate_lipschitz(const NoiseTerm& term, const SpatialGrid& grid, double horizon,
                                     std::size_t budget, std::uint64_t seed) {
    return estimate(grid, horizon, budget, seed, [&](const TermPoint& a, const TermPoint& b) {
        const auto ha = term(a), hb = term(b);
        double s = 0.0;
        for (std::size_t j = 0; j < ha.size(); ++j) {
            require_finite(ha[j]);
            require_finite(hb[j]);
            s += (ha[j] - hb[j]) * (ha[j] - hb[j]);
        }
        return std::sqrt(s);
    });
}

double ShiftPath::value(const TermPoint& p) const {
    if (p.step >= path->size()) throw ShapeMismatch("shifted term evaluated beyond the simulated S' path");
    const GridField& s = (*path)[p.step];
    if (s.size() != grid.node_count()) throw ShapeMismatch("S' path does not match the grid");
    return p.on_cell ? cell_average_at(s, grid, p.site) : s[p.site];
}

Gradient ShiftPath::gradient(const TermPoint& p) const {
    if (p.step >= path->size()) throw ShapeMismatch("shifted term evaluated beyond the simulated S' path");
    const GridField& s = (*path)[p.step];
    return p.on_cell ? cell_gradient_at(s, grid, p.site) : node_gradient_at(s, grid, p.site);
}

namespace {

TermPoint moved(const TermPoint& p, const ShiftPath& s, double sign) {
    TermPoint q = p;
    const Gradient gs = s.gradient(p);
    q.y += sign * s.value(p);
    q.z = {p.z[0] + sign * gs[0], p.z[1] + sign * gs[1]};
    return q;
}

ShiftedTerms shift(const ScalarTerm& f, const VectorTerm& g, const NoiseTerm& h, const ShiftPath& s,
                   const ScalarTerm& fp, const VectorTerm& gp, const NoiseTerm& hp, double sign) {
    ShiftedTerms out;
    out.f = f;
    out.f.name = (sign > 0 ? "shifted(" : "unshifted(") + f.name + ")";
    out.f.eval = [f, fp, s, sign](const TermPoint& p) { return f(moved(p, s, sign)) - sign * fp(p); };
    out.f.state_free = f.state_free;

    out.g = g;
    out.g.name = (sign > 0 ? "shifted(" : "unshifted(") + g.name + ")";
    out.g.eval = [g, gp, s, sign](const TermPoint& p) {
        const Gradient a = g(moved(p, s, sign));
        const Gradient b = gp(p);
        return Gradient{a[0] - sign * b[0], a[1] - sign * b[1]};
    };

    out.h = h;
    out.h.name = (sign > 0 ? "shifted(" : "unshifted(") + h.name + ")";
    out.h.eval = [h, hp, s, sign](const TermPoint& p, std::span<double> o) {
        h.eval(moved(p, s, sign), o);
        std::vector<double> b(o.size(), 0.0);
        if (hp.modes > 0) hp.eval(p, std::span<double>(b.data(), std::min(b.size(), hp.modes)));
        for (std::size_t j = 0; j < o.size(); ++j) o[j] -= sign * b[j];
    };
    return out;
}

}  // namespace

ShiftedTerms shift_coefficients(const ScalarTerm& f, const VectorTerm& g, const NoiseTerm& h,
                                const ShiftPath& s_prime, const ScalarTerm& f_prime,
                                const VectorTerm& g_prime, const NoiseTerm& h_prime) {
    return shift(f, g, h, s_prime, f_prime, g_prime, h_prime, 1.0);
}

ShiftedTerms unshift_coefficients(const ScalarTerm& fbar, const VectorTerm& gbar, const NoiseTerm& hbar,
                                  const ShiftPath& s_prime, const ScalarTerm& f_prime,
                                  const VectorTerm& g_prime, const NoiseTerm& h_prime) {
    return shift(fbar, gbar, hbar, s_prime, f_prime, g_prime, h_prime, -1.0);
}

GridField zero_point_field(const ScalarTerm& f, const SpatialGrid& grid, double t, std::size_t step) {
    GridField out(grid.node_count());
    for (std::size_t n = 0; n < grid.node_count(); ++n) {
        TermPoint p;
        p.t = t;
        p.step = step;
        p.site = n;
        p.x = grid.coordinates(n);
        out[n] = f(p);
    }
    return out;
}

GridField zero_point_square(const VectorTerm& g, const SpatialGrid& grid, double t, std::size_t step) {
    GridField out(grid.node_count());
    for (std::size_t n = 0; n < grid.node_count(); ++n) {
        TermPoint p;
        p.t = t;
        p.step = step;
        p.site = n;
        p.x = grid.coordinates(n);
        const Gradient v = g(p);
        out[n] = v[0] * v[0] + v[1] * v[1];
    }
    return out;
}

GridField zero_point_square(const NoiseTerm& h, const SpatialGrid& grid, double t, std::size_t step) {
    GridField out(grid.node_count());
    std::vector<double> buf(h.modes, 0.0);
    for (std::size_t n = 0; n < grid.node_count(); ++n) {
        TermPoint p;
        p.t = t;
        p.step = step;
        p.site = n;
        p.x = grid.coordinates(n);
        h.eval(p, buf);
        double s = 0.0;
        for (double v : buf) s += v * v;
        out[n] = s;
    }
    return out;
}

}  // namespace ospde
