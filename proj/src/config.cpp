#include "ospde/config.hpp"

#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <map>
#include <numbers>
#include <set>
#include <sstream>

#include "ospde/csv.hpp"

namespace ospde {

std::size_t edit_distance(const std::string& a, const std::string& b) {
    std::vector<std::size_t> row(b.size() + 1);
    for (std::size_t j = 0; j <= b.size(); ++j) row[j] = j;
    for (std::size_t i = 1; i <= a.size(); ++i) {
        std::size_t diag = row[0];
        row[0] = i;
        for (std::size_t j = 1; j <= b.size(); ++j) {
            const std::size_t up = row[j];
            row[j] = std::min({row[j] + 1, row[j - 1] + 1, diag + (a[i - 1] == b[j - 1] ? 0 : 1)});
            diag = up;
        }
    }
    return row[b.size()];
}

const std::vector<std::string>& known_checks() {
    static const std::vector<std::string> names = {"skorohod",          "comparison",  "ito_balance",
                                                   "energy_estimate",   "weak_residual",
                                                   "maximum_principle", "assumptions"};
    return names;
}

namespace {

std::string nearest(const std::string& key, const std::vector<std::string>& options) {
    std::string best;
    std::size_t d = std::string::npos;
    for (const auto& o : options) {
        const std::size_t e = edit_distance(key, o);
        if (e < d) {
            d = e;
            best = o;
        }
    }
    return best;
}

class Section {
public:
    Section(YAML::Node node, std::string path, std::vector<std::string>& errors, std::vector<std::string> allowed)
        : node_(node), path_(std::move(path)), errors_(&errors), allowed_(std::move(allowed)) {
        if (node_ && !node_.IsNull() && !node_.IsMap()) {
            error("expected a mapping");
            node_ = YAML::Node();
            return;
        }
        if (!node_ || node_.IsNull()) return;
        for (const auto& kv : node_) {
            const std::string key = kv.first.as<std::string>();
            if (std::find(allowed_.begin(), allowed_.end(), key) == allowed_.end()) {
                std::string msg = prefix(key) + ": unknown key";
                if (!allowed_.empty()) msg += " (did you mean '" + nearest(key, allowed_) + "'?)";
                errors_->push_back(msg);
            }
        }
    }

    bool present() const { return node_ && node_.IsMap(); }
    bool has(const std::string& key) const { return present() && node_[key] && !node_[key].IsNull(); }
    YAML::Node raw(const std::string& key) const { return present() ? node_[key] : YAML::Node(); }
    std::string prefix(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }
    void error(const std::string& msg) const { errors_->push_back((path_.empty() ? "<root>" : path_) + ": " + msg); }
    void error(const std::string& key, const std::string& msg) const { errors_->push_back(prefix(key) + ": " + msg); }

    Section child(const std::string& key, std::vector<std::string> allowed) const {
        return Section(raw(key), prefix(key), *errors_, std::move(allowed));
    }

    double number(const std::string& key, double fallback) const {
        if (!has(key)) return fallback;
        return to_number(raw(key), prefix(key), fallback);
    }

    double to_number(const YAML::Node& n, const std::string& where, double fallback) const {
        if (!n.IsScalar()) {
            errors_->push_back(where + ": expected a number");
            return fallback;
        }
        const std::string s = n.Scalar();
        std::string t = s;
        std::transform(t.begin(), t.end(), t.begin(), [](unsigned char c) { return std::tolower(c); });
        if (t == "inf" || t == ".inf" || t == "infinity" || t == "+inf") return std::numeric_limits<double>::infinity();
        char* end = nullptr;
        const double v = std::strtod(s.c_str(), &end);
        if (s.empty() || end != s.c_str() + s.size() || !std::isfinite(v)) {
            errors_->push_back(where + ": expected a number, got '" + s + "'");
            return fallback;
        }
        return v;
    }

    std::uint64_t unsigned_integer(const std::string& key, std::uint64_t fallback) const {
        if (!has(key)) return fallback;
        return to_unsigned(raw(key), prefix(key), fallback);
    }

    std::uint64_t to_unsigned(const YAML::Node& n, const std::string& where, std::uint64_t fallback) const {
        if (!n.IsScalar()) {
            errors_->push_back(where + ": expected a nonnegative integer");
            return fallback;
        }
        const std::string& s = n.Scalar();
        std::uint64_t v = 0;
        const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
        if (ec != std::errc() || ptr != s.data() + s.size()) {
            errors_->push_back(where + ": expected a nonnegative integer, got '" + s + "'");
            return fallback;
        }
        return v;
    }

    std::string text(const std::string& key, const std::string& fallback) const {
        if (!has(key)) return fallback;
        const YAML::Node n = raw(key);
        if (!n.IsScalar()) {
            error(key, "expected a string");
            return fallback;
        }
        return n.Scalar();
    }

    std::vector<double> numbers(const std::string& key, std::vector<double> fallback) const {
        if (!has(key)) return fallback;
        const YAML::Node n = raw(key);
        if (!n.IsSequence()) {
            error(key, "expected a list of numbers");
            return fallback;
        }
        std::vector<double> out;
        for (std::size_t i = 0; i < n.size(); ++i) out.push_back(to_number(n[i], prefix(key) + "[" + std::to_string(i) + "]", 0.0));
        return out;
    }

    std::vector<std::size_t> counts(const std::string& key, std::vector<std::size_t> fallback) const {
        if (!has(key)) return fallback;
        const YAML::Node n = raw(key);
        if (!n.IsSequence()) {
            error(key, "expected a list of integers");
            return fallback;
        }
        std::vector<std::size_t> out;
        for (std::size_t i = 0; i < n.size(); ++i) {
            out.push_back(static_cast<std::size_t>(to_unsigned(n[i], prefix(key) + "[" + std::to_string(i) + "]", 0)));
        }
        return out;
    }

    std::vector<std::string> texts(const std::string& key, std::vector<std::string> fallback) const {
        if (!has(key)) return fallback;
        const YAML::Node n = raw(key);
        if (n.IsScalar()) return {n.Scalar()};
        if (!n.IsSequence()) {
            error(key, "expected a string or a list of strings");
            return fallback;
        }
        std::vector<std::string> out;
        for (std::size_t i = 0; i < n.size(); ++i) {
            if (!n[i].IsScalar()) {
                error(key, "expected strings");
                continue;
            }
            out.push_back(n[i].Scalar());
        }
        return out;
    }

    std::string choice(const std::string& key, const std::string& fallback, const std::vector<std::string>& options) const {
        const std::string v = text(key, fallback);
        if (std::find(options.begin(), options.end(), v) == options.end()) {
            error(key, "unknown value '" + v + "' (did you mean '" + nearest(v, options) + "'?)");
            return fallback;
        }
        return v;
    }

private:
    YAML::Node node_;
    std::string path_;
    std::vector<std::string>* errors_;
    std::vector<std::string> allowed_;
};

void check_expression(const std::string& source, const std::string& where, std::vector<std::string>& errors,
                      bool state_allowed = true) {
    try {
        const Expression e = Expression::parse(source);
        if (!state_allowed && e.depends_on_state()) errors.push_back(where + ": may not depend on y or z");
    } catch (const std::exception& ex) {
        errors.push_back(where + ": " + ex.what());
    }
}

enum class Slot { f, g, h };

const std::map<std::string, std::vector<std::string>>& term_keys(Slot slot) {
    static const std::map<std::string, std::vector<std::string>> f = {
        {"zero", {}}, {"linear", {"cy", "cz"}}, {"constant", {"value"}}, {"sin-reaction", {"amplitude"}},
        {"expression", {"expr", "C"}}};
    static const std::map<std::string, std::vector<std::string>> g = {
        {"zero", {}}, {"linear", {"cy", "cz"}}, {"expression", {"expr", "C", "alpha"}}};
    static const std::map<std::string, std::vector<std::string>> h = {
        {"zero", {}}, {"additive-noise", {"expr"}}, {"multiplicative-htilde", {"expr", "C", "beta"}}};
    return slot == Slot::f ? f : slot == Slot::g ? g : h;
}

TermSpec parse_term(const Section& parent, const std::string& key, Slot slot, std::vector<std::string>& errors,
                    bool state_free) {
    TermSpec t;
    if (!parent.has(key)) return t;
    const auto& kinds = term_keys(slot);
    std::vector<std::string> names;
    for (const auto& [k, v] : kinds) names.push_back(k);
    if (parent.raw(key).IsScalar()) {
        // Shorthand: `f: zero`.
        Section probe(YAML::Node(), parent.prefix(key), errors, {});
        const std::string kind = parent.raw(key).Scalar();
        if (!kinds.count(kind)) {
            errors.push_back(parent.prefix(key) + ": unknown kind '" + kind + "' (did you mean '" + nearest(kind, names) + "'?)");
        } else if (!kinds.at(kind).empty() && kind != "additive-noise") {
            errors.push_back(parent.prefix(key) + ": kind '" + kind + "' needs parameters");
        } else {
            t.kind = kind;
            if (kind == "additive-noise") t.expr = {"1"};
        }
        return t;
    }
    std::vector<std::string> allowed{"kind"};
    const YAML::Node node = parent.raw(key);
    std::string kind = "zero";
    if (node.IsMap() && node["kind"] && node["kind"].IsScalar()) kind = node["kind"].Scalar();
    if (!kinds.count(kind)) {
        errors.push_back(parent.prefix(key) + ".kind: unknown kind '" + kind + "' (did you mean '" + nearest(kind, names) + "'?)");
        return t;
    }
    if (state_free && kind != "zero" && kind != "constant" && kind != "expression" && kind != "additive-noise") {
        errors.push_back(parent.prefix(key) + ".kind: dominating data must be state free");
    }
    for (const auto& k : kinds.at(kind)) allowed.push_back(k);
    const Section s = parent.child(key, allowed);
    t.kind = kind;
    t.cy = s.number("cy", 0.0);
    t.cz = s.number("cz", 0.0);
    t.value = s.number("value", 0.0);
    t.amplitude = s.number("amplitude", 1.0);
    t.C = s.number("C", 0.0);
    t.alpha = s.number("alpha", 0.0);
    t.beta = s.number("beta", 0.0);
    if (kind == "expression" || kind == "additive-noise" || kind == "multiplicative-htilde") {
        const std::string def = kind == "additive-noise" ? "1" : "0";
        t.expr = s.texts("expr", {def});
        const std::size_t want = slot == Slot::g ? 2 : 1;
        if (slot == Slot::g && t.expr.size() == 1) t.expr.push_back("0");
        if (t.expr.size() != want) s.error("expr", "expected " + std::to_string(want) + " expression(s)");
        for (std::size_t i = 0; i < t.expr.size(); ++i) {
            check_expression(t.expr[i], s.prefix("expr"), errors, !state_free);
        }
        if (kind == "additive-noise") check_expression(t.expr[0], s.prefix("expr"), errors, false);
    }
    if (t.C < 0 || t.alpha < 0 || t.beta < 0) s.error("declared constants must be nonnegative");
    return t;
}

nlohmann::ordered_json term_json(const TermSpec& t, Slot slot) {
    nlohmann::ordered_json j;
    j["kind"] = t.kind;
    if (!term_keys(slot).count(t.kind)) return j;
    for (const auto& k : term_keys(slot).at(t.kind)) {
        if (k == "cy") j[k] = t.cy;
        else if (k == "cz") j[k] = t.cz;
        else if (k == "value") j[k] = t.value;
        else if (k == "amplitude") j[k] = t.amplitude;
        else if (k == "C") j[k] = t.C;
        else if (k == "alpha") j[k] = t.alpha;
        else if (k == "beta") j[k] = t.beta;
        else if (k == "expr") j[k] = t.expr;
    }
    return j;
}

nlohmann::ordered_json json_number(double v) {
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    return v;
}

ExperimentConfig parse_root(const YAML::Node& root) {
    std::vector<std::string> errors;
    ExperimentConfig c;
    if (!root || !root.IsMap()) throw ConfigError({"<root>: expected a mapping"});
    const Section top(root, "", errors,
                      {"problem", "scheme", "run", "checks", "comparison", "capacity", "convergence", "verify",
                       "manifest"});
    if (!top.has("problem")) errors.push_back("problem: missing required section");
    if (!top.has("run")) errors.push_back("run: missing required section");

    const Section problem = top.child("problem", {"grid", "time", "operator", "terms", "noise", "initial", "obstacle",
                                                  "boundary"});
    const Section grid = problem.child("grid", {"dim", "extent", "nodes"});
    c.grid.dim = static_cast<std::size_t>(grid.unsigned_integer("dim", 1));
    if (c.grid.dim != 1 && c.grid.dim != 2) grid.error("dim", "must be 1 or 2");
    c.grid.extent = grid.numbers("extent", std::vector<double>(c.grid.dim, 1.0));
    c.grid.nodes = grid.counts("nodes", std::vector<std::size_t>(c.grid.dim, 65));
    if (c.grid.extent.size() != c.grid.dim) grid.error("extent", "needs one entry per axis");
    if (c.grid.nodes.size() != c.grid.dim) grid.error("nodes", "needs one entry per axis");
    for (double e : c.grid.extent) {
        if (!(e > 0.0)) grid.error("extent", "must be positive");
    }
    for (std::size_t n : c.grid.nodes) {
        if (n < 3) grid.error("nodes", "at least 3 nodes per axis");
    }

    const Section time = problem.child("time", {"horizon", "steps"});
    c.horizon = time.number("horizon", 1.0);
    c.steps = static_cast<std::size_t>(time.unsigned_integer("steps", 100));
    if (!(c.horizon > 0.0)) time.error("horizon", "must be positive");

    const Section op = problem.child("operator", {"family", "a11", "a22", "a12", "table"});
    c.op.family = op.choice("family", "identity", {"identity", "scalar-sin", "anisotropic-const", "tabulated"});
    c.op.a11 = op.number("a11", 1.0);
    c.op.a22 = op.number("a22", 1.0);
    c.op.a12 = op.number("a12", 0.0);
    c.op.table = op.text("table", "");
    if (c.op.family == "tabulated" && c.op.table.empty()) op.error("table", "required for the tabulated family");

    const Section terms = problem.child("terms", {"f", "g", "h"});
    c.f = parse_term(terms, "f", Slot::f, errors, false);
    c.g = parse_term(terms, "g", Slot::g, errors, false);
    c.h = parse_term(terms, "h", Slot::h, errors, false);

    const Section noise = problem.child("noise", {"kernel", "modes", "length", "table"});
    c.noise.kernel = noise.choice("kernel", "none",
                                  {"none", "rank-one", "sine", "brownian-bridge", "exponential", "tabulated"});
    c.noise.modes = static_cast<std::size_t>(noise.unsigned_integer("modes", c.noise.kernel == "none" ? 0 : 1));
    c.noise.length = noise.number("length", 0.2);
    c.noise.table = noise.text("table", "");
    if (c.noise.kernel == "none" && c.noise.modes != 0) noise.error("modes", "must be 0 without a kernel");
    if (c.noise.kernel != "none" && c.noise.modes == 0) noise.error("modes", "must be positive");
    if (c.noise.kernel == "tabulated" && c.noise.table.empty()) noise.error("table", "required for the tabulated kernel");
    if (c.h.kind != "zero" && c.noise.kernel == "none") terms.error("h", "needs a noise kernel");

    c.initial = problem.text("initial", "0");
    check_expression(c.initial, problem.prefix("initial"), errors, false);

    if (problem.has("obstacle")) {
        const Section o = problem.child("obstacle", {"barrier", "dominating", "gap"});
        ObstacleConfig oc;
        oc.barrier = o.text("barrier", "");
        oc.gap = o.number("gap", 0.0);
        if (o.has("dominating")) {
            oc.dominating = true;
            const Section d = o.child("dominating", {"s0", "f", "g", "h"});
            oc.s0 = d.text("s0", "0");
            check_expression(oc.s0, d.prefix("s0"), errors, false);
            oc.f = parse_term(d, "f", Slot::f, errors, true);
            oc.g = parse_term(d, "g", Slot::g, errors, true);
            oc.h = parse_term(d, "h", Slot::h, errors, true);
        }
        if (!oc.barrier.empty() && oc.dominating) o.error("give either barrier or dominating, not both");
        if (oc.barrier.empty() && !oc.dominating) o.error("needs barrier or dominating");
        if (!oc.barrier.empty()) check_expression(oc.barrier, o.prefix("barrier"), errors, false);
        if (oc.gap < 0.0) o.error("gap", "must be nonnegative");
        c.obstacle = oc;
    }
    if (problem.has("boundary")) {
        const Section b = problem.child("boundary", {"m", "b", "sigma"});
        BoundaryConfig bc;
        bc.m = b.number("m", 0.0);
        bc.b = b.text("b", "0");
        bc.sigma = b.texts("sigma", {});
        check_expression(bc.b, b.prefix("b"), errors, false);
        for (const auto& s : bc.sigma) check_expression(s, b.prefix("sigma"), errors, false);
        if (bc.sigma.size() > c.noise.modes) b.error("sigma", "more loadings than noise modes");
        c.boundary = bc;
    }

    const Section scheme = top.child("scheme", {"method", "penalty", "lcp"});
    c.scheme.kind = parse_scheme_kind(scheme.choice("method", c.obstacle ? "projected" : "unconstrained",
                                                    {"unconstrained", "penalized", "projected"}));
    c.scheme.penalty = scheme.number("penalty", 1e3);
    if (!(c.scheme.penalty > 0.0)) scheme.error("penalty", "must be positive");
    const Section lcp = scheme.child("lcp", {"tolerance", "max_sweeps", "relaxation"});
    c.scheme.lcp.tolerance = lcp.number("tolerance", c.scheme.lcp.tolerance);
    c.scheme.lcp.max_sweeps = static_cast<std::size_t>(lcp.unsigned_integer("max_sweeps", c.scheme.lcp.max_sweeps));
    c.scheme.lcp.relaxation = lcp.number("relaxation", c.scheme.lcp.relaxation);
    if (!(c.scheme.lcp.relaxation > 0.0 && c.scheme.lcp.relaxation < 2.0)) lcp.error("relaxation", "must lie in (0, 2)");
    if (c.scheme.kind != SchemeKind::unconstrained && !c.obstacle) scheme.error("method", "obstacle schemes need problem.obstacle");

    const Section run = top.child("run", {"seed", "paths", "out", "workers"});
    if (run.present() && !run.has("seed")) run.error("seed", "missing (a seed is required for reproducibility)");
    c.seed = run.unsigned_integer("seed", 0);
    c.paths = static_cast<std::size_t>(run.unsigned_integer("paths", 1));
    c.out = run.text("out", "out");
    c.workers = static_cast<std::size_t>(run.unsigned_integer("workers", 1));
    if (c.paths < 1) run.error("paths", "must be at least 1");
    if (c.workers < 1) run.error("workers", "must be at least 1");

    c.checks = top.texts("checks", {});
    for (const auto& name : c.checks) {
        if (std::find(known_checks().begin(), known_checks().end(), name) == known_checks().end()) {
            errors.push_back("checks: unknown check '" + name + "' (did you mean '" + nearest(name, known_checks()) + "'?)");
        }
    }

    const Section cmp = top.child("comparison", {"xi_offset", "obstacle_offset", "f_offset"});
    c.comparison.xi_offset = cmp.number("xi_offset", c.comparison.xi_offset);
    c.comparison.obstacle_offset = cmp.number("obstacle_offset", c.comparison.obstacle_offset);
    c.comparison.f_offset = cmp.number("f_offset", c.comparison.f_offset);

    const Section cap = top.child("capacity", {"interval", "mask", "time", "horizon", "schedule"});
    c.capacity.interval = cap.numbers("interval", c.capacity.interval);
    if (c.capacity.interval.size() != 2 || c.capacity.interval[0] > c.capacity.interval[1]) {
        cap.error("interval", "expected [a, b] with a <= b");
    }
    c.capacity.mask = cap.text("mask", "");
    if (!c.capacity.mask.empty()) check_expression(c.capacity.mask, cap.prefix("mask"), errors, false);
    c.capacity.horizon = cap.number("horizon", c.capacity.horizon);
    c.capacity.time = cap.number("time", c.capacity.time);
    if (!(c.capacity.time > 0.0 && c.capacity.time < c.capacity.horizon)) cap.error("time", "must lie in (0, horizon)");
    if (cap.has("schedule")) {
        const YAML::Node s = cap.raw("schedule");
        if (!s.IsSequence() || s.size() == 0) {
            cap.error("schedule", "expected a nonempty list of levels");
        } else {
            c.capacity.schedule.clear();
            for (std::size_t i = 0; i < s.size(); ++i) {
                const Section lv(s[i], cap.prefix("schedule") + "[" + std::to_string(i) + "]", errors,
                                 {"nodes", "steps", "penalty"});
                RefinementLevel r;
                r.nodes = static_cast<std::size_t>(lv.unsigned_integer("nodes", r.nodes));
                r.steps = static_cast<std::size_t>(lv.unsigned_integer("steps", r.steps));
                r.penalty = lv.number("penalty", r.penalty);
                c.capacity.schedule.push_back(r);
            }
        }
    }

    const Section conv = top.child("convergence", {"steps", "min_order", "oracle_modes"});
    c.convergence.steps = conv.counts("steps", c.convergence.steps);
    c.convergence.min_order = conv.number("min_order", c.convergence.min_order);
    c.convergence.oracle_modes = static_cast<std::size_t>(conv.unsigned_integer("oracle_modes", 0));
    if (c.convergence.steps.size() < 2) conv.error("steps", "needs at least two step counts");

    const Section ver = top.child("verify", {"p", "theta", "delta", "stability_tolerance", "ito_tolerance",
                                             "weak_tolerance", "skorohod_tolerance"});
    c.verify.p = ver.number("p", c.verify.p);
    c.verify.theta = ver.number("theta", c.verify.theta);
    c.verify.delta = ver.number("delta", c.verify.delta);
    c.verify.stability_tolerance = ver.number("stability_tolerance", c.verify.stability_tolerance);
    c.verify.ito_tolerance = ver.number("ito_tolerance", c.verify.ito_tolerance);
    c.verify.weak_tolerance = ver.number("weak_tolerance", c.verify.weak_tolerance);
    c.verify.skorohod_tolerance = ver.number("skorohod_tolerance", c.verify.skorohod_tolerance);
    if (!(c.verify.p >= 2.0)) ver.error("p", "must be at least 2");
    if (!(c.verify.theta > 0.0 && c.verify.theta < 1.0)) ver.error("theta", "must lie in (0, 1)");

    if (!errors.empty()) throw ConfigError(errors);
    return c;
}

Variables vars(double t, const Point& x) {
    Variables v;
    v.t = t;
    v.x = x[0];
    v.x2 = x[1];
    return v;
}

ScalarTerm make_scalar(const TermSpec& t, std::size_t dim) {
    if (t.kind == "linear") return linear_scalar(t.cy, t.cz, dim);
    if (t.kind == "constant") return constant_scalar(t.value);
    if (t.kind == "sin-reaction") return sin_reaction(t.amplitude);
    if (t.kind == "expression") return expression_scalar(Expression::parse(t.expr.at(0)), t.C);
    return zero_scalar();
}

VectorTerm make_vector(const TermSpec& t, std::size_t dim) {
    if (t.kind == "linear") return linear_vector(t.cy, t.cz, dim);
    if (t.kind == "expression") {
        return expression_vector(Expression::parse(t.expr.at(0)), Expression::parse(t.expr.at(1)), dim, t.C, t.alpha);
    }
    return zero_vector();
}

NoiseTerm make_noise(const TermSpec& t, const std::shared_ptr<const CovarianceModel>& model) {
    const std::size_t modes = model ? model->modes() : 0;
    if (t.kind == "additive-noise") return additive_noise(model, Expression::parse(t.expr.at(0)));
    if (t.kind == "multiplicative-htilde") {
        return multiplicative_htilde(model, Expression::parse(t.expr.at(0)), t.C, t.beta);
    }
    return zero_noise(modes);
}

std::shared_ptr<const CovarianceModel> make_model(const NoiseSpec& n, const SpatialGrid& grid) {
    if (n.kernel == "none") return nullptr;
    if (n.kernel == "sine") {
        if (grid.dim() != 1) throw InvalidArgument("the sine kernel is one-dimensional");
        if (n.modes > grid.interior_count()) throw InvalidArgument("more sine modes than interior nodes");
        // lambda_m = (L / (m pi))^2, the Brownian-bridge spectrum, with exact discrete sines.
        std::vector<double> values;
        std::vector<GridField> fields;
        for (std::size_t m = 1; m <= n.modes; ++m) {
            const double l = grid.extent(0) / (static_cast<double>(m) * std::numbers::pi);
            values.push_back(l * l);
            fields.push_back(sine_mode(m, grid));
        }
        return std::make_shared<const CovarianceModel>(covariance_from_eigenpairs("sine", values, fields));
    }
    Kernel k;
    if (n.kernel == "rank-one") k = rank_one_sine_kernel(grid);
    else if (n.kernel == "brownian-bridge") k = brownian_bridge_kernel(grid);
    else if (n.kernel == "exponential") k = exponential_kernel(n.length);
    else k = tabulated_kernel(grid, read_numeric_csv(n.table).values);
    return std::make_shared<const CovarianceModel>(kl_build(k, grid, n.modes));
}

CoefficientField make_operator(const OperatorSpec& o, const SpatialGrid& grid) {
    if (o.family == "scalar-sin") return scalar_sin_coefficients(grid.dim(), grid.extent(0));
    if (o.family == "anisotropic-const") return anisotropic_constant_coefficients(grid.dim(), o.a11, o.a22, o.a12);
    if (o.family == "tabulated") {
        const NumericTable table = read_numeric_csv(o.table);
        const std::size_t dim = grid.dim();
        const std::size_t want = dim == 1 ? 3 : 6;
        if (table.columns != want) throw InvalidArgument("operator table needs columns t,x,a11 (1D) or t,x,y,a11,a12,a22");
        std::vector<CoefficientSample> samples;
        for (std::size_t r = 0; r < table.rows(); ++r) {
            const double* row = &table.values[r * want];
            CoefficientSample s;
            s.t = row[0];
            if (dim == 1) {
                s.x = {row[1], 0.0};
                s.a = {row[2], 0.0, 0.0, 0.0};
            } else {
                s.x = {row[1], row[2]};
                s.a = {row[3], row[4], row[4], row[5]};
            }
            samples.push_back(s);
        }
        return tabulated_coefficients(dim, std::move(samples));
    }
    return identity_coefficients(grid.dim());
}

}  // namespace

ExperimentConfig parse_config_text(const std::string& text) {
    YAML::Node root;
    try {
        root = YAML::Load(text);
    } catch (const YAML::Exception& e) {
        throw ConfigError({std::string("syntax: ") + e.what()});
    }
    return parse_root(root);
}

ExperimentConfig parse_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError({path + ": cannot open"});
    std::ostringstream s;
    s << in.rdbuf();
    return parse_config_text(s.str());
}

nlohmann::ordered_json to_json(const ExperimentConfig& c) {
    using J = nlohmann::ordered_json;
    J p;
    p["grid"] = J{{"dim", c.grid.dim}, {"extent", c.grid.extent}, {"nodes", c.grid.nodes}};
    p["time"] = J{{"horizon", c.horizon}, {"steps", c.steps}};
    J op{{"family", c.op.family}};
    if (c.op.family == "anisotropic-const") {
        op["a11"] = c.op.a11;
        op["a22"] = c.op.a22;
        op["a12"] = c.op.a12;
    }
    if (c.op.family == "tabulated") op["table"] = c.op.table;
    p["operator"] = op;
    p["terms"] = J{{"f", term_json(c.f, Slot::f)}, {"g", term_json(c.g, Slot::g)}, {"h", term_json(c.h, Slot::h)}};
    J noise{{"kernel", c.noise.kernel}, {"modes", c.noise.modes}};
    if (c.noise.kernel == "exponential") noise["length"] = c.noise.length;
    if (c.noise.kernel == "tabulated") noise["table"] = c.noise.table;
    p["noise"] = noise;
    p["initial"] = c.initial;
    if (c.obstacle) {
        J o;
        if (c.obstacle->dominating) {
            o["dominating"] = J{{"s0", c.obstacle->s0},
                                {"f", term_json(c.obstacle->f, Slot::f)},
                                {"g", term_json(c.obstacle->g, Slot::g)},
                                {"h", term_json(c.obstacle->h, Slot::h)}};
        } else {
            o["barrier"] = c.obstacle->barrier;
        }
        o["gap"] = c.obstacle->gap;
        p["obstacle"] = o;
    }
    if (c.boundary) p["boundary"] = J{{"m", c.boundary->m}, {"b", c.boundary->b}, {"sigma", c.boundary->sigma}};

    J j;
    j["problem"] = p;
    j["scheme"] = J{{"method", to_string(c.scheme.kind)},
                    {"penalty", json_number(c.scheme.penalty)},
                    {"lcp", J{{"tolerance", c.scheme.lcp.tolerance},
                              {"max_sweeps", c.scheme.lcp.max_sweeps},
                              {"relaxation", c.scheme.lcp.relaxation}}}};
    j["run"] = J{{"seed", c.seed}, {"paths", c.paths}, {"out", c.out}, {"workers", c.workers}};
    j["checks"] = c.checks;
    j["comparison"] = J{{"xi_offset", c.comparison.xi_offset},
                        {"obstacle_offset", c.comparison.obstacle_offset},
                        {"f_offset", c.comparison.f_offset}};
    J cap{{"interval", c.capacity.interval}};
    if (!c.capacity.mask.empty()) cap["mask"] = c.capacity.mask;
    cap["time"] = c.capacity.time;
    cap["horizon"] = c.capacity.horizon;
    J sched = J::array();
    for (const auto& r : c.capacity.schedule) {
        sched.push_back(J{{"nodes", r.nodes}, {"steps", r.steps}, {"penalty", json_number(r.penalty)}});
    }
    cap["schedule"] = sched;
    j["capacity"] = cap;
    j["convergence"] = J{{"steps", c.convergence.steps},
                         {"min_order", c.convergence.min_order},
                         {"oracle_modes", c.convergence.oracle_modes}};
    j["verify"] = J{{"p", c.verify.p},
                    {"theta", c.verify.theta},
                    {"delta", c.verify.delta},
                    {"stability_tolerance", c.verify.stability_tolerance},
                    {"ito_tolerance", c.verify.ito_tolerance},
                    {"weak_tolerance", c.verify.weak_tolerance},
                    {"skorohod_tolerance", c.verify.skorohod_tolerance}};
    return j;
}

SPDEProblem build_problem(const ExperimentConfig& c, unsigned refinement) {
    const std::size_t factor = std::size_t{1} << refinement;
    std::vector<std::size_t> nodes;
    for (std::size_t n : c.grid.nodes) nodes.push_back((n - 1) * factor + 1);
    SPDEProblem p;
    p.grid = build_grid(c.grid.dim, c.grid.extent, nodes);
    p.time = TimeGrid(c.horizon, c.steps * factor);
    p.a = make_operator(c.op, p.grid);
    p.noise = make_model(c.noise, p.grid);
    p.f = make_scalar(c.f, c.grid.dim);
    p.g = make_vector(c.g, c.grid.dim);
    p.h = make_noise(c.h, p.noise);
    p.seed = c.seed;

    const double m = c.boundary ? c.boundary->m : 0.0;
    const Expression init = Expression::parse(c.initial);
    p.xi = sample_field(p.grid, [&](const Point& x) { return init(vars(0.0, x)); });
    for (std::size_t n = 0; n < p.grid.node_count(); ++n) {
        if (p.grid.is_boundary(n)) p.xi[n] = m;
    }

    if (c.obstacle) {
        ObstacleSpec o;
        o.gap = c.obstacle->gap;
        if (c.obstacle->dominating) {
            DominatingData d;
            const Expression s0 = Expression::parse(c.obstacle->s0);
            d.s0 = sample_field(p.grid, [&](const Point& x) { return s0(vars(0.0, x)); });
            for (std::size_t n = 0; n < p.grid.node_count(); ++n) {
                if (p.grid.is_boundary(n)) d.s0[n] = m;
            }
            d.f = make_scalar(c.obstacle->f, c.grid.dim);
            d.g = make_vector(c.obstacle->g, c.grid.dim);
            d.h = make_noise(c.obstacle->h, p.noise);
            o.dominating = d;
            o.from_dominating = true;
        } else {
            const Expression s = Expression::parse(c.obstacle->barrier);
            o.barrier = [s](double t, const Point& x) { return s(vars(t, x)); };
        }
        p.obstacle = o;
    }
    if (c.boundary) {
        ItoProcessBoundary b;
        b.m = c.boundary->m;
        const Expression drift = Expression::parse(c.boundary->b);
        b.drift = [drift](double t) { return drift(vars(t, {0.0, 0.0})); };
        std::vector<Expression> sig;
        for (const auto& s : c.boundary->sigma) sig.push_back(Expression::parse(s));
        b.loadings = [sig](double t) {
            std::vector<double> out;
            for (const auto& e : sig) out.push_back(e(vars(t, {0.0, 0.0})));
            return out;
        };
        p.boundary = b;
    }
    validate_problem(p);
    return p;
}

SPDEProblem build_comparison_partner(const ExperimentConfig& c, unsigned refinement) {
    ExperimentConfig second = c;
    const auto& off = c.comparison;
    SPDEProblem p = build_problem(second, refinement);
    for (std::size_t n : p.grid.interior_nodes()) p.xi[n] += off.xi_offset;
    if (p.obstacle) {
        if (p.obstacle->from_dominating) {
            p.obstacle->gap -= off.obstacle_offset;
        } else {
            const auto s = p.obstacle->barrier;
            const double d = off.obstacle_offset;
            p.obstacle->barrier = [s, d](double t, const Point& x) { return s(t, x) + d; };
        }
    }
    if (off.f_offset != 0.0) {
        const ScalarTerm f = p.f;
        const double d = off.f_offset;
        p.f.name = f.name + "+offset";
        p.f.eval = [f, d](const TermPoint& pt) { return f(pt) + d; };
    }
    validate_problem(p);
    return p;
}

}  // namespace ospde
