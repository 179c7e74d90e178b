#include <cmath>

#include "doctest.h"
#include "problems.hpp"
#include "ospde/config.hpp"
#include "ospde/verify.hpp"

using namespace ospde;

namespace {

SPDEProblem ordered(double xi_shift, double s_shift, std::size_t modes = 4) {
    SPDEProblem p = testing::heat(33, 0.2, 200, modes, 0.4, 0.5);
    for (std::size_t n : p.grid.interior_nodes()) p.xi[n] += xi_shift;
    testing::barrier(p, 0.2 + s_shift);
    p.f = linear_scalar(-1.0, 0.0, 1);
    return p;
}

MonteCarloOptions mc(std::size_t paths, SchemeKind kind = SchemeKind::projected) {
    MonteCarloOptions o;
    o.paths = paths;
    o.scheme.kind = kind;
    return o;
}

}  // namespace

TEST_CASE("skorohod residual") {
    SPDEProblem p = testing::heat(17, 0.1, 50);
    const auto [path, nu] = Stepper(p).solve(Scheme{}, 0);
    CHECK(skorohod_residual(path, nu) == 0.0);

    SPDEProblem q = ordered(0.0, 0.0);
    const auto e = skorohod_check(q, mc(5));
    CHECK(e.status == CheckStatus::pass);
    CHECK(e.max <= 1e-10);

    const auto pen = skorohod_check(q, mc(2, SchemeKind::penalized));
    CHECK(pen.status == CheckStatus::informational);
}

TEST_CASE("weak residual of computed paths") {
    SPDEProblem p = ordered(0.0, 0.0);
    Scheme s;
    s.kind = SchemeKind::projected;
    const auto [path, nu] = Stepper(p).solve(s, 3);
    const auto r = weak_residual_check(path, nu, p, standard_test_functions(p.grid, p.time.horizon));
    CHECK(r.per_function.size() == 12);
    CHECK(r.max_relative < 0.05);

    const auto e = weak_residual_entry(p, mc(3), 0.05);
    CHECK(e.status == CheckStatus::pass);
}

TEST_CASE("energy balance without noise") {
    SPDEProblem p = ordered(0.0, 0.0, 0);
    const auto e = ito_balance_check(p, mc(1), 0.01);
    CHECK(e.status == CheckStatus::pass);
    CHECK(e.mean < 0.01);
}

TEST_CASE("comparison of ordered data") {
    const SPDEProblem lo = ordered(0.0, 0.0), hi = ordered(0.1, 0.05);
    const auto e = comparison_check(lo, hi, mc(10));
    CHECK(e.status == CheckStatus::pass);
    CHECK(e.max == 0.0);

    const auto bad = comparison_check(hi, lo, mc(2));
    CHECK(bad.status == CheckStatus::fail);
    CHECK(bad.max > 0.0);

    SPDEProblem other = hi;
    other.seed += 1;
    CHECK_THROWS_AS(comparison_check(lo, other, mc(1)), InvalidArgument);
}

TEST_CASE("energy estimate ratio") {
    const ProblemBuilder build = [](unsigned r) {
        SPDEProblem p = testing::heat(16 * (1u << r) + 1, 0.2, 50u << r, 4, 0.3, 0.5);
        p.f = linear_scalar(-1.0, 0.0, 1);
        p.f.C = 1.0;
        return p;
    };
    const auto e = energy_estimate_check(build, mc(20, SchemeKind::unconstrained));
    CHECK(e.status == CheckStatus::pass);
    CHECK(e.metric("ratio_level0") > 0.0);
    CHECK(std::isfinite(e.metric("ratio_level1")));
}

TEST_CASE("maximum principle gate") {
    const ProblemBuilder build = [](unsigned) {
        SPDEProblem p = testing::heat(17, 0.1, 50, 2, 0.3, 0.5);
        p.h.beta = 2.0;
        return p;
    };
    CHECK(maximum_principle_check(build, mc(2)).status == CheckStatus::disabled);
}

TEST_CASE("maximum principle from the config") {
    const auto cfg = parse_config(std::string(OSPDE_SOURCE_DIR) + "/configs/maximum_principle.yaml");
    const ProblemBuilder build = [&](unsigned r) { return build_problem(cfg, r); };
    MonteCarloOptions o = mc(20);
    const auto e = maximum_principle_check(build, o);
    CHECK(e.status == CheckStatus::pass);
    CHECK(std::isfinite(e.mean));
}

TEST_CASE("workers do not change the report") {
    const SPDEProblem p = ordered(0.0, 0.0);
    MonteCarloOptions one = mc(6), two = mc(6);
    two.workers = 2;
    const auto a = ito_balance_check(p, one), b = ito_balance_check(p, two);
    CHECK(a.per_path == b.per_path);
    CHECK(a.mean == b.mean);
}
