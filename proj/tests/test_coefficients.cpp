#include <cmath>
#include <memory>
#include <numbers>
#include <random>

#include "doctest.h"
#include "helpers.hpp"
#include "ospde/coefficients.hpp"
#include "ospde/expression.hpp"
#include "ospde/problem.hpp"

using namespace ospde;
using testing::line;

TEST_CASE("expressions") {
    Variables v;
    v.t = 0.5;
    v.x = 0.25;
    v.y = 2.0;
    v.z = -1.0;
    CHECK(Expression::parse("1 + 2 * 3")(v) == 7.0);
    CHECK(Expression::parse("-2^2")(v) == -4.0);
    CHECK(Expression::parse("2^3^2")(v) == 512.0);
    CHECK(Expression::parse("(x < 0.5) && (y >= 2)")(v) == 1.0);
    CHECK(Expression::parse("x > 0.5 || t == 0.5")(v) == 1.0);
    CHECK(Expression::parse("max(y, z) + min(y, z) + abs(z)")(v) == 2.0);
    CHECK(Expression::parse("sin(pi*x)")(v) == doctest::Approx(std::sqrt(0.5)));
    CHECK(Expression::parse("pow(y, 3) / 4")(v) == 2.0);
    CHECK(Expression::parse("exp(log(3)) + sqrt(16) + cos(0) + tan(0)")(v) == doctest::Approx(8.0));
    CHECK(Expression::parse("1e-3 * 2.5E2")(v) == doctest::Approx(0.25));

    CHECK(Expression::parse("y + 1").depends_on_state());
    CHECK(Expression::parse("z2").depends_on_state());
    CHECK_FALSE(Expression::parse("x + t").depends_on_state());
    CHECK(Expression::parse("x + t").depends_on_time());

    CHECK_THROWS_AS(Expression::parse("1 +"), InvalidArgument);
    CHECK_THROWS_AS(Expression::parse("foo(1)"), InvalidArgument);
    CHECK_THROWS_AS(Expression::parse("w"), InvalidArgument);
    CHECK_THROWS_AS(Expression::parse("(1"), InvalidArgument);
    CHECK_THROWS_AS(Expression::parse("1 2"), InvalidArgument);
    CHECK_THROWS_AS(Expression::parse("min(1)"), InvalidArgument);
}

TEST_CASE("assumption gates on hand-computed tuples") {
    struct Row {
        double lambda, alpha, beta;
        bool h, mp;
    };
    // 2a + b^2 < 2l and a + b^2/2 + 72 b^2 < l, evaluated by hand
    const Row rows[] = {
        {1.0, 0.0, 0.0, true, true},       // 0 < 2, 0 < 1
        {1.0, 0.9, 0.0, true, true},       // 1.8 < 2, 0.9 < 1
        {1.0, 0.0, 0.25, true, false},     // 0.0625 < 2, 4.53125 > 1
        {1.0, 1.0, 0.0, false, false},     // 2 = 2, 1 = 1
        {1.0, 0.5, 1.0, false, false},     // 2 = 2, 73 > 1
        {2.0, 0.5, 0.1, true, true},       // 1.01 < 4, 0.5 + 0.005 + 0.72 = 1.225 < 2
        {0.5, 0.2, 0.05, true, true},      // 0.4025 < 1, 0.2 + 0.00125 + 0.18 = 0.38125 < 0.5
        {0.5, 0.3, 0.1, true, false},      // 0.61 < 1, 0.3 + 0.005 + 0.72 = 1.025 > 0.5
        {1.0, 0.0, 1.5, false, false},     // 2.25 > 2, 110.25 > 1
        {3.0, 1.0, 0.2, true, false},      // 2.04 < 6, 1 + 0.02 + 2.88 = 3.9 > 3
    };
    for (std::size_t i = 0; i < 10; ++i) {
        const Row& r = rows[i];
        const AssumptionReport rep = check_constants(r.lambda, r.alpha, r.beta);
        CAPTURE(i);
        CHECK(rep.h_contraction == r.h);
        CHECK(rep.mp_condition == r.mp);
    }
    const AssumptionReport last = check_constants(3.0, 1.0, 0.2);
    CHECK(last.h_contraction);
    CHECK_FALSE(last.mp_condition);
    CHECK(last.mp_lhs == doctest::Approx(3.9));
    CHECK(last.contraction_lhs == doctest::Approx(2.04));
}

TEST_CASE("assumption report does not depend on evaluation order") {
    const AssumptionReport a = check_constants(0.7, 0.1, 0.05);
    const AssumptionReport b = check_constants(0.7, 0.1, 0.05);
    CHECK(a.mp_lhs == b.mp_lhs);
    CHECK(a.contraction_lhs == b.contraction_lhs);
}

TEST_CASE("lipschitz estimates") {
    const auto g = line(17);
    CHECK(estimate_lipschitz(zero_scalar(), g, 1.0, 100, 1).y_part == 0.0);
    CHECK(estimate_lipschitz(linear_scalar(0.5, 0.0, 1), g, 1.0, 200, 2).y_part == doctest::Approx(0.5));
    CHECK(estimate_lipschitz(linear_vector(0.0, 0.3, 1), g, 1.0, 200, 3).z_part == doctest::Approx(0.3));
    CHECK_THROWS_AS(estimate_lipschitz(zero_scalar(), g, 1.0, 0, 1), InvalidArgument);
    ScalarTerm bad = zero_scalar();
    bad.eval = [](const TermPoint&) { return std::nan(""); };
    CHECK_THROWS_AS(estimate_lipschitz(bad, g, 1.0, 10, 1), InvalidArgument);
}

TEST_CASE("built-in terms respect their declared constants") {
    const auto g = testing::square(9);
    auto model = std::make_shared<const CovarianceModel>(kl_build(brownian_bridge_kernel(g), g, 4));
    const std::size_t budget = 10000;
    const double slack = 1e-9;

    for (const ScalarTerm& f : {linear_scalar(0.7, -0.2, 2), sin_reaction(1.3), constant_scalar(2.0),
                                expression_scalar(Expression::parse("0.5*sin(y) + 0.1*z"), 0.5)}) {
        const auto e = estimate_lipschitz(f, g, 1.0, budget, 5);
        CAPTURE(f.name);
        CHECK(e.y_part <= f.C + slack);
        CHECK(e.z_part <= f.C + slack);
    }
    for (const VectorTerm& v : {linear_vector(0.4, 0.25, 2)}) {
        const auto e = estimate_lipschitz(v, g, 1.0, budget, 6);
        CHECK(e.y_part <= v.C + slack);
        CHECK(e.z_part <= v.alpha + slack);
    }
    const NoiseTerm h = multiplicative_htilde(model, Expression::parse("0.2*sin(y) + 0.1*z"), 0.2, 0.1);
    const auto e = estimate_lipschitz(h, g, 1.0, budget, 7);
    CHECK(e.y_part <= h.C + slack);
    CHECK(e.z_part <= h.beta + slack);
}

TEST_CASE("additive noise reproduces the expansion") {
    const auto g = line(17);
    auto model = std::make_shared<const CovarianceModel>(kl_build(brownian_bridge_kernel(g), g, 3));
    const NoiseTerm h = additive_noise(model, Expression::parse("2"));
    TermPoint p;
    p.site = 5;
    p.x = g.coordinates(5);
    const auto v = h(p);
    for (std::size_t j = 0; j < 3; ++j) {
        CHECK(v[j] == doctest::Approx(2.0 * std::sqrt(model->eigenvalues[j]) * model->eigenfunctions[j][5]));
    }
    p.on_cell = true;
    CHECK_THROWS(h(p));
}

TEST_CASE("shifted coefficients") {
    const auto g = line(17);
    const TimeGrid tg(1.0, 4);
    std::mt19937_64 rng(9);
    auto path = std::make_shared<FieldPath>();
    for (std::size_t k = 0; k <= tg.steps; ++k) path->push_back(testing::random_h10(g, rng));
    const ShiftPath zero{std::make_shared<const FieldPath>(FieldPath(tg.steps + 1, GridField(g.node_count()))), g};
    const ShiftPath sp{path, g};

    const ScalarTerm f = linear_scalar(0.6, 0.2, 1);
    const VectorTerm gv = linear_vector(0.1, 0.3, 1);
    const NoiseTerm h = zero_noise(0);

    TermPoint p;
    p.step = 2;
    p.site = 7;
    p.x = g.coordinates(7);
    p.y = 0.4;
    p.z = {-0.3, 0.0};

    const ShiftedTerms id = shift_coefficients(f, gv, h, zero, zero_scalar(), zero_vector(), zero_noise(0));
    CHECK(id.f(p) == f(p));
    CHECK(id.g(p)[0] == gv(p)[0]);

    const ScalarTerm c = constant_scalar(1.7);
    const ShiftedTerms cancel = shift_coefficients(c, gv, h, sp, c, zero_vector(), zero_noise(0));
    CHECK(zero_point_field(cancel.f, g, 0.5, 2)[7] == 0.0);

    const ShiftedTerms s = shift_coefficients(f, gv, h, sp, c, zero_vector(), zero_noise(0));
    const ShiftedTerms back = unshift_coefficients(s.f, s.g, s.h, sp, c, zero_vector(), zero_noise(0));
    for (std::size_t n : g.interior_nodes()) {
        p.site = n;
        p.x = g.coordinates(n);
        CHECK(back.f(p) == doctest::Approx(f(p)).epsilon(1e-14));
        CHECK(back.g(p)[0] == doctest::Approx(gv(p)[0]).epsilon(1e-14));
    }
    const auto lf = estimate_lipschitz(f, g, 1.0, 500, 4);
    ScalarTerm fixed = s.f;
    fixed.eval = [s](const TermPoint& q) {
        TermPoint r = q;
        r.step = 1;
        return s.f(r);
    };
    const auto ls = estimate_lipschitz(fixed, g, 1.0, 500, 4);
    CHECK(ls.y_part == doctest::Approx(lf.y_part).epsilon(1e-9));

    TermPoint late = p;
    late.step = 9;
    CHECK_THROWS_AS(s.f(late), ShapeMismatch);
}

TEST_CASE("problem validation") {
    SPDEProblem p;
    p.grid = line(9);
    p.time = TimeGrid(1.0, 10);
    p.a = identity_coefficients(1);
    p.xi = sample_field(p.grid, [](const Point& x) { return std::sin(std::numbers::pi * x[0]); });
    p.xi[0] = 0.0;
    p.xi[8] = 0.0;
    CHECK_NOTHROW(validate_problem(p));

    SPDEProblem q = p;
    q.xi[0] = 0.3;
    CHECK_THROWS_AS(validate_problem(q), InvalidArgument);

    q = p;
    ObstacleSpec o;
    o.barrier = [](double, const Point&) { return 2.0; };
    q.obstacle = o;
    CHECK_THROWS_AS(validate_problem(q), InvalidArgument);

    q = p;
    q.xi = GridField(3);
    CHECK_THROWS_AS(validate_problem(q), ShapeMismatch);

    const AssumptionReport r = validate_assumptions(p);
    CHECK(r.h_contraction);
    CHECK(r.mp_condition);
}
