#include "tdbs/verify.hpp"

#include <doctest.h>

#include <array>
#include <cmath>

using namespace tdbs;

namespace {

CoefficientSchedule flat(double v) { return CoefficientSchedule::constant(v, 0.0, 1.0); }

CoefficientSchedule quarters(std::array<double, 4> v) {
    return CoefficientSchedule::piecewise_constant(std::array{0.0, 0.25, 0.5, 0.75, 1.0}, v);
}

ProblemSpec put_problem(std::size_t nodes) {
    ProblemSpec p;
    p.domain = DomainSpec{{50.0}, {200.0}, std::nullopt};
    p.payoff = PayoffSpec::basket_put(100.0);
    p.maturity = 1.0;
    p.nodes_per_axis = {nodes};
    return p;
}

SolveConfig coarse() {
    SolveConfig c;
    c.dt_target = 1.0 / 32.0;
    return c;
}

}  // namespace

TEST_SUITE("verify") {

TEST_CASE("relative l2 over a region") {
    const std::array<std::size_t, 1> n{9};
    const Grid g = build_grid(DomainSpec{{50.0}, {200.0}, std::nullopt}, n);
    Eigen::VectorXd u = Eigen::VectorXd::Ones(9);
    Eigen::VectorXd v = u;
    CHECK(relative_l2(u, v, g, Region::interior) == 0.0);
    v(4) = 1.5;
    CHECK(relative_l2(u, v, g, Region::interior) == doctest::Approx(0.5 / std::sqrt(7.0)));
}

TEST_CASE("averaging check with constant coefficients has zero residual") {
    const MarketModel model(flat(0.03), flat(0.0), flat(0.0), {flat(0.25)});
    std::vector<RefinementLevel> levels{{{41}, 1.0 / 16.0}, {{81}, 1.0 / 32.0}, {{161}, 1.0 / 64.0}};
    const auto rep = theorem2_check(model, put_problem(41), levels, coarse(), {});
    CHECK(rep.verdict);
    REQUIRE(rep.levels.size() >= 3);
    for (std::size_t k = 0; k < 3; ++k) CHECK(rep.levels[k].measured <= 1e-15);
}

TEST_CASE("left sampling") {
    const MarketModel model(flat(0.03), flat(0.0), flat(0.0),
                            {CoefficientSchedule::linear(0.2, 0.3, 0.0, 1.0)});
    const MarketModel s = sample_left(model, 1.0, 4);
    CHECK(s.sigma(0)(0.0) == doctest::Approx(0.225));
    CHECK(s.sigma(0)(0.3) == doctest::Approx(0.25));
    CHECK(s.sigma(0)(0.99) == doctest::Approx(0.3));
    CHECK(s.breakpoints().size() == 3);
}

TEST_CASE("piecewise sampling is exact when aligned") {
    SUBCASE("constant coefficients") {
        const MarketModel model(flat(0.03), flat(0.0), flat(0.0), {flat(0.25)});
        const auto rep = lemma5_check(model, put_problem(41), {2, 4, 8}, coarse());
        CHECK(rep.verdict);
        for (const auto& l : rep.levels) CHECK(l.measured == 0.0);
    }
    SUBCASE("schedule on the N = 4 subdivision") {
        const MarketModel model(flat(0.03), flat(0.0), flat(0.0),
                                {quarters({0.2, 0.35, 0.25, 0.3})});
        const auto rep = lemma5_check(model, put_problem(41), {4, 8, 16}, coarse());
        CHECK(rep.verdict);
        for (const auto& l : rep.levels) CHECK(l.measured <= 1e-14);
    }
}

TEST_CASE("energy") {
    SUBCASE("drift-free operator decays at every step") {
        // r = sigma^2 / 2 gives b = 0; d shifts q to 0.1.
        const MarketModel model(flat(0.02), flat(0.0), flat(0.08), {flat(0.2)});
        const auto rep = energy_check(model, put_problem(81), coarse());
        CHECK(rep.verdict);
        for (std::size_t k = 1; k < rep.levels.size(); ++k) {
            CHECK(rep.levels[k].measured < rep.levels[k - 1].measured);
        }
    }
    SUBCASE("zero data stays zero") {
        const MarketModel model(flat(0.02), flat(0.0), flat(0.0), {flat(0.2)});
        auto p = put_problem(41);
        p.payoff = PayoffSpec::basket_put(10.0);
        const auto f = solve_time_dependent(model, p, coarse());
        for (const auto& v : f.values) CHECK(v.cwiseAbs().maxCoeff() == 0.0);
    }
}

TEST_CASE("butterfly payoff") {
    const std::array<std::size_t, 1> n{401};
    const Grid g = build_grid(DomainSpec{{20.0}, {500.0}, std::nullopt}, n);
    const auto v = butterfly_values(g, 100.0, 20.0);
    double peak = 0.0;
    for (std::size_t k = 0; k < g.size(); ++k) {
        const double y = std::exp(g.coordinate(0, k));
        if (y <= 80.0 || y >= 120.0) CHECK(v[k] == 0.0);
        peak = std::max(peak, v[k]);
    }
    CHECK(peak > 19.0);
    CHECK(peak <= 20.0);
}

TEST_CASE("monte carlo log-moments") {
    const MarketModel model(
        CoefficientSchedule::piecewise_constant(std::array{0.0, 0.5, 1.0}, std::array{0.02, 0.04}),
        flat(0.0), flat(0.0),
        {CoefficientSchedule::piecewise_constant(std::array{0.0, 0.5, 1.0}, std::array{0.2, 0.3})});
    MCConfig c;
    c.paths = 100000;
    const std::array<double, 1> y0{100.0};
    const auto rep = mc_moment_check(model, y0, 1.0, c);
    CHECK(rep.levels.size() == 2);
    CHECK(rep.verdict);
}

TEST_CASE("semigroup suite") {
    SemigroupOptions o;
    o.seeds = 10;
    const auto rep = semigroup_suite(o);
    CHECK(rep.verdict);
}

}  // TEST_SUITE
