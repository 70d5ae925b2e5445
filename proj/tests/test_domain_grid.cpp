#include "tdbs/domain_grid.hpp"
#include "tdbs/errors.hpp"

#include <doctest.h>

#include <array>
#include <cmath>

using namespace tdbs;

TEST_SUITE("domain_grid") {

TEST_CASE("log transform") {
    const std::array<double, 2> y{1.0, 1.0};
    CHECK(log_transform(y) == std::vector<double>{0.0, 0.0});
    const std::array<double, 2> z{std::exp(1.0), std::exp(2.0)};
    const auto x = log_transform(z);
    CHECK(x[0] == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(x[1] == doctest::Approx(2.0).epsilon(1e-15));
    const std::array<double, 1> bad{-1.0};
    CHECK_THROWS_AS(log_transform(bad), DomainError);
}

TEST_CASE("one-dimensional classification") {
    const DomainSpec d{{50.0}, {200.0}, std::nullopt};
    const std::array<std::size_t, 1> n{5};
    const Grid g = build_grid(d, n);
    CHECK(g.size() == 5);
    CHECK(g.interior_count() == 3);
    CHECK(g.node_class(0) == NodeClass::dirichlet);
    CHECK(g.node_class(4) == NodeClass::dirichlet);
    for (std::size_t k = 1; k < 4; ++k) CHECK(g.node_class(k) == NodeClass::interior);
    CHECK(g.coordinate(0, 4) == doctest::Approx(std::log(200.0)));
}

TEST_CASE("invalid boxes") {
    CHECK_THROWS_AS((DomainSpec{{0.0}, {200.0}, std::nullopt}.validate()), DomainError);
    CHECK_THROWS_AS((DomainSpec{{200.0}, {50.0}, std::nullopt}.validate()), DomainError);
}

TEST_CASE("sum barrier below every node") {
    // Above the corner sum 100, below every interior sum.
    const DomainSpec d{{50.0, 50.0}, {200.0, 200.0}, 110.0};
    const std::array<std::size_t, 2> n{11, 11};
    CHECK_THROWS_AS(build_grid(d, n), DegenerateDomainError);
}

TEST_CASE("staircase mask matches a brute-force scan") {
    const DomainSpec d{{50.0, 50.0}, {200.0, 200.0}, 300.0};
    const std::array<std::size_t, 2> n{41, 41};
    const Grid g = build_grid(d, n);
    std::size_t dirichlet = 0;
    for (std::size_t i = 0; i < 41; ++i) {
        for (std::size_t j = 0; j < 41; ++j) {
            const double y1 = std::exp(g.coordinate(0, i));
            const double y2 = std::exp(g.coordinate(1, j));
            const bool face = i == 0 || j == 0 || i == 40 || j == 40;
            const bool out = face || y1 + y2 >= 300.0;
            dirichlet += out;
            const std::array<std::size_t, 2> mi{i, j};
            CHECK((g.node_class(g.flat_index(mi)) == NodeClass::dirichlet) == out);
        }
    }
    CHECK(g.size() - g.interior_count() == dirichlet);
}

TEST_CASE("flat and multi indices round trip") {
    const DomainSpec d{{50.0, 60.0, 70.0}, {100.0, 110.0, 120.0}, std::nullopt};
    const std::array<std::size_t, 3> n{5, 6, 7};
    const Grid g = build_grid(d, n);
    CHECK(g.stride(0) == 1);
    CHECK(g.stride(1) == 5);
    CHECK(g.stride(2) == 30);
    for (std::size_t f = 0; f < g.size(); ++f) CHECK(g.flat_index(g.multi_index(f)) == f);
}

TEST_CASE("interpolation is exact for multilinear fields") {
    const DomainSpec d{{50.0, 50.0}, {200.0, 200.0}, std::nullopt};
    const std::array<std::size_t, 2> n{9, 7};
    const Grid g = build_grid(d, n);
    Eigen::VectorXd v(static_cast<Eigen::Index>(g.size()));
    auto f = [](double x, double y) { return 1.0 + 2.0 * x - y + 0.5 * x * y; };
    for (std::size_t k = 0; k < g.size(); ++k) {
        const auto p = g.point(k);
        v(static_cast<Eigen::Index>(k)) = f(p[0], p[1]);
    }
    const std::array<double, 2> x{std::log(97.0), std::log(133.0)};
    CHECK(g.interpolate(v, x) == doctest::Approx(f(x[0], x[1])).epsilon(1e-13));
}

TEST_CASE("payoffs") {
    const auto put = PayoffSpec::basket_put(100.0);
    CHECK(put(std::array{40.0, 30.0}) == 30.0);
    CHECK(put(std::array{80.0, 60.0}) == 0.0);
    CHECK(PayoffSpec::basket_call(100.0)(std::array{80.0, 60.0}) == 40.0);
    CHECK(PayoffSpec::vanilla_put(100.0, 1)(std::array{10.0, 60.0}) == 40.0);

    const DomainSpec d{{50.0}, {200.0}, std::nullopt};
    const std::array<std::size_t, 1> n{5};
    const Grid g = build_grid(d, n);
    const Eigen::VectorXd v = evaluate_payoff(PayoffSpec::basket_put(300.0), g);
    CHECK(v(0) == 0.0);
    CHECK(v(4) == 0.0);
    CHECK(v(2) == doctest::Approx(200.0));
}

TEST_CASE("scatter and gather") {
    const DomainSpec d{{50.0, 50.0}, {200.0, 200.0}, 300.0};
    const std::array<std::size_t, 2> n{9, 9};
    const Grid g = build_grid(d, n);
    const Eigen::VectorXd inner = Eigen::VectorXd::LinSpaced(
        static_cast<Eigen::Index>(g.interior_count()), 1.0, 2.0);
    const Eigen::VectorXd full = g.scatter(inner);
    CHECK(g.gather(full) == inner);
    for (std::size_t k = 0; k < g.size(); ++k) {
        if (g.node_class(k) == NodeClass::dirichlet) CHECK(full(static_cast<Eigen::Index>(k)) == 0.0);
    }
}

}  // TEST_SUITE
