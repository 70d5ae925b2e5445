#include "tdbs/coefficients.hpp"
#include "tdbs/errors.hpp"

#include <doctest.h>

#include <array>
#include <cmath>
#include <vector>

using namespace tdbs;

namespace {

CoefficientSchedule halves(double a, double b) {
    const std::array<double, 3> breaks{0.0, 0.5, 1.0};
    const std::array<double, 2> values{a, b};
    return CoefficientSchedule::piecewise_constant(breaks, values);
}

CoefficientSchedule flat(double v) { return CoefficientSchedule::constant(v, 0.0, 1.0); }

// Midpoint rule, used as an independent check of the exact piecewise integrals.
template <class F>
double midpoint(F f, double t0, double t1, int n = 200000) {
    const double h = (t1 - t0) / n;
    double s = 0.0;
    for (int k = 0; k < n; ++k) s += f(t0 + (k + 0.5) * h);
    return s * h;
}

}  // namespace

TEST_SUITE("coefficients") {

TEST_CASE("schedule evaluation") {
    CHECK(flat(0.05)(0.7) == 0.05);
    CHECK(CoefficientSchedule::linear(0.0, 1.0, 0.0, 1.0)(0.25) == doctest::Approx(0.25).epsilon(1e-15));
    const auto s = halves(0.2, 0.3);
    CHECK(s(0.5) == 0.3);
    CHECK(s.left_limit(0.5) == 0.2);
    CHECK(s(1.0) == 0.3);
    CHECK(s.breakpoints() == std::vector<double>{0.5});
    CHECK_THROWS_AS(s(1.5), OutOfRangeError);
}

TEST_CASE("invalid schedules are rejected") {
    CHECK_THROWS_AS(CoefficientSchedule::constant(0.1, 1.0, 0.0), InvalidScheduleError);
    std::vector<Segment> gap{{0.0, 0.4, Profile::constant, 0.1, 0.1},
                             {0.5, 1.0, Profile::constant, 0.2, 0.2}};
    CHECK_THROWS_AS(CoefficientSchedule{gap}, InvalidScheduleError);
}

TEST_CASE("scalar averages") {
    CHECK(average_scalar(flat(0.05), 0.0, 1.0) == 0.05);
    CHECK(std::abs(average_scalar(halves(0.02, 0.04), 0.0, 1.0) - 0.03) <= 1e-15);
    CHECK(std::abs(average_scalar(CoefficientSchedule::linear(0.0, 1.0, 0.0, 1.0), 0.0, 1.0) - 0.5) <=
          1e-15);
}

TEST_CASE("volatility averages are root mean square") {
    CHECK(average_vol(flat(0.25), 0.0, 1.0) == 0.25);
    CHECK(std::abs(average_vol(halves(0.2, 0.3), 0.0, 1.0) - std::sqrt(0.065)) <= 1e-15);
    CHECK(std::abs(average_vol(CoefficientSchedule::linear(0.0, 1.0, 0.0, 1.0), 0.0, 1.0) -
                   std::sqrt(1.0 / 3.0)) <= 1e-15);
    CHECK_THROWS_AS(average_vol(flat(0.0), 0.0, 1.0), InvalidScheduleError);
    CHECK_THROWS_AS(average_vol(CoefficientSchedule::linear(-0.1, 0.3, 0.0, 1.0), 0.0, 1.0),
                    InvalidScheduleError);
}

TEST_CASE("correlation averages are volatility weighted") {
    CHECK(average_correlation(flat(0.2), flat(0.3), flat(0.3), 0.0, 1.0) == 0.3);
    CHECK(std::abs(average_correlation(flat(0.2), flat(0.2), halves(0.5, 0.3), 0.0, 1.0) - 0.4) <=
          1e-15);

    const auto s1 = halves(0.1, 0.3);
    const auto s2 = flat(0.2);
    const auto rho = flat(0.5);
    const double exact = average_correlation(s1, s2, rho, 0.0, 1.0);
    CHECK(std::abs(exact - 0.02 / (std::sqrt(0.05) * 0.2)) <= 1e-15);

    const double num = midpoint([&](double t) { return rho(t) * s1(t) * s2(t); }, 0.0, 1.0);
    const double v1 = midpoint([&](double t) { return s1(t) * s1(t); }, 0.0, 1.0);
    const double v2 = midpoint([&](double t) { return s2(t) * s2(t); }, 0.0, 1.0);
    CHECK(std::abs(exact - num / std::sqrt(v1 * v2)) <= 1e-9);
}

TEST_CASE("product integrals of linear pieces are exact") {
    const auto a = CoefficientSchedule::linear(0.1, 0.4, 0.0, 2.0);
    const auto b = halves(0.3, 0.7).shifted(0.0);
    const auto c = CoefficientSchedule::linear(1.0, -1.0, 0.0, 2.0);
    const std::array<const CoefficientSchedule*, 3> f{&a, &a, &c};
    const double exact = integrate_product(f, 0.2, 1.7);
    const double num = midpoint([&](double t) { return a(t) * a(t) * c(t); }, 0.2, 1.7);
    CHECK(std::abs(exact - num) <= 1e-10);
    const std::array<const CoefficientSchedule*, 2> g{&b, &b};
    CHECK(std::abs(integrate_product(g, 0.0, 1.0) - 0.5 * (0.09 + 0.49)) <= 1e-15);
}

TEST_CASE("operator coefficients from market constants") {
    Eigen::VectorXd sigma(2);
    sigma << 0.2, 0.3;
    Eigen::MatrixXd rho(2, 2);
    rho << 1.0, 0.5, 0.5, 1.0;
    const auto c = market_to_operator(0.05, 0.01, 0.02, sigma, rho);
    CHECK(c.a(0, 0) == doctest::Approx(0.02));
    CHECK(c.a(0, 1) == doctest::Approx(0.015));
    CHECK(c.a(1, 1) == doctest::Approx(0.045));
    CHECK(c.b(0) == doctest::Approx(0.02 - 0.04));
    CHECK(c.b(1) == doctest::Approx(0.045 - 0.04));
    CHECK(c.q == doctest::Approx(0.07));
}

TEST_CASE("averaged operator coefficients") {
    SUBCASE("n = 1 piecewise volatility") {
        const MarketModel model(flat(0.0), flat(0.0), flat(0.0), {halves(0.2, 0.3)});
        const auto avg = averaged_operator_coeffs(model, 0.0, 1.0);
        CHECK(std::abs(avg.a_bar(0, 0) - 0.0325) <= 1e-15);
        CHECK(std::abs(avg.b_bar(0) - 0.0325) <= 1e-15);
        CHECK(avg.q_bar == 0.0);
        CHECK(std::abs(avg.sigma_bar(0) - std::sqrt(0.065)) <= 1e-15);
    }
    SUBCASE("constant model passes through") {
        Eigen::MatrixXd corr(2, 2);
        corr << 1.0, 0.3, 0.3, 1.0;
        const MarketModel model(flat(0.03), flat(0.01), flat(0.02), {flat(0.2), flat(0.25)},
                                constant_correlation(corr, 0.0, 1.0));
        const auto avg = averaged_operator_coeffs(model, 0.0, 1.0);
        const auto inst = operator_coefficients_at(model, 0.4);
        CHECK((avg.a_bar - inst.a).cwiseAbs().maxCoeff() <= 1e-15);
        CHECK((avg.b_bar - inst.b).cwiseAbs().maxCoeff() <= 1e-15);
        CHECK(std::abs(avg.q_bar - inst.q) <= 1e-15);
        CHECK(std::abs(avg.rho_bar(0, 1) - 0.3) <= 1e-15);
    }
    SUBCASE("time reversal leaves the averages unchanged") {
        const auto rho = std::vector<CoefficientSchedule>{flat(1.0), halves(0.6, -0.1), halves(0.6, -0.1),
                                                          flat(1.0)};
        const MarketModel model(CoefficientSchedule::linear(0.01, 0.05, 0.0, 1.0), halves(0.0, 0.01),
                                flat(0.02),
                                {halves(0.2, 0.3), CoefficientSchedule::linear(0.1, 0.4, 0.0, 1.0)},
                                rho);
        const auto a = averaged_operator_coeffs(model, 0.0, 1.0);
        const auto b = averaged_operator_coeffs(model.reversed(), 0.0, 1.0);
        const auto c = market_to_operator(a.r_bar, a.m_bar, a.d_bar, a.sigma_bar, a.rho_bar);
        CHECK((c.a - a.a_bar).cwiseAbs().maxCoeff() <= 1e-12);
        CHECK((c.b - a.b_bar).cwiseAbs().maxCoeff() <= 1e-12);
        CHECK(std::abs(c.q - a.q_bar) <= 1e-12);
        CHECK((a.a_bar - b.a_bar).cwiseAbs().maxCoeff() <= 1e-15);
        CHECK((a.b_bar - b.b_bar).cwiseAbs().maxCoeff() <= 1e-15);
        CHECK((a.rho_bar - b.rho_bar).cwiseAbs().maxCoeff() <= 1e-15);
        CHECK(std::abs(a.q_bar - b.q_bar) <= 1e-15);
    }
}

TEST_CASE("uniform ellipticity") {
    SUBCASE("n = 1") {
        const MarketModel model(flat(0.0), flat(0.0), flat(0.0), {flat(0.2)});
        CHECK(model.ellipticity_constant() == doctest::Approx(0.04).epsilon(1e-14));
    }
    SUBCASE("n = 2, rho = 0.5") {
        Eigen::MatrixXd corr(2, 2);
        corr << 1.0, 0.5, 0.5, 1.0;
        const MarketModel model(flat(0.0), flat(0.0), flat(0.0), {flat(0.2), flat(0.3)},
                                constant_correlation(corr, 0.0, 1.0));
        // roots of l^2 - 0.13 l + 0.0027
        const double expected = (0.13 - std::sqrt(0.13 * 0.13 - 4.0 * 0.0027)) / 2.0;
        CHECK(std::abs(model.ellipticity_constant() - expected) <= 1e-14);
        CHECK(std::abs(model.ellipticity_constant() - 0.0259490) <= 1e-6);
    }
    SUBCASE("perfect correlation is rejected") {
        Eigen::MatrixXd corr(2, 2);
        corr << 1.0, 1.0, 1.0, 1.0;
        CHECK_THROWS_AS(MarketModel(flat(0.0), flat(0.0), flat(0.0), {flat(0.2), flat(0.2)},
                                    constant_correlation(corr, 0.0, 1.0)),
                        EllipticityError);
    }
}

TEST_CASE("model breakpoints merge every schedule") {
    const MarketModel model(halves(0.02, 0.04), flat(0.0), flat(0.0),
                            {CoefficientSchedule::piecewise_constant(std::array{0.0, 0.25, 1.0},
                                                                     std::array{0.2, 0.3})});
    CHECK(model.breakpoints() == std::vector<double>{0.25, 0.5});
}

}  // TEST_SUITE
