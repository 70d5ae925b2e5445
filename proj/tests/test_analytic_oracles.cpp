#include "tdbs/analytic_oracles.hpp"
#include "tdbs/errors.hpp"

#include <doctest.h>

#include <array>
#include <cmath>
#include <numbers>

using namespace tdbs;

namespace {

CoefficientSchedule halves(double a, double b) {
    return CoefficientSchedule::piecewise_constant(std::array{0.0, 0.5, 1.0}, std::array{a, b});
}

CoefficientSchedule flat(double v) { return CoefficientSchedule::constant(v, 0.0, 1.0); }

constexpr double pi = std::numbers::pi;

}  // namespace

TEST_SUITE("analytic_oracles") {

TEST_CASE("characteristic exponent") {
    const MarketModel model(halves(0.02, 0.04), flat(0.0), flat(0.01), {halves(0.2, 0.3)});
    const std::array<double, 1> zero{0.0};
    CHECK(characteristic_exponent(model, 0.7, zero) == std::complex<double>(0.05, 0.0));

    const MarketModel plain(flat(0.0), flat(0.0), flat(0.0), {flat(0.2)});
    const std::array<double, 1> one{1.0};
    const auto p = characteristic_exponent(plain, 0.3, one);
    CHECK(p.real() == doctest::Approx(4.0 * pi * pi * 0.02).epsilon(1e-14));
    CHECK(p.imag() == doctest::Approx(2.0 * pi * 0.02).epsilon(1e-14));
}

TEST_CASE("integrated exponent against quadrature") {
    const MarketModel model(CoefficientSchedule::linear(0.01, 0.05, 0.0, 1.0), flat(0.0), flat(0.0),
                            {halves(0.2, 0.3)});
    const std::array<double, 1> xi{0.8};
    const int n = 100000;
    std::complex<double> sum = 0.0;
    for (int k = 0; k < n; ++k) sum += characteristic_exponent(model, (k + 0.5) / n, xi);
    sum /= static_cast<double>(n);
    const auto exact = integrated_exponent(model, 0.0, 1.0, xi);
    CHECK(std::abs(exact - sum) <= 1e-9);
}

TEST_CASE("normal cdf") {
    for (double x : {-5.0, -1.3, 0.0, 0.4, 2.2, 6.0}) {
        CHECK(std::abs(normal_cdf(x) - normal_cdf_quadrature(x)) <= 1e-10);
    }
    CHECK(normal_cdf(0.0) == 0.5);
}

TEST_CASE("closed-form prices") {
    const double call = bs_closed_form(100.0, 100.0, 0.05, 0.0, 0.0, 0.2, 1.0, OptionKind::call);
    const double put = bs_closed_form(100.0, 100.0, 0.05, 0.0, 0.0, 0.2, 1.0, OptionKind::put);
    CHECK(std::abs(call - 10.4506) <= 5e-5);
    CHECK(std::abs(put - 5.5735) <= 5e-5);
    CHECK(std::abs(call - put - (100.0 - 100.0 * std::exp(-0.05))) <= 1e-12);
    const double limit = bs_closed_form(100.0, 100.0, 0.05, 0.0, 0.0, 1e-14, 1.0, OptionKind::call);
    CHECK(std::abs(limit - (100.0 - 100.0 * std::exp(-0.05))) <= 1e-12);
    CHECK(std::abs(limit - 4.8771) <= 5e-5);

    // Carry r - m and extra discount d.
    const double c2 = bs_closed_form(90.0, 100.0, 0.04, 0.01, 0.02, 0.3, 2.0, OptionKind::call);
    const double p2 = bs_closed_form(90.0, 100.0, 0.04, 0.01, 0.02, 0.3, 2.0, OptionKind::put);
    const double parity = std::exp(-0.02 * 2.0) * (90.0 * std::exp(-0.01 * 2.0) - 100.0 * std::exp(-0.04 * 2.0));
    CHECK(std::abs(c2 - p2 - parity) <= 1e-12);
}

TEST_CASE("fourier solve reproduces the heat kernel") {
    const double sigma = 0.3, r = 0.04, d = 0.01, t = 0.5;
    const MarketModel model(flat(r), flat(0.0), flat(d), {flat(sigma)});
    const double a = sigma * sigma / 2.0;
    const double b = a - r;
    const double q = r + d;
    FourierGrid grid{{-4.0}, {8.0 / 1024.0}, {1024}};
    const double s2 = 0.05;
    Eigen::VectorXd g(1024);
    for (std::size_t k = 0; k < 1024; ++k) {
        const double x = grid.point(k)[0];
        g(static_cast<Eigen::Index>(k)) = std::exp(-x * x / (2.0 * s2));
    }
    const auto res = fourier_solve(model, grid, g, 0.0, t);
    const double v = s2 + 2.0 * a * t;
    double worst = 0.0;
    for (std::size_t k = 0; k < 1024; ++k) {
        const double x = grid.point(k)[0];
        const double exact =
            std::exp(-q * t) * std::sqrt(s2 / v) * std::exp(-(x - b * t) * (x - b * t) / (2.0 * v));
        worst = std::max(worst, std::abs(res.values(static_cast<Eigen::Index>(k)) - exact));
    }
    CHECK(worst <= 1e-12);
    CHECK(res.imaginary_residue <= 1e-14);
}

TEST_CASE("fourier solve rejects mass at the edges") {
    const MarketModel model(flat(0.0), flat(0.0), flat(0.0), {flat(0.2)});
    FourierGrid grid{{-1.0}, {2.0 / 256.0}, {256}};
    const Eigen::VectorXd g = Eigen::VectorXd::Ones(256);
    CHECK_THROWS_AS(fourier_solve(model, grid, g, 0.0, 1.0), TruncationError);
}

TEST_CASE("multiplier identity") {
    Eigen::MatrixXd corr(2, 2);
    corr << 1.0, 0.3, 0.3, 1.0;
    const std::vector<CoefficientSchedule> rho{flat(1.0), halves(0.6, 0.1), halves(0.6, 0.1), flat(1.0)};
    const MarketModel model(halves(0.02, 0.04), flat(0.005), flat(0.01),
                            {halves(0.2, 0.3), CoefficientSchedule::linear(0.3, 0.15, 0.0, 1.0)}, rho);
    FourierGrid grid{{-2.0, -2.0}, {4.0 / 64.0, 4.0 / 64.0}, {64, 64}};
    CHECK(multiplier_identity_gap(model, grid, 0.0, 1.0) <= 1e-12);
}

}  // TEST_SUITE
