#include "tdbs/analytic_oracles.hpp"

#include "tdbs/errors.hpp"

#include <fftw3.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <ostream>

namespace tdbs {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kWrapThreshold = 1e-8;

std::complex<double> symbol(const Eigen::MatrixXd& a, const Eigen::VectorXd& b, double q,
                            std::span<const double> xi) {
    const auto n = static_cast<std::size_t>(b.size());
    if (xi.size() != n) throw ShapeError("frequency vector has the wrong dimension");
    double quad = 0.0;
    double lin = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const auto ii = static_cast<Eigen::Index>(i);
        lin += b(ii) * xi[i];
        for (std::size_t j = 0; j < n; ++j) {
            quad += a(ii, static_cast<Eigen::Index>(j)) * xi[i] * xi[j];
        }
    }
    return {kTwoPi * kTwoPi * quad + q, kTwoPi * lin};
}

/// Window integrals of a, b and q (not divided by the length).
CharacteristicExponent integrated_coefficients(const MarketModel& model, double t0, double t1) {
    const std::size_t n = model.dimension();
    const auto ni = static_cast<Eigen::Index>(n);
    const double int_r = integrate_product(std::array{&model.r()}, t0, t1);
    const double int_m = integrate_product(std::array{&model.m()}, t0, t1);
    const double int_d = integrate_product(std::array{&model.d()}, t0, t1);
    CharacteristicExponent c;
    c.a.resize(ni, ni);
    c.b.resize(ni);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            c.a(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                0.5 * integrate_product(
                          std::array{&model.rho(i, j), &model.sigma(i), &model.sigma(j)}, t0, t1);
        }
        c.b(static_cast<Eigen::Index>(i)) =
            0.5 * integrate_product(std::array{&model.sigma(i), &model.sigma(i)}, t0, t1) -
            (int_r - int_m);
    }
    c.q = int_r + int_d;
    return c;
}

/// Per-node multiplier; at a Nyquist index the two aliased frequencies are
/// averaged, which keeps the multiplier conjugate-symmetric.
template <class Exponent>
std::vector<std::complex<double>> multipliers(const FourierGrid& grid, Exponent&& exponent) {
    const std::size_t n = grid.dimension();
    const std::size_t total = grid.size();
    std::vector<std::complex<double>> out(total);
    std::vector<double> xi(n);
    std::vector<std::size_t> idx(n, 0);
    for (std::size_t flat = 0; flat < total; ++flat) {
        std::size_t rem = flat;
        std::vector<std::size_t> nyquist;
        for (std::size_t i = 0; i < n; ++i) {
            idx[i] = rem % grid.nodes[i];
            rem /= grid.nodes[i];
            xi[i] = grid.frequency(i, idx[i]);
            if (grid.nodes[i] % 2 == 0 && idx[i] == grid.nodes[i] / 2) nyquist.push_back(i);
        }
        if (nyquist.empty()) {
            out[flat] = std::exp(-exponent(xi));
            continue;
        }
        std::complex<double> sum = 0.0;
        const std::size_t combos = std::size_t{1} << nyquist.size();
        for (std::size_t mask = 0; mask < combos; ++mask) {
            std::vector<double> alt = xi;
            for (std::size_t k = 0; k < nyquist.size(); ++k) {
                if (mask & (std::size_t{1} << k)) alt[nyquist[k]] = -alt[nyquist[k]];
            }
            sum += std::exp(-exponent(alt));
        }
        out[flat] = sum / static_cast<double>(combos);
    }
    return out;
}

double edge_mass(const FourierGrid& grid, const Eigen::VectorXd& v) {
    const double peak = v.cwiseAbs().maxCoeff();
    if (peak == 0.0) return 0.0;
    double edge = 0.0;
    for (std::size_t flat = 0; flat < grid.size(); ++flat) {
        std::size_t rem = flat;
        bool near = false;
        for (std::size_t i = 0; i < grid.dimension(); ++i) {
            const std::size_t k = rem % grid.nodes[i];
            rem /= grid.nodes[i];
            const std::size_t band = std::max<std::size_t>(1, grid.nodes[i] / 32);
            if (k < band || k >= grid.nodes[i] - band) near = true;
        }
        if (near) edge = std::max(edge, std::abs(v(static_cast<Eigen::Index>(flat))));
    }
    return edge / peak;
}

}  // namespace

std::complex<double> CharacteristicExponent::operator()(std::span<const double> xi) const {
    return symbol(a, b, q, xi);
}

std::complex<double> characteristic_exponent(const MarketModel& model, double tau,
                                             std::span<const double> xi) {
    return CharacteristicExponent::from(operator_coefficients_at(model, tau))(xi);
}

std::complex<double> integrated_exponent(const MarketModel& model, double tau0, double maturity,
                                         std::span<const double> xi) {
    return integrated_coefficients(model, tau0, maturity)(xi);
}

std::complex<double> averaged_exponent(const AveragedCoefficients& avg,
                                       std::span<const double> xi) {
    return symbol(avg.a_bar, avg.b_bar, avg.q_bar, xi);
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

double normal_cdf_quadrature(double x, std::size_t intervals) {
    constexpr double lo = -8.0;
    if (x <= lo) return 0.0;
    const double h = (x - lo) / static_cast<double>(intervals);
    const double norm = 1.0 / std::sqrt(kTwoPi);
    double sum = 0.0;
    for (std::size_t k = 0; k < intervals; ++k) {
        const double s = lo + (static_cast<double>(k) + 0.5) * h;
        sum += std::exp(-0.5 * s * s);
    }
    return norm * h * sum;
}

double bs_closed_form(double spot, double strike, double r_bar, double m_bar, double d_bar,
                      double sigma_bar, double tenor, OptionKind kind) {
    if (!(tenor > 0.0)) throw InvalidIntervalError("tenor must be positive");
    if (!(sigma_bar >= 0.0)) throw DegenerateVolatilityError("volatility must be non-negative");
    const double discount = std::exp(-(r_bar + d_bar) * tenor);
    const double forward = spot * std::exp((r_bar - m_bar) * tenor);
    const double sd = sigma_bar * std::sqrt(tenor);
    if (sd < 1e-12) {
        const double intrinsic =
            kind == OptionKind::call ? forward - strike : strike - forward;
        return discount * std::max(intrinsic, 0.0);
    }
    const double d1 = (std::log(forward / strike) + 0.5 * sd * sd) / sd;
    const double d2 = d1 - sd;
    if (kind == OptionKind::call) {
        return discount * (forward * normal_cdf(d1) - strike * normal_cdf(d2));
    }
    return discount * (strike * normal_cdf(-d2) - forward * normal_cdf(-d1));
}

// ---------------------------------------------------------------------------

std::size_t FourierGrid::size() const {
    std::size_t total = 1;
    for (std::size_t n : nodes) total *= n;
    return total;
}

std::vector<double> FourierGrid::point(std::size_t flat) const {
    std::vector<double> x(dimension());
    for (std::size_t i = 0; i < dimension(); ++i) {
        const std::size_t k = flat % nodes[i];
        flat /= nodes[i];
        x[i] = lower[i] + static_cast<double>(k) * spacing[i];
    }
    return x;
}

double FourierGrid::frequency(std::size_t axis, std::size_t k) const {
    const auto n = static_cast<double>(nodes[axis]);
    const auto kk = static_cast<double>(k);
    const double signed_k = 2 * k <= nodes[axis] ? kk : kk - n;
    return signed_k / (n * spacing[axis]);
}

FourierResult fourier_solve(const MarketModel& model, const FourierGrid& grid,
                            const Eigen::VectorXd& g, double tau0, double maturity,
                            MultiplierMode mode) {
    const std::size_t n = grid.dimension();
    if (n == 0 || n > 2) throw ShapeError("Fourier oracle supports one or two assets");
    if (n != model.dimension()) throw ShapeError("Fourier grid dimension does not match the model");
    if (grid.lower.size() != n || grid.spacing.size() != n) throw ShapeError("malformed Fourier grid");
    if (static_cast<std::size_t>(g.size()) != grid.size()) {
        throw ShapeError("initial field does not match the Fourier grid");
    }
    if (!(maturity > tau0)) throw InvalidIntervalError("maturity must exceed tau0");

    const double input_edge = edge_mass(grid, g);
    if (input_edge > kWrapThreshold) {
        throw TruncationError("payoff carries relative mass " + std::to_string(input_edge) +
                              " near the edges of the Fourier box");
    }

    std::vector<std::complex<double>> m;
    if (mode == MultiplierMode::time_dependent) {
        const CharacteristicExponent integral = integrated_coefficients(model, tau0, maturity);
        m = multipliers(grid, [&](std::span<const double> xi) { return integral(xi); });
    } else {
        const auto avg = averaged_operator_coeffs(model, tau0, maturity);
        const double length = maturity - tau0;
        m = multipliers(grid, [&](std::span<const double> xi) {
            return length * averaged_exponent(avg, xi);
        });
    }

    const std::size_t total = grid.size();
    auto* buffer = static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * total));
    std::array<int, 2> dims{};
    for (std::size_t i = 0; i < n; ++i) dims[i] = static_cast<int>(grid.nodes[n - 1 - i]);
    const fftw_plan forward = fftw_plan_dft(static_cast<int>(n), dims.data(), buffer, buffer,
                                            FFTW_FORWARD, FFTW_ESTIMATE);
    const fftw_plan backward = fftw_plan_dft(static_cast<int>(n), dims.data(), buffer, buffer,
                                             FFTW_BACKWARD, FFTW_ESTIMATE);

    for (std::size_t k = 0; k < total; ++k) {
        buffer[k][0] = g(static_cast<Eigen::Index>(k));
        buffer[k][1] = 0.0;
    }
    fftw_execute(forward);
    for (std::size_t k = 0; k < total; ++k) {
        const std::complex<double> v = std::complex<double>(buffer[k][0], buffer[k][1]) * m[k];
        buffer[k][0] = v.real();
        buffer[k][1] = v.imag();
    }
    fftw_execute(backward);

    FourierResult out;
    out.values.resize(static_cast<Eigen::Index>(total));
    Eigen::VectorXd imag(static_cast<Eigen::Index>(total));
    const double scale = 1.0 / static_cast<double>(total);
    for (std::size_t k = 0; k < total; ++k) {
        out.values(static_cast<Eigen::Index>(k)) = buffer[k][0] * scale;
        imag(static_cast<Eigen::Index>(k)) = buffer[k][1] * scale;
    }
    fftw_destroy_plan(forward);
    fftw_destroy_plan(backward);
    fftw_free(buffer);

    const double gnorm = g.norm();
    out.imaginary_residue = gnorm > 0.0 ? imag.norm() / gnorm : imag.norm();
    out.edge_mass = edge_mass(grid, out.values);
    if (out.edge_mass > kWrapThreshold) {
        throw TruncationError("solution wraps around the Fourier box (relative edge mass " +
                              std::to_string(out.edge_mass) + ")");
    }
    return out;
}

double multiplier_identity_gap(const MarketModel& model, const FourierGrid& grid, double tau0,
                               double maturity) {
    const CharacteristicExponent integral = integrated_coefficients(model, tau0, maturity);
    // Rebuilt from the market-level averages (RMS sigma, weighted rho, mean rates),
    // not from the directly averaged operator coefficients.
    const auto avg = averaged_operator_coeffs(model, tau0, maturity);
    AveragedCoefficients market = avg;
    const auto c = market_to_operator(avg.r_bar, avg.m_bar, avg.d_bar, avg.sigma_bar, avg.rho_bar);
    market.a_bar = c.a;
    market.b_bar = c.b;
    market.q_bar = c.q;
    const double length = maturity - tau0;
    double gap = 0.0;
    std::vector<double> xi(grid.dimension());
    for (std::size_t flat = 0; flat < grid.size(); ++flat) {
        std::size_t rem = flat;
        for (std::size_t i = 0; i < grid.dimension(); ++i) {
            xi[i] = grid.frequency(i, rem % grid.nodes[i]);
            rem /= grid.nodes[i];
        }
        const auto lhs = std::exp(-integral(xi));
        const auto rhs = std::exp(-length * averaged_exponent(market, xi));
        gap = std::max(gap, std::abs(lhs - rhs));
    }
    return gap;
}

void write_fourier_csv(std::ostream& os, const FourierGrid& grid, const Eigen::VectorXd& values) {
    const auto old_precision = os.precision(17);
    for (std::size_t i = 0; i < grid.dimension(); ++i) os << (i ? "," : "") << "x" << i;
    os << ",value\n";
    for (std::size_t flat = 0; flat < grid.size(); ++flat) {
        for (double x : grid.point(flat)) os << x << ",";
        os << values(static_cast<Eigen::Index>(flat)) << "\n";
    }
    os.precision(old_precision);
}

}  // namespace tdbs
