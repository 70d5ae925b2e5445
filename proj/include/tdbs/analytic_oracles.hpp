#pragma once

#include "tdbs/coefficients.hpp"

#include <Eigen/Dense>

#include <complex>
#include <cstddef>
#include <iosfwd>
#include <span>
#include <vector>

namespace tdbs {

/// P(xi) = (2 pi)^2 xi^T a xi + 2 pi i b . xi + q, the Fourier symbol of the
/// log-space operator (a = rho sigma sigma / 2).
struct CharacteristicExponent {
    Eigen::MatrixXd a;
    Eigen::VectorXd b;
    double q = 0.0;

    std::complex<double> operator()(std::span<const double> xi) const;

    static CharacteristicExponent from(const OperatorCoefficients& c) { return {c.a, c.b, c.q}; }
};

/// P(tau, xi) with coefficients taken at market time tau.
std::complex<double> characteristic_exponent(const MarketModel& model, double tau,
                                             std::span<const double> xi);

/// Exact integral of P(., xi) over the market-time window [tau0, T].
std::complex<double> integrated_exponent(const MarketModel& model, double tau0, double maturity,
                                         std::span<const double> xi);

/// Pbar(xi) built from the averaged coefficients.
std::complex<double> averaged_exponent(const AveragedCoefficients& avg,
                                       std::span<const double> xi);

/// Standard normal CDF, 0.5 erfc(-x / sqrt 2).
double normal_cdf(double x);
/// Composite midpoint rule for the normal density on [-8, x].
double normal_cdf_quadrature(double x, std::size_t intervals = 200000);

enum class OptionKind { call, put };

/// Lognormal price with carry r - m and discount e^{-(r + d) tenor}.
double bs_closed_form(double spot, double strike, double r_bar, double m_bar, double d_bar,
                      double sigma_bar, double tenor, OptionKind kind);

/// Periodic grid in log space: node k of axis i sits at lower_i + k h_i.
/// Flat index runs fastest along axis 0.
struct FourierGrid {
    std::vector<double> lower;
    std::vector<double> spacing;
    std::vector<std::size_t> nodes;

    std::size_t dimension() const noexcept { return nodes.size(); }
    std::size_t size() const;
    std::vector<double> point(std::size_t flat) const;
    /// Frequency (cycles per unit x) carried by index k on `axis`.
    double frequency(std::size_t axis, std::size_t k) const;
};

enum class MultiplierMode { time_dependent, averaged };

struct FourierResult {
    Eigen::VectorXd values;
    double imaginary_residue = 0.0;  ///< |Im| / |g|
    double edge_mass = 0.0;          ///< largest relative magnitude in the edge band
};

/// e^{-int P} applied to g by FFT over [tau0, T]. Throws TruncationError when
/// g or the result carries more than 1e-8 relative mass near the edges.
FourierResult fourier_solve(const MarketModel& model, const FourierGrid& grid,
                            const Eigen::VectorXd& g, double tau0, double maturity,
                            MultiplierMode mode = MultiplierMode::time_dependent);

/// Largest |e^{-int P(xi)} - e^{-T Pbar(xi)}| over the frequencies of a grid, with
/// Pbar built from sigma_bar, rho_bar and the mean rates.
double multiplier_identity_gap(const MarketModel& model, const FourierGrid& grid, double tau0,
                               double maturity);

void write_fourier_csv(std::ostream& os, const FourierGrid& grid, const Eigen::VectorXd& values);

}  // namespace tdbs
